"""Tag: chase a target that runs away, on the classic 29-cell map."""
from __future__ import annotations

from ..core import Model, StepOutcome

NORTH, SOUTH, EAST, WEST, TAG = 0, 1, 2, 3, 4
_MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1))

# '#' marks free cells: two full bottom rows plus a 3-wide tower in columns 5-7.
TAG_MAP = (
    ".....###..",
    ".....###..",
    ".....###..",
    "##########",
    "##########",
)


class TagModel(Model):
    """State ``robot * 30 + target``; ``target == 29`` means the target was tagged.

    The target moves away from the robot's pre-move position with
    probability ``flee_prob`` (uniformly among moves that strictly increase
    Manhattan distance; it stays when none exists) and stays otherwise.
    Walls make robot moves no-ops. The robot observes the target's cell only
    when both share it, else the not-seen symbol ``num_cells``.
    """

    name = "tag"
    num_actions = 5
    action_names = ("north", "south", "east", "west", "tag")
    default_policy_name = "mode-mdp"
    default_ubound = "ho-mdp"
    # a full-depth trellis costs minutes per step; deeper nodes use the MDP values alone
    default_ho_horizon = 4

    def __init__(self, discount: float = 0.95, flee_prob: float = 0.8, grid=TAG_MAP):
        self.discount = discount
        self.flee_prob = flee_prob
        self.cells = [(r, c) for r, row in enumerate(grid) for c, ch in enumerate(row) if ch == "#"]
        self.index = {rc: i for i, rc in enumerate(self.cells)}
        self.num_cells = len(self.cells)
        self.tagged = self.num_cells
        self.not_seen = self.num_cells
        self.stride = self.num_cells + 1
        self.num_states = self.num_cells * self.stride
        self.max_reward = 10.0
        self.min_reward = -10.0
        self.neighbours = [[self._move(i, m) for m in range(4)] for i in range(self.num_cells)]
        self._flee = [
            [self._flee_table(t, r) for r in range(self.num_cells)] for t in range(self.num_cells)
        ]

    @property
    def tabular(self) -> bool:
        return True

    def _move(self, i: int, m: int) -> int:
        r, c = self.cells[i]
        dr, dc = _MOVES[m]
        return self.index.get((r + dr, c + dc), i)

    def distance(self, i: int, j: int) -> int:
        (r1, c1), (r2, c2) = self.cells[i], self.cells[j]
        return abs(r1 - r2) + abs(c1 - c2)

    def _flee_table(self, t: int, robot: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
        """Target successors and their cumulative probabilities."""
        d = self.distance(t, robot)
        away = []
        for m in range(4):
            nt = self._move(t, m)
            if nt != t and self.distance(nt, robot) > d and nt not in away:
                away.append(nt)
        if not away:
            return (t,), (1.0,)
        p = self.flee_prob / len(away)
        succ = tuple(away) + (t,)
        cum = tuple(p * (k + 1) for k in range(len(away))) + (1.0,)
        return succ, cum

    def decode(self, s) -> tuple[int, int]:
        return divmod(s, self.stride)

    def is_terminal(self, s) -> bool:
        return s % self.stride == self.tagged

    def reward(self, s, a: int) -> float:
        robot, target = divmod(s, self.stride)
        if target == self.tagged:
            return 0.0
        if a == TAG:
            return 10.0 if robot == target else -10.0
        return -1.0

    def step(self, s, a, phi):
        robot, target = divmod(s, self.stride)
        if a == TAG:
            if robot == target:
                return StepOutcome(robot * self.stride + self.tagged, robot, 10.0)
            r, new_robot = -10.0, robot
        else:
            r, new_robot = -1.0, self.neighbours[robot][a]
        succ, cum = self._flee[target][robot]
        k = 0
        while phi >= cum[k] and k < len(cum) - 1:
            k += 1
        new_target = succ[k]
        z = new_target if new_target == new_robot else self.not_seen
        return StepOutcome(new_robot * self.stride + new_target, z, r)

    def observe(self, s_next) -> int:
        robot, target = divmod(s_next, self.stride)
        if target == self.tagged or target == robot:
            return robot
        return self.not_seen

    def obs_prob(self, s_next, a, z) -> float:
        return 1.0 if z == self.observe(s_next) else 0.0

    def states(self):
        return list(range(self.num_states))

    def observations(self):
        return list(range(self.num_cells + 1))

    def transition(self, s, a):
        robot, target = divmod(s, self.stride)
        if target == self.tagged:
            return [(s, 1.0)]
        if a == TAG and robot == target:
            return [(robot * self.stride + self.tagged, 1.0)]
        new_robot = robot if a == TAG else self.neighbours[robot][a]
        succ, cum = self._flee[target][robot]
        out: dict[int, float] = {}
        lo = 0.0
        for t, hi in zip(succ, cum):
            ns = new_robot * self.stride + t
            out[ns] = out.get(ns, 0.0) + hi - lo
            lo = hi
        return list(out.items())

    def sample_initial_state(self, rng):
        robot = int(rng.integers(self.num_cells))
        target = int(rng.integers(self.num_cells))
        return robot * self.stride + target

    def initial_belief(self, start):
        robot = start // self.stride
        p = 1.0 / self.num_cells
        return [(robot * self.stride + t, p) for t in range(self.num_cells)]


def make_tag(discount: float = 0.95) -> TagModel:
    return TagModel(discount)
