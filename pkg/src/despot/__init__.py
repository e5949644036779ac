"""Online POMDP planning with regularized DESPOT."""
from .anytime import AnytimeConfig, SearchStats, build_despot, plan_step
from .belief import ExactBelief, ParticleBelief, exact_update, sample_scenarios, sir_update
from .bounds import RolloutLower, make_default_policy, make_upper_bound
from .core import ContractViolation, Model, ScenarioStream, UnsupportedCapability
from .domains import make_domain
from .dp import DpResult, solve_full, truncation_depth
from .tree import DespotTree, PolicyTree, extract_root_action

__version__ = "0.1.0"
