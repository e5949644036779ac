"""Benchmark domains and the name registry used by the harness."""
from __future__ import annotations

from typing import Callable

from ..core import Model
from .adventurer import AdventurerModel, make_adventurer
from .bridge import BridgeModel, make_bridge
from .rocksample import RockSampleModel, make_rocksample
from .tabular import TabularModel, make_random_tabular
from .tag import TagModel, make_tag

REGISTRY: dict[str, Callable[..., Model]] = {
    "tag": make_tag,
    "rocksample-7-8": lambda discount=0.95: make_rocksample(7, 8, discount=discount),
    "rocksample-11-11": lambda discount=0.95: make_rocksample(11, 11, discount=discount),
    "bridge": make_bridge,
    "adventurer-2": lambda discount=0.95: make_adventurer((101, 150), discount),
    "adventurer-50": lambda discount=0.95: make_adventurer(tuple(range(101, 151)), discount),
}


def make_domain(name: str, discount: float = 0.95) -> Model:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown domain {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    return factory(discount=discount)


__all__ = [
    "AdventurerModel",
    "BridgeModel",
    "RockSampleModel",
    "TabularModel",
    "TagModel",
    "REGISTRY",
    "make_adventurer",
    "make_bridge",
    "make_domain",
    "make_random_tabular",
    "make_rocksample",
    "make_tag",
]
