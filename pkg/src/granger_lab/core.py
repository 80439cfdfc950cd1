"""Shared domain types: time series, lag specs, and the causal-graph vocabulary.

Every other module imports from here. All types are immutable after
construction and safe to share across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable

import numpy as np

if TYPE_CHECKING:
    from .criteria import TestOutcome


class Link(str, Enum):
    """Directed forward links among the three series."""

    XY = "x->y"
    XZ = "x->z"
    YZ = "y->z"


FORWARD_LINKS = (Link.XY, Link.XZ, Link.YZ)


class TopologyKind(str, Enum):
    COMPLETE = "complete"
    DRIVER = "driver"
    INDIRECT = "indirect"
    NULL = "null"
    OTHER = "other"


_NAMED_EDGE_SETS = {
    frozenset({Link.XY, Link.XZ, Link.YZ}): TopologyKind.COMPLETE,
    frozenset({Link.XY, Link.XZ}): TopologyKind.DRIVER,
    frozenset({Link.XY, Link.YZ}): TopologyKind.INDIRECT,
    frozenset(): TopologyKind.NULL,
}


@dataclass(frozen=True)
class TopologyLabel:
    """A causal topology over (X, Y, Z), identified by its forward edge-set."""

    kind: TopologyKind
    edges: frozenset[Link]

    @classmethod
    def from_edges(cls, edges: Iterable[Link]) -> "TopologyLabel":
        edge_set = frozenset(edges)
        kind = _NAMED_EDGE_SETS.get(edge_set, TopologyKind.OTHER)
        return cls(kind=kind, edges=edge_set)

    @classmethod
    def driver(cls) -> "TopologyLabel":
        return cls.from_edges({Link.XY, Link.XZ})

    @classmethod
    def indirect(cls) -> "TopologyLabel":
        return cls.from_edges({Link.XY, Link.YZ})

    @classmethod
    def complete(cls) -> "TopologyLabel":
        return cls.from_edges({Link.XY, Link.XZ, Link.YZ})

    @classmethod
    def null(cls) -> "TopologyLabel":
        return cls.from_edges(())


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real-valued samples; the unit of all generation and analysis."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("a time series must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class LagSpec:
    """Look-back depths: the target's own lags plus one lag count per predictor."""

    target_lags: int
    predictor_lags: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.target_lags < 1:
            raise ValueError("target_lags must be >= 1")
        if any(p < 1 for p in self.predictor_lags):
            raise ValueError("every predictor lag count must be >= 1")
        object.__setattr__(self, "predictor_lags", tuple(self.predictor_lags))

    @property
    def max_lag(self) -> int:
        return max(self.target_lags, *self.predictor_lags) if self.predictor_lags else self.target_lags

    @property
    def n_params(self) -> int:
        return self.target_lags + sum(self.predictor_lags)


@dataclass(frozen=True)
class LinkDecision:
    """One directed link together with its test outcome and the verdict."""

    link: str
    outcome: "TestOutcome"
    decided_causal: bool


@dataclass(frozen=True)
class ClassifiedResult:
    """Comparison of an inferred topology against ground truth.

    ``spurious`` means the inference contains a link absent from the truth;
    ``unidentified`` means a true link is missing from the inference. Both
    can hold at once.
    """

    inferred: TopologyLabel
    truth: TopologyLabel
    spurious: bool
    unidentified: bool


def classify(inferred: TopologyLabel, truth: TopologyLabel) -> ClassifiedResult:
    """Flag edge-set differences between an inferred and a true topology."""
    spurious = bool(inferred.edges - truth.edges)
    unidentified = bool(truth.edges - inferred.edges)
    return ClassifiedResult(inferred=inferred, truth=truth,
                            spurious=spurious, unidentified=unidentified)
