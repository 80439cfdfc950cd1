"""Bivariate Granger tests and the two-step trivariate procedure.

Step one tests the three forward links pairwise. Only when the pairwise
scan returns the complete topology does step two run the two conditional
tests on Z (does X help beyond Y, does Y help beyond X) and replace the
X->Z and Y->Z edges with those verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import LagSpec, Link, LinkDecision, TimeSeries, TopologyLabel
from .criteria import Criterion, TestOutcome, statistic, statistic_from_rss
from .datagen import TrivariateSample
from .regress import ModelSpec, build_design, nested_rss, ols_fit

#: Keys for the five forward-model comparisons the two-step procedure uses.
BIV_XY, BIV_XZ, BIV_YZ = "x->y", "x->z", "y->z"
TRI_XZ, TRI_YZ = "tri:x->z", "tri:y->z"

_REVERSE_PAIRS = (("x", "y"), ("x", "z"), ("y", "z"))


@dataclass(frozen=True)
class GrangerConfig:
    """Look-back depth, test criterion and significance level for all tests."""

    lags: int = 2
    criterion: Criterion = Criterion.WALD
    significance: float = 0.05
    always_trivariate: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.significance < 1.0:
            raise ValueError("significance must lie strictly between 0 and 1")
        if self.lags < 1:
            raise ValueError("lags must be >= 1")


@dataclass(frozen=True)
class RssComparison:
    """One nested model pair reduced to the numbers the criteria need."""

    rss_restricted: float
    rss_unrestricted: float
    n_obs: int
    q: int
    k: int


def comparison_rss(x: np.ndarray, y: np.ndarray, z: np.ndarray,
                   lags: int) -> dict[str, RssComparison]:
    """RSS of every model pair in the two-step procedure, via three QR passes.

    The full z-model [z-lags | y-lags | x-lags] yields the nested RSS of
    [z] and [z, y] as column prefixes; a second ordering [z-lags | x-lags]
    yields [z, x]; the y-model pass yields [y] and [y, x].
    """
    p = lags
    start = p  # common window: max lag of the widest (unrestricted) model
    zl = _lag_block(z, p, start)
    yl = _lag_block(y, p, start)
    xl = _lag_block(x, p, start)
    bz = z[start:]
    by = y[start:]
    n_obs = bz.shape[0]
    if n_obs < 3 * p + 1:
        raise ValueError(f"series too short for lag depth {p}")

    rss_z, rss_zy, rss_zyx = nested_rss(np.hstack([zl, yl, xl]), bz, (p, 2 * p, 3 * p))
    (rss_zx,) = nested_rss(np.hstack([zl, xl]), bz, (2 * p,))
    rss_y, rss_yx = nested_rss(np.hstack([_lag_block(y, p, start, own=True), xl]), by, (p, 2 * p))

    return {
        BIV_XY: RssComparison(rss_y, rss_yx, n_obs, p, 2 * p),
        BIV_XZ: RssComparison(rss_z, rss_zx, n_obs, p, 2 * p),
        BIV_YZ: RssComparison(rss_z, rss_zy, n_obs, p, 2 * p),
        TRI_XZ: RssComparison(rss_zy, rss_zyx, n_obs, p, 3 * p),
        TRI_YZ: RssComparison(rss_zx, rss_zyx, n_obs, p, 3 * p),
    }


def _lag_block(values: np.ndarray, p: int, start: int, own: bool = False) -> np.ndarray:
    n = values.shape[0]
    return np.column_stack([values[start - k:n - k] for k in range(1, p + 1)])


def outcomes_from_rss(comps: Mapping[str, RssComparison],
                      criterion: Criterion) -> dict[str, TestOutcome]:
    return {key: statistic_from_rss(criterion, c.rss_restricted, c.rss_unrestricted,
                                    c.n_obs, c.q, c.k)
            for key, c in comps.items()}


def decide_edges(pvalues: Mapping[str, float], significance: float,
                 always_trivariate: bool = False) -> frozenset[Link]:
    """Apply the two-step decision rule to the five forward p-values."""
    biv = {link for link, key in ((Link.XY, BIV_XY), (Link.XZ, BIV_XZ), (Link.YZ, BIV_YZ))
           if pvalues[key] < significance}
    if len(biv) == 3 or always_trivariate:
        edges = set(biv) - {Link.XZ, Link.YZ}
        if pvalues[TRI_XZ] < significance:
            edges.add(Link.XZ)
        if pvalues[TRI_YZ] < significance:
            edges.add(Link.YZ)
        return frozenset(edges)
    return frozenset(biv)


def bivariate_test(cause: TimeSeries, effect: TimeSeries,
                   config: GrangerConfig) -> LinkDecision:
    """Pairwise Granger test: do the cause's lags improve the effect's model?"""
    p = config.lags
    series = {"cause": cause.values, "effect": effect.values}
    unrestricted = ModelSpec("effect", ("cause",), LagSpec(p, (p,)))
    restricted = ModelSpec("effect", (), LagSpec(p, ()))
    fit_u = ols_fit(*build_design(series, unrestricted))
    fit_r = ols_fit(*build_design(series, restricted, window_lag=p))
    outcome = statistic(config.criterion, fit_r, fit_u)
    return LinkDecision(link="cause->effect", outcome=outcome,
                        decided_causal=outcome.p_value < config.significance)


def trivariate_test(sample: TrivariateSample, tested_cause: str,
                    config: GrangerConfig) -> LinkDecision:
    """Conditional test on Z: does the tested cause help beyond the other one?"""
    if tested_cause not in ("x", "y"):
        raise ValueError("tested_cause must be 'x' or 'y'")
    comps = comparison_rss(sample.x.values, sample.y.values, sample.z.values, config.lags)
    key = TRI_XZ if tested_cause == "x" else TRI_YZ
    c = comps[key]
    outcome = statistic_from_rss(config.criterion, c.rss_restricted,
                                 c.rss_unrestricted, c.n_obs, c.q, c.k)
    return LinkDecision(link=f"{tested_cause}->z", outcome=outcome,
                        decided_causal=outcome.p_value < config.significance)


def bivariate_scan(sample: TrivariateSample, config: GrangerConfig) -> frozenset[Link]:
    """Step one: the set of forward links accepted by pairwise tests."""
    comps = comparison_rss(sample.x.values, sample.y.values, sample.z.values, config.lags)
    outcomes = outcomes_from_rss(comps, config.criterion)
    return frozenset(link for link, key in
                     ((Link.XY, BIV_XY), (Link.XZ, BIV_XZ), (Link.YZ, BIV_YZ))
                     if outcomes[key].p_value < config.significance)


def reverse_link_decisions(sample: TrivariateSample,
                           config: GrangerConfig) -> dict[str, LinkDecision]:
    """Pairwise tests of the reverse links; diagnostic only, never classified."""
    series = sample.as_dict()
    out: dict[str, LinkDecision] = {}
    for effect, cause in _REVERSE_PAIRS:
        decision = bivariate_test(TimeSeries(series[cause]), TimeSeries(series[effect]), config)
        out[f"{cause}->{effect}"] = LinkDecision(
            link=f"{cause}->{effect}", outcome=decision.outcome,
            decided_causal=decision.decided_causal)
    return out


def infer_topology(sample: TrivariateSample, config: GrangerConfig) -> TopologyLabel:
    """The full two-step trivariate procedure, returning a topology label."""
    comps = comparison_rss(sample.x.values, sample.y.values, sample.z.values, config.lags)
    outcomes = outcomes_from_rss(comps, config.criterion)
    pvalues = {key: o.p_value for key, o in outcomes.items()}
    edges = decide_edges(pvalues, config.significance, config.always_trivariate)
    return TopologyLabel.from_edges(edges)


def link_outcomes(sample: TrivariateSample,
                  config: GrangerConfig) -> dict[str, TestOutcome]:
    """All five forward-model test outcomes for one sample."""
    comps = comparison_rss(sample.x.values, sample.y.values, sample.z.values, config.lags)
    return outcomes_from_rss(comps, config.criterion)
