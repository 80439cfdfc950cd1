"""Monte Carlo orchestration: significance sweeps, sample-size sweeps and
SNR phase spaces.

Determinism contract: every iteration draws its generator seed from
(master seed, stream key..., iteration index) through a seed sequence, so
results are bit-identical however the work is partitioned across workers.
Rates are exact count/iterations fractions.

Rate counting follows the key links: with driver truth, spurious means the
Y->Z link was accepted and unidentified means X->Z was rejected; with
indirect truth the roles of the two links swap. Whole-topology
classification flags are carried alongside for diagnostics.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import Link, TopologyKind, TopologyLabel
from .criteria import PRESET_CRITERIA, Criterion, RateComparison, compare_criteria, statistic_from_rss
from .datagen import GeneratorConfig, NoiseKind, generate
from .granger import GrangerConfig, comparison_rss, decide_edges
from .regress import RankDeficient

_FLAG_NAMES = ("spurious", "unidentified", "xy", "xz", "yz",
               "topo_spurious", "topo_unidentified")


class DegenerateConfiguration(RuntimeError):
    """More than 1% of iterations hit rank-deficient designs."""


class OffGrid(ValueError):
    """Requested plane coordinate is not a sampled grid value."""


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit generator seed from (master seed, stream key) via a seed sequence."""
    ss = np.random.SeedSequence([int(master_seed)] + [int(k) for k in key])
    state = ss.generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])


@dataclass(frozen=True)
class RateEstimate:
    """Monte Carlo rates for one experiment cell."""

    spurious_rate: float
    unidentified_rate: float
    iterations: int
    per_link_rates: dict[str, float]
    topology_spurious_rate: float
    topology_unidentified_rate: float
    rank_deficient: int = 0

    def standard_error(self, rate: float) -> float:
        return float(np.sqrt(rate * (1.0 - rate) / self.iterations))


@dataclass(frozen=True)
class SweepResult:
    """Per-criterion rate curves along one swept parameter axis."""

    axis: tuple[float, ...]
    rates: dict[Criterion, tuple[RateEstimate, ...]]
    comparisons: dict[tuple[Criterion, Criterion], tuple[RateComparison, ...]] = field(
        default_factory=dict)

    def optimal(self, criterion: Criterion) -> float:
        """Axis value minimizing distance of (unidentified, spurious) to (0, 0)."""
        estimates = self.rates[criterion]
        dist = [np.hypot(e.unidentified_rate, e.spurious_rate) for e in estimates]
        return self.axis[int(np.argmin(dist))]


@dataclass(frozen=True)
class PhaseGrid:
    """Rates over the full (SNR_X, SNR_Y, SNR_Z) grid."""

    axes: tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]
    spurious: np.ndarray
    unidentified: np.ndarray
    rate_xz: np.ndarray
    rate_yz: np.ndarray
    metadata: dict


def snr_grid(lo: float = -40.0, hi: float = 40.0, points: int = 17) -> tuple[float, ...]:
    """Inclusive uniform grid in dB (default 5 dB spacing over [-40, 40])."""
    return tuple(float(v) for v in np.linspace(lo, hi, points))


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("GRANGER_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _count_block(gen_template: GeneratorConfig, lags: int,
                 criteria: tuple[Criterion, ...], alphas: tuple[float, ...],
                 always_trivariate: bool, master_seed: int, key: tuple[int, ...],
                 start: int, stop: int) -> tuple[np.ndarray, int]:
    """Flag counts over one contiguous iteration range (worker unit)."""
    counts = np.zeros((len(criteria), len(alphas), len(_FLAG_NAMES)), dtype=np.int64)
    rank_deficient = 0
    truth = gen_template.topology
    truth_edges = (TopologyLabel.driver() if truth is TopologyKind.DRIVER
                   else TopologyLabel.indirect()).edges
    spur_link, unid_link = ((Link.YZ, Link.XZ) if truth is TopologyKind.DRIVER
                            else (Link.XZ, Link.YZ))
    for i in range(start, stop):
        cfg = replace(gen_template, seed=derive_seed(master_seed, *key, i))
        sample = generate(cfg)
        try:
            comps = comparison_rss(sample.x.values, sample.y.values,
                                   sample.z.values, lags)
        except RankDeficient:
            rank_deficient += 1
            continue
        for ci, crit in enumerate(criteria):
            pvalues = {k: statistic_from_rss(crit, c.rss_restricted, c.rss_unrestricted,
                                             c.n_obs, c.q, c.k).p_value
                       for k, c in comps.items()}
            for ai, alpha in enumerate(alphas):
                edges = decide_edges(pvalues, alpha, always_trivariate)
                row = counts[ci, ai]
                row[0] += spur_link in edges
                row[1] += unid_link not in edges
                row[2] += Link.XY in edges
                row[3] += Link.XZ in edges
                row[4] += Link.YZ in edges
                row[5] += bool(edges - truth_edges)
                row[6] += bool(truth_edges - edges)
    return counts, rank_deficient


def _accumulate(gen_template: GeneratorConfig, lags: int,
                criteria: tuple[Criterion, ...], alphas: tuple[float, ...],
                always_trivariate: bool, iterations: int, master_seed: int,
                key: tuple[int, ...], workers: Optional[int] = None
                ) -> tuple[np.ndarray, int]:
    n_workers = _worker_count(workers)
    if n_workers <= 1 or iterations < 2 * n_workers:
        return _count_block(gen_template, lags, criteria, alphas, always_trivariate,
                            master_seed, key, 0, iterations)
    bounds = np.linspace(0, iterations, n_workers + 1, dtype=int)
    counts = np.zeros((len(criteria), len(alphas), len(_FLAG_NAMES)), dtype=np.int64)
    rank_deficient = 0
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(_count_block, gen_template, lags, criteria, alphas,
                               always_trivariate, master_seed, key, int(a), int(b))
                   for a, b in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            block, rd = fut.result()
            counts += block
            rank_deficient += rd
    return counts, rank_deficient


def _estimate_from_counts(row: np.ndarray, iterations: int,
                          rank_deficient: int) -> RateEstimate:
    effective = iterations - rank_deficient
    if rank_deficient > 0.01 * iterations or effective == 0:
        raise DegenerateConfiguration(
            f"{rank_deficient}/{iterations} iterations were rank deficient")
    r = row / effective
    return RateEstimate(
        spurious_rate=float(r[0]), unidentified_rate=float(r[1]),
        iterations=effective,
        per_link_rates={"x->y": float(r[2]), "x->z": float(r[3]), "y->z": float(r[4])},
        topology_spurious_rate=float(r[5]), topology_unidentified_rate=float(r[6]),
        rank_deficient=rank_deficient)


def estimate_rates(gen_config: GeneratorConfig, granger_config: GrangerConfig,
                   iterations: int, master_seed: int,
                   stream_key: tuple[int, ...] = (),
                   workers: Optional[int] = None) -> RateEstimate:
    """Monte Carlo spurious/unidentified rates for one configuration."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    counts, rd = _accumulate(gen_config, granger_config.lags,
                             (granger_config.criterion,),
                             (granger_config.significance,),
                             granger_config.always_trivariate,
                             iterations, master_seed, stream_key, workers)
    return _estimate_from_counts(counts[0, 0], iterations, rd)


def sweep_significance(topology: TopologyKind, alphas: Sequence[float],
                       n_points: int = 50,
                       criteria: Sequence[Criterion] = PRESET_CRITERIA,
                       iterations: int = 1000, seed: int = 0,
                       lags: int = 2, workers: Optional[int] = None,
                       gen_config: Optional[GeneratorConfig] = None) -> SweepResult:
    """Rates against the significance level, at a fixed sample size.

    Samples are shared across significance levels and criteria (seeded per
    iteration only), which is exactly equivalent to repeated estimate_rates
    calls with the same master seed.
    """
    alphas = tuple(float(a) for a in alphas)
    if not alphas or not all(0.0 < a < 1.0 for a in alphas):
        raise ValueError("significance grid must be non-empty and within (0, 1)")
    gen = gen_config or GeneratorConfig(topology=topology, length=n_points)
    counts, rd = _accumulate(gen, lags, tuple(criteria), alphas, False,
                             iterations, seed, (), workers)
    rates = {crit: tuple(_estimate_from_counts(counts[ci, ai], iterations, rd)
                         for ai in range(len(alphas)))
             for ci, crit in enumerate(criteria)}
    return SweepResult(axis=alphas, rates=rates)


def sweep_sample_size(topology: TopologyKind, alpha: float, sizes: Sequence[int],
                      criteria: Sequence[Criterion] = PRESET_CRITERIA,
                      cases: int = 1000, seed: int = 0, lags: int = 2,
                      workers: Optional[int] = None,
                      comparison_level: float = 0.1) -> SweepResult:
    """Rates against the sample size at a fixed significance level, plus
    pairwise criterion-difference tests at each size."""
    sizes = tuple(int(n) for n in sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    criteria = tuple(criteria)
    per_size: list[dict[Criterion, RateEstimate]] = []
    for n in sizes:
        gen = GeneratorConfig(topology=topology, length=n)
        counts, rd = _accumulate(gen, lags, criteria, (alpha,), False,
                                 cases, seed, (n,), workers)
        per_size.append({crit: _estimate_from_counts(counts[ci, 0], cases, rd)
                         for ci, crit in enumerate(criteria)})
    rates = {crit: tuple(row[crit] for row in per_size) for crit in criteria}
    comparisons = {}
    for a_idx in range(len(criteria)):
        for b_idx in range(a_idx + 1, len(criteria)):
            ca, cb = criteria[a_idx], criteria[b_idx]
            comparisons[(ca, cb)] = tuple(
                compare_criteria(row[ca], row[cb], level=comparison_level)
                for row in per_size)
    return SweepResult(axis=tuple(float(n) for n in sizes), rates=rates,
                       comparisons=comparisons)


def _phase_cell(gen: GeneratorConfig, lags: int, criterion: Criterion,
                alpha: float, always_trivariate: bool, iterations: int,
                master_seed: int, cell_index: int) -> RateEstimate:
    counts, rd = _accumulate(gen, lags, (criterion,), (alpha,), always_trivariate,
                             iterations, master_seed, (cell_index,), workers=1)
    return _estimate_from_counts(counts[0, 0], iterations, rd)


def phase_space(noise_kind: NoiseKind, topology: TopologyKind, n: int, alpha: float,
                criterion: Criterion = Criterion.WALD, iterations: int = 500,
                grids: Optional[Sequence[Sequence[float]]] = None, seed: int = 0,
                lags: int = 2, workers: Optional[int] = None,
                on_cell: Optional[Callable[[dict], None]] = None,
                done_cells: Optional[Mapping[tuple[float, float, float], dict]] = None
                ) -> PhaseGrid:
    """Rates over the 3-D SNR grid.

    ``on_cell`` is invoked once per cell, in grid order, after the cell
    completes (used for checkpointing). ``done_cells`` maps already-computed
    SNR triples to their rate dicts; those cells are not recomputed.
    """
    if noise_kind is NoiseKind.FIXED_SIGMA:
        raise ValueError("phase spaces require an SNR noise kind")
    if grids is None:
        grids = (snr_grid(), snr_grid(), snr_grid())
    axes = tuple(tuple(float(v) for v in g) for g in grids)
    shape = tuple(len(a) for a in axes)
    spurious = np.zeros(shape)
    unidentified = np.zeros(shape)
    rate_xz = np.zeros(shape)
    rate_yz = np.zeros(shape)
    done = dict(done_cells or {})

    coords = list(product(*[enumerate(a) for a in axes]))
    n_workers = _worker_count(workers)
    pending: dict[int, object] = {}
    pool = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        for cell_index, ((i, sx), (j, sy), (k, sz)) in enumerate(coords):
            if (sx, sy, sz) in done:
                continue
            gen = GeneratorConfig(topology=topology, length=n, noise_kind=noise_kind,
                                  sigmas_or_snrs=(sx, sy, sz))
            args = (gen, lags, criterion, alpha, False, iterations, seed, cell_index)
            if pool is not None:
                pending[cell_index] = pool.submit(_phase_cell, *args)
        for cell_index, ((i, sx), (j, sy), (k, sz)) in enumerate(coords):
            key = (sx, sy, sz)
            if key in done:
                cell = done[key]
            else:
                if pool is not None:
                    est = pending[cell_index].result()
                else:
                    gen = GeneratorConfig(topology=topology, length=n,
                                          noise_kind=noise_kind, sigmas_or_snrs=key)
                    est = _phase_cell(gen, lags, criterion, alpha, False,
                                      iterations, seed, cell_index)
                cell = {"spurious_rate": est.spurious_rate,
                        "unidentified_rate": est.unidentified_rate,
                        "rate_xz": est.per_link_rates["x->z"],
                        "rate_yz": est.per_link_rates["y->z"]}
                if on_cell is not None:
                    on_cell({"snr_x_db": sx, "snr_y_db": sy, "snr_z_db": sz, **cell})
            spurious[i, j, k] = cell["spurious_rate"]
            unidentified[i, j, k] = cell["unidentified_rate"]
            rate_xz[i, j, k] = cell["rate_xz"]
            rate_yz[i, j, k] = cell["rate_yz"]
    finally:
        if pool is not None:
            pool.shutdown()
    metadata = {"topology": topology.value, "noise_kind": noise_kind.value,
                "n": n, "alpha": alpha, "criterion": criterion.value,
                "iterations": iterations, "seed": seed, "lags": lags}
    return PhaseGrid(axes=axes, spurious=spurious, unidentified=unidentified,
                     rate_xz=rate_xz, rate_yz=rate_yz, metadata=metadata)


_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def extract_plane(grid: PhaseGrid, axis: str, value_db: float,
                  field_name: str = "unidentified"
                  ) -> tuple[np.ndarray, tuple[str, tuple[float, ...]], tuple[str, tuple[float, ...]]]:
    """2-D slice of one rate field at a fixed SNR coordinate.

    Returns (plane, (row axis name, row values), (column axis name, column
    values)); rows vary along the first remaining axis.
    """
    ax = _AXIS_INDEX[axis.lower()]
    values = grid.axes[ax]
    matches = [i for i, v in enumerate(values) if v == float(value_db)]
    if not matches:
        raise OffGrid(f"SNR^{axis.upper()} = {value_db} dB is not on the grid")
    if field_name not in ("spurious", "unidentified", "rate_xz", "rate_yz"):
        raise ValueError(f"unknown field {field_name!r}")
    data = getattr(grid, field_name)
    plane = np.take(data, matches[0], axis=ax)
    names = [n for n in ("x", "y", "z") if n != axis.lower()]
    remaining = [grid.axes[_AXIS_INDEX[n]] for n in names]
    return plane, (names[0], remaining[0]), (names[1], remaining[1])
