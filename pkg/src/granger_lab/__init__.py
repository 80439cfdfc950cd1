"""Trivariate Granger causality engine and Monte Carlo sensitivity harness."""

__version__ = "0.1.0"

from .core import (ClassifiedResult, LagSpec, Link, LinkDecision, TimeSeries,
                   TopologyKind, TopologyLabel, classify)
from .criteria import (Criterion, PRESET_CRITERIA, TestOutcome, chi2_sf,
                       compare_criteria, f_sf, statistic)
from .datagen import (GeneratorConfig, NoiseConfig, NoiseKind, TrivariateSample,
                      estimate_signal_variance, generate, generate_extrinsic,
                      generate_fixed, generate_intrinsic, snr_to_sigma)
from .experiments import (PhaseGrid, RateEstimate, SweepResult, estimate_rates,
                          extract_plane, phase_space, snr_grid,
                          sweep_sample_size, sweep_significance)
from .granger import (GrangerConfig, bivariate_scan, bivariate_test,
                      infer_topology, trivariate_test)
from .regress import (FitResult, InsufficientData, ModelSpec, RankDeficient,
                      build_design, ols_fit)
