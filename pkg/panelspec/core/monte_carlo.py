"""
Simulation study: data generating processes, replication loop, size and power

Regressors X1, X2 are i.i.d. Uniform(0, 4) for the partially linear designs and
Uniform(2/3, 10/3) for the linear-null family, a window of half-width 4/3 on the
peak of cos(x1 - 2). Fixed effects are correlated with the regressors through
mu_i = nu_i + sum_t (0.6 X1_it + 0.4 X2_it), with
nu_i ~ N(0, 2.25). Replicate r draws regressors, nu and errors from the
separate streams (seed, r, 0), (seed, r, 1) and (seed, r, 2), so every test
variant sees identical data within a replicate.
"""

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json
from scipy import linalg
from tqdm import tqdm

from .basis import BasisSpec, SeriesDesigner, build_null_and_test_designs, orthonormalize
from .bootstrap import bootstrap_pvalue, replicate_rng, run_bootstrap
from .errors import ConfigError, PanelSpecError, ReplicateFailureError
from .lm_test import HETEROSKEDASTIC, HOMOSKEDASTIC, run_lm_test
from .panel import PanelDataset, WITHIN, pooled_design, transform_panel
from .projection import fit_restricted
from .selection import build_grid, select_rn
from ..config import DEFAULT_BOOT_REPS, DEFAULT_NOMINAL_LEVEL, MAX_FAILURE_SHARE
from ..logger import get_logger
from ..logger.logger import log_replicate_failure
from ..utils.system import get_worker_count

logger = get_logger("panelspec.core.monte_carlo")

DGPS = ("sp_null", "np_alt", "linear_null", "linear_smooth_alt", "linear_orthogonal_alt")
LINEAR_DGPS = ("linear_null", "linear_smooth_alt", "linear_orthogonal_alt")
ERROR_LAWS = ("homoskedastic", "heteroskedastic")

SETUPS: Dict[int, Tuple[int, int]] = {1: (250, 2), 2: (250, 4), 3: (500, 2), 4: (500, 4)}

VARIANTS = ("xi_rn", "t_rn", "xi_kn", "t_kn", "boot_rademacher", "boot_mammen", "data_driven")
ASYMPTOTIC_RULES = {"xi_rn": "chi2", "t_rn": "normal", "xi_kn": "chi2_kn", "t_kn": "normal_kn"}

REGRESSOR_LOW, REGRESSOR_HIGH = 0.0, 4.0
LINEAR_REGRESSOR_LOW, LINEAR_REGRESSOR_HIGH = 2.0 / 3.0, 10.0 / 3.0
NU_SD = 1.5
HOMOSKEDASTIC_VARIANCE = 4.0
ORTHOGONAL_DEGREE = 5
ORTHOGONAL_SAMPLE = 1_000_000
ORTHOGONAL_SEED = 20190602
# sd of the part of cos(x1 - 2) that x1^2 and x1^3 add to a linear fit on the linear-family law
ORTHOGONAL_AMPLITUDE = 0.233


@dataclass(frozen=True)
class DgpConfig:
    n: int
    T: int
    dgp: str = "sp_null"
    errors: str = "homoskedastic"
    seed: int = 0
    transform: str = WITHIN
    orthogonal_amplitude: float = ORTHOGONAL_AMPLITUDE

    def __post_init__(self):
        if self.n < 2 or self.T < 2:
            raise ConfigError(f"simulated panels need n >= 2 and T >= 2, got n={self.n}, T={self.T}")
        if self.dgp not in DGPS:
            raise ConfigError(f"unknown dgp '{self.dgp}', expected one of {', '.join(DGPS)}")
        if self.errors not in ERROR_LAWS:
            raise ConfigError(f"unknown error law '{self.errors}', expected one of {', '.join(ERROR_LAWS)}")

    @classmethod
    def from_setup(cls, setup: int, **kwargs) -> "DgpConfig":
        if setup not in SETUPS:
            raise ConfigError(f"unknown setup {setup}, expected one of {sorted(SETUPS)}")
        n, T = SETUPS[setup]
        return cls(n=n, T=T, **kwargs)


def g_function(x2: np.ndarray) -> np.ndarray:
    return 3 + 2 * (np.exp(x2) - 2 * np.log(x2 + 3))


def h_function(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return 1.25 * np.cos(x1 - 2) * np.sin(0.75 * x2)


def regressor_bounds(dgp: str) -> Tuple[float, float]:
    if dgp in LINEAR_DGPS:
        return LINEAR_REGRESSOR_LOW, LINEAR_REGRESSOR_HIGH
    return REGRESSOR_LOW, REGRESSOR_HIGH


def _orthogonal_design(x1: np.ndarray) -> np.ndarray:
    x1 = np.asarray(x1, dtype=np.float64)
    z = (x1 - LINEAR_REGRESSOR_LOW) / (LINEAR_REGRESSOR_HIGH - LINEAR_REGRESSOR_LOW)
    powers = np.vander(z.ravel(), ORTHOGONAL_DEGREE + 1, increasing=True)
    return powers.reshape(z.shape + (ORTHOGONAL_DEGREE + 1,))


@lru_cache(maxsize=1)
def _orthogonal_coefficients() -> np.ndarray:
    draws = replicate_rng(ORTHOGONAL_SEED, 0).uniform(LINEAR_REGRESSOR_LOW, LINEAR_REGRESSOR_HIGH, ORTHOGONAL_SAMPLE)
    _, R = linalg.qr(_orthogonal_design(draws), mode="economic")
    unit = np.zeros(ORTHOGONAL_DEGREE + 1)
    unit[-1] = 1.0
    # last orthonormal polynomial, rescaled from unit norm to unit variance
    return linalg.solve_triangular(R, unit) * math.sqrt(ORTHOGONAL_SAMPLE)


def orthogonal_alternative(x1: np.ndarray) -> np.ndarray:
    """Degree-5 polynomial orthogonal to 1, x1, ..., x1^4 under the linear-family law, unit variance"""
    return _orthogonal_design(x1) @ _orthogonal_coefficients()


def mean_function(
    dgp: str, x1: np.ndarray, x2: np.ndarray, orthogonal_amplitude: float = ORTHOGONAL_AMPLITUDE
) -> np.ndarray:
    """Conditional mean net of the fixed effect"""
    if dgp == "sp_null":
        return 2 * x1 + g_function(x2)
    if dgp == "np_alt":
        return 2 * x1 + g_function(x2) + h_function(x1, x2)
    if dgp == "linear_null":
        return 2 * x1
    if dgp == "linear_smooth_alt":
        return 2 * x1 + np.cos(x1 - 2)
    if dgp == "linear_orthogonal_alt":
        return 2 * x1 + orthogonal_amplitude * orthogonal_alternative(x1)
    raise ConfigError(f"unknown dgp '{dgp}'")


def error_variance(errors: str, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if errors == "homoskedastic":
        return np.full(np.shape(x1), HOMOSKEDASTIC_VARIANCE)
    return 1 + 1.75 * np.exp(0.75 * (x1 + x2))


def generate_panel(cfg: DgpConfig, rep_index: int) -> PanelDataset:
    """Simulated balanced panel for one replicate"""
    n, T = cfg.n, cfg.T
    low, high = regressor_bounds(cfg.dgp)
    X = replicate_rng(cfg.seed, rep_index, 0).uniform(low, high, size=(n, T, 2))
    nu = replicate_rng(cfg.seed, rep_index, 1).normal(0.0, NU_SD, size=n)
    shocks = replicate_rng(cfg.seed, rep_index, 2).standard_normal((n, T))

    x1, x2 = X[..., 0], X[..., 1]
    mu = nu + (0.6 * x1 + 0.4 * x2).sum(axis=1)
    eps = shocks * np.sqrt(error_variance(cfg.errors, x1, x2))
    y = mu[:, None] + mean_function(cfg.dgp, x1, x2, cfg.orthogonal_amplitude) + eps

    return PanelDataset(
        ids=np.arange(1, n + 1),
        times=np.arange(1, T + 1),
        y=y.ravel(),
        X=X.reshape(n * T, 2),
        x_names=("x1", "x2"),
    )


@dataclass(frozen=True)
class McTestSpec:
    """
    Which tests each replicate runs

    a_values are the fixed alternative sizes; grid_min..grid_max is the
    data-driven grid. kind defaults to the heteroskedastic statistic when the
    errors are heteroskedastic.
    """
    family: str = "spline"
    a_values: Tuple[int, ...] = (4,)
    variants: Tuple[str, ...] = ("xi_rn", "t_rn", "xi_kn", "t_kn")
    grid_min: int = 4
    grid_max: int = 9
    kind: Optional[str] = None
    level: float = DEFAULT_NOMINAL_LEVEL
    boot_reps: int = DEFAULT_BOOT_REPS
    c: Optional[float] = None

    def __post_init__(self):
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"unknown test variants {unknown}, expected a subset of {', '.join(VARIANTS)}")
        if not self.variants:
            raise ConfigError("at least one test variant is required")

    def resolved_kind(self, cfg: DgpConfig) -> str:
        if self.kind:
            return self.kind
        return HETEROSKEDASTIC if cfg.errors == "heteroskedastic" else HOMOSKEDASTIC

    def specs(self, dgp: str) -> Tuple[BasisSpec, BasisSpec]:
        """Null and alternative templates for a DGP family"""
        if dgp in LINEAR_DGPS:
            null = BasisSpec.from_roles(linear=("x1",), family=self.family)
            alt = BasisSpec.from_roles(nonparametric=("x1",), family=self.family)
        else:
            null = BasisSpec.from_roles(linear=("x1",), nonparametric=("x2",), family=self.family)
            alt = BasisSpec.from_roles(nonparametric=("x1", "x2"), family=self.family)
        return null, alt


@dataclass_json
@dataclass
class McCell:
    variant: str
    a_n: int
    m_n: int
    r_n: int
    k_n: int
    rejection_rate: float
    mc_se: float
    replications: int


@dataclass
class McResult:
    cells: List[McCell]
    M: int
    failures: int
    config: Dict = field(default_factory=dict)

    def cell(self, variant: str, a_n: Optional[int] = None) -> McCell:
        for c in self.cells:
            if c.variant == variant and (a_n is None or c.a_n == a_n):
                return c
        raise KeyError((variant, a_n))

    def rate(self, variant: str, a_n: Optional[int] = None) -> float:
        return self.cell(variant, a_n).rejection_rate


# (variant, a_n) -> (reject, a_n, m_n, r_n, k_n); data-driven rows key on a_n = 0
Decisions = Dict[Tuple[str, int], Tuple[bool, int, int, int, int]]


def run_replicate(cfg: DgpConfig, spec: McTestSpec, rep_index: int) -> Decisions:
    """All requested test decisions on one simulated panel"""
    panel = generate_panel(cfg, rep_index)
    tp = transform_panel(panel, cfg.transform)
    designer = SeriesDesigner(panel)
    spec_null, alt_template = spec.specs(cfg.dgp)
    kind = spec.resolved_kind(cfg)
    decisions: Decisions = {}

    fixed = [v for v in spec.variants if v != "data_driven"]
    if fixed:
        for a_n in spec.a_values:
            ds = orthonormalize(build_null_and_test_designs(
                tp, spec_null.with_a_n(a_n), alt_template.with_a_n(a_n), designer))
            fit = fit_restricted(tp, ds)
            result = run_lm_test(fit, kind)
            counts = (a_n, result.m_n, result.r_n, result.k_n)
            for variant in fixed:
                if variant in ASYMPTOTIC_RULES:
                    reject = result.reject(spec.level, ASYMPTOTIC_RULES[variant])
                else:
                    law = variant.split("_", 1)[1]
                    boot_seed = int(replicate_rng(cfg.seed, rep_index, 3, a_n).integers(2 ** 62))
                    dist = run_bootstrap(fit, kind, law, spec.boot_reps, boot_seed, workers=1)
                    reject = bootstrap_pvalue(result.t_rn, dist) < spec.level
                decisions[(variant, a_n)] = (reject,) + counts

    if "data_driven" in spec.variants:
        grid_kwargs = {} if spec.c is None else {"c": spec.c}
        # the grid's smallest alternative must span the null
        grid = build_grid(tp, spec_null.with_a_n(spec.grid_min), spec.grid_min, spec.grid_max, alt_template,
                          designer=designer, **grid_kwargs)
        fit = fit_restricted(tp, grid.candidates[0].design)
        selection = select_rn(fit, grid, kind)
        result = selection.result
        decisions[("data_driven", 0)] = (
            result.reject(spec.level, "chi2"),
            selection.chosen.a_n, result.m_n, result.r_n, result.k_n,
        )
    return decisions


def _mode(values: Sequence[int]) -> int:
    counts = Counter(values)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def run_mc(
    cfg: DgpConfig,
    spec: McTestSpec,
    M: int,
    workers: Optional[int] = None,
    progress: bool = True,
) -> McResult:
    """
    Rejection frequencies over M replicates

    Args:
        cfg: Data generating process
        spec: Tests to run per replicate
        M: Number of replications
        workers: Threads (None resolves from the machine)
        progress: Show a tqdm progress bar

    Returns:
        McResult with one cell per (variant, a_n); data-driven cells report
        the modal chosen a_n
    """
    if M < 1:
        raise ConfigError(f"M must be at least 1, got {M}")
    workers = get_worker_count(workers)
    outcomes: List[Optional[Decisions]] = [None] * M
    failures = 0

    def _one(rep: int):
        try:
            return rep, run_replicate(cfg, spec, rep), None
        except (PanelSpecError, ValueError, linalg.LinAlgError) as exc:
            return rep, None, f"{type(exc).__name__}: {exc}"

    bar = tqdm(total=M, desc=f"{cfg.dgp} n={cfg.n} T={cfg.T}", disable=not progress)
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one, rep) for rep in range(M)]
            for future in as_completed(futures):
                rep, decisions, reason = future.result()
                if decisions is None:
                    failures += 1
                    log_replicate_failure("monte_carlo", rep, reason)
                else:
                    outcomes[rep] = decisions
                bar.update(1)
    finally:
        bar.close()

    if failures > MAX_FAILURE_SHARE * M:
        raise ReplicateFailureError(failures, M, "Monte Carlo replications")

    done = [d for d in outcomes if d is not None]
    keys = []
    for variant in spec.variants:
        if variant == "data_driven":
            keys.append((variant, 0))
        else:
            keys.extend((variant, a_n) for a_n in spec.a_values)

    cells = []
    for key in keys:
        rows = [d[key] for d in done if key in d]
        if not rows:
            continue
        rate = float(np.mean([r[0] for r in rows]))
        cells.append(McCell(
            variant=key[0],
            a_n=_mode([r[1] for r in rows]),
            m_n=_mode([r[2] for r in rows]),
            r_n=_mode([r[3] for r in rows]),
            k_n=_mode([r[4] for r in rows]),
            rejection_rate=rate,
            mc_se=math.sqrt(rate * (1 - rate) / len(rows)),
            replications=len(rows),
        ))

    logger.info(f"Monte Carlo finished: M={M}, failures={failures}, cells={len(cells)}")
    return McResult(cells=cells, M=M, failures=failures)


MC_COLUMNS = ["variant", "a_n", "m_n", "r_n", "k_n", "rejection_rate", "mc_se"]


def write_mc_csv(result: McResult, path: str) -> None:
    frame = pd.DataFrame([c.to_dict() for c in result.cells], columns=MC_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.6f")
    logger.info(f"Wrote {len(frame)} Monte Carlo cells to {path}")


def pooled_vs_within_slopes(cfg: DgpConfig, reps: int) -> Tuple[float, float]:
    """
    Average x1 slope from pooled OLS and from the within-transformed fit

    Both regress on [x1, x2, x2^2, x2^3] (pooled adds a constant), which spans
    the partially linear mean well enough for the x1 comparison.
    """
    pooled, within = [], []
    for rep in range(reps):
        panel = generate_panel(cfg, rep)
        x1, x2 = panel.X[:, 0], panel.X[:, 1]
        regressors = np.column_stack([x1, x2, x2 ** 2, x2 ** 3])

        y, design = pooled_design(panel)
        coef, *_ = linalg.lstsq(np.column_stack([design, x2 ** 2, x2 ** 3]), y)
        pooled.append(coef[1])

        tp = transform_panel(panel, cfg.transform)
        coef, *_ = linalg.lstsq(tp.transform(regressors), tp.yhat)
        within.append(coef[0])
    return float(np.mean(pooled)), float(np.mean(within))
