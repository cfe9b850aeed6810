"""
Wild bootstrap for the LM-type test

Each individual's whole residual block is scaled by one multiplier, so
heteroskedasticity and within-individual correlation survive resampling.
Replicates are pure functions of (seed, rep_index) and land in fixed slots of
the output array, so the result does not depend on the thread schedule.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import PanelSpecError, ReplicateFailureError
from .lm_test import normalized_statistic, statistic_from_blocks
from .projection import RestrictedFit
from ..config import BOOTSTRAP_CHUNK_SIZE, DEFAULT_BOOT_REPS, MAX_FAILURE_SHARE
from ..logger import get_logger
from ..logger.logger import log_replicate_failure
from ..utils.system import get_worker_count

logger = get_logger("panelspec.core.bootstrap")

_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class MultiplierLaw:
    """Two-point distribution with mean 0 and variance 1"""
    kind: str
    support: Tuple[float, float]
    probabilities: Tuple[float, float]

    def moment(self, k: int) -> float:
        return sum(p * v ** k for v, p in zip(self.support, self.probabilities))


MAMMEN = MultiplierLaw(
    kind="mammen",
    support=((1 - _SQRT5) / 2, (1 + _SQRT5) / 2),
    probabilities=((_SQRT5 + 1) / (2 * _SQRT5), (_SQRT5 - 1) / (2 * _SQRT5)),
)
RADEMACHER = MultiplierLaw(kind="rademacher", support=(-1.0, 1.0), probabilities=(0.5, 0.5))

LAWS = {"mammen": MAMMEN, "rademacher": RADEMACHER}


def get_law(law) -> MultiplierLaw:
    if isinstance(law, MultiplierLaw):
        return law
    try:
        return LAWS[str(law).lower()]
    except KeyError:
        raise PanelSpecError(f"Unknown multiplier law '{law}', expected mammen or rademacher") from None


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream addressed by (seed, key...)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def draw_multipliers(law, n: int, seed: int, rep_index: int) -> np.ndarray:
    """One multiplier per individual for replicate rep_index"""
    law = get_law(law)
    u = replicate_rng(seed, rep_index).random(n)
    low, high = law.support
    return np.where(u < law.probabilities[0], low, high)


def replicate_statistic(fit: RestrictedFit, kind: str, multipliers: np.ndarray) -> float:
    """
    Normalized statistic t* for given multipliers

    Refitting the null on W beta + eps* leaves residuals M_W eps*, so the
    stored factorization of W is reused. Ztilde is held fixed.
    """
    eps_star = (fit.resid_blocks * multipliers[:, None]).ravel()
    e_star = fit.maker.apply(eps_star)
    y_star = fit.fitted + eps_star
    xi_star = statistic_from_blocks(fit.Z_blocks, fit.panel.blocks(e_star), kind, y_star)
    return normalized_statistic(xi_star, fit.r_n)


def bootstrap_statistic(fit: RestrictedFit, law, kind: str, seed: int, rep_index: int) -> float:
    return replicate_statistic(fit, kind, draw_multipliers(law, fit.n, seed, rep_index))


@dataclass
class BootstrapDistribution:
    """Replicate statistics t* (failed replicates excluded)"""
    stats: np.ndarray = field(repr=False)
    B: int
    seed: int
    law: MultiplierLaw
    kind: str
    failures: int = 0

    @property
    def successful(self) -> int:
        return len(self.stats)


def _run_chunk(
    fit: RestrictedFit, law: MultiplierLaw, kind: str, seed: int, indices: range
) -> Tuple[List[Tuple[int, float]], List[Tuple[int, str]]]:
    values, failed = [], []
    for b in indices:
        try:
            values.append((b, bootstrap_statistic(fit, law, kind, seed, b)))
        except PanelSpecError as exc:
            failed.append((b, str(exc)))
    return values, failed


def run_bootstrap(
    fit: RestrictedFit,
    kind: str,
    law="rademacher",
    B: int = DEFAULT_BOOT_REPS,
    seed: int = 0,
    workers: Optional[int] = None,
) -> BootstrapDistribution:
    """
    Draw B wild-bootstrap replicates of the normalized statistic

    Args:
        fit: Restricted fit on the original sample
        kind: hom or hc
        law: mammen or rademacher
        B: Number of replicates
        seed: Master seed; replicate b uses stream (seed, b)
        workers: Thread count (None resolves from the machine)

    Returns:
        BootstrapDistribution with the successful replicate statistics
    """
    if B < 1:
        raise PanelSpecError(f"bootstrap needs at least one replicate, got B={B}")
    law = get_law(law)
    workers = get_worker_count(workers)

    stats = np.full(B, np.nan)
    chunks = [range(start, min(start + BOOTSTRAP_CHUNK_SIZE, B))
              for start in range(0, B, BOOTSTRAP_CHUNK_SIZE)]

    if workers == 1 or len(chunks) == 1:
        outcomes = [_run_chunk(fit, law, kind, seed, chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda c: _run_chunk(fit, law, kind, seed, c), chunks))

    failures = 0
    for values, failed in outcomes:
        for b, value in values:
            stats[b] = value
        for b, reason in failed:
            log_replicate_failure("bootstrap", b, reason)
            failures += 1

    if failures > MAX_FAILURE_SHARE * B:
        raise ReplicateFailureError(failures, B, "bootstrap replicates")

    logger.info(f"Bootstrap finished: B={B}, law={law.kind}, failures={failures}")
    return BootstrapDistribution(
        stats=stats[np.isfinite(stats)],
        B=B,
        seed=seed,
        law=law,
        kind=kind,
        failures=failures,
    )


def bootstrap_pvalue(observed: float, dist: BootstrapDistribution) -> float:
    """(1 + #{t* >= observed}) / (B + 1) over the successful replicates"""
    stats = dist.stats
    return (1 + int(np.sum(stats >= observed))) / (len(stats) + 1)


def bootstrap_critical_value(dist: BootstrapDistribution, level: float = 0.05) -> float:
    """The ceil((B + 1)(1 - level))-th smallest replicate statistic"""
    if not 0 < level < 1:
        raise PanelSpecError(f"level must lie in (0, 1), got {level}")
    ordered = np.sort(dist.stats)
    k = int(math.ceil((len(ordered) + 1) * (1 - level)))
    return float(ordered[min(max(k, 1), len(ordered)) - 1])


def write_bootstrap_csv(dist: BootstrapDistribution, path: str) -> None:
    pd.DataFrame({"t_star": dist.stats}).to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Wrote {dist.successful} bootstrap statistics to {path}")
