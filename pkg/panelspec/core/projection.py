"""
Restricted least squares on transformed panel data

The null model is fitted once by a column-pivoted QR factorization of W; the
resulting residual maker is reused for the test directions and for every
bootstrap replicate.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .basis import DesignSplit
from .errors import InsufficientRows, PanelSpecError, RankDeficientW
from .panel import TransformedPanel
from ..config import DEGENERATE_RESIDUAL_TOLERANCE, RANK_TOLERANCE
from ..logger import get_logger

logger = get_logger("panelspec.core.projection")


class ResidualMaker:
    """M_W = I - Q Q' for an orthonormal basis Q of span(W)"""

    def __init__(self, W: np.ndarray):
        nobs, m_n = W.shape
        if nobs <= m_n:
            raise InsufficientRows(f"{nobs} transformed rows cannot identify {m_n} null coefficients")
        if m_n == 0:
            self.Q = np.empty((nobs, 0))
            self.R = np.empty((0, 0))
            self.pivot = np.empty(0, dtype=int)
            return

        Q, R, pivot = linalg.qr(W, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        if diag[-1] <= RANK_TOLERANCE * diag[0]:
            raise RankDeficientW(
                f"W has numerical rank below {m_n} (|R_kk| ratio {diag[-1] / diag[0]:.2e})"
            )
        self.Q, self.R, self.pivot = Q, R, pivot

    @property
    def rank(self) -> int:
        return self.Q.shape[1]

    def project(self, A: np.ndarray) -> np.ndarray:
        return self.Q @ (self.Q.T @ A)

    def apply(self, A: np.ndarray) -> np.ndarray:
        return A - self.project(A)

    def coefficients(self, y: np.ndarray) -> np.ndarray:
        """Least-squares coefficients in the original column order of W"""
        beta = np.empty(self.rank)
        if self.rank:
            beta[self.pivot] = linalg.solve_triangular(self.R, self.Q.T @ y)
        return beta


@dataclass(frozen=True)
class RestrictedFit:
    """Null-model fit: coefficients, residuals, annihilated test directions and Sigma_T"""
    beta1: np.ndarray
    residuals: np.ndarray = field(repr=False)
    Ztilde: np.ndarray = field(repr=False)
    SigmaT: np.ndarray
    sigma_rank: int
    degenerate: bool
    panel: TransformedPanel = field(repr=False)
    design: DesignSplit = field(repr=False)
    maker: ResidualMaker = field(repr=False)

    @property
    def n(self) -> int:
        return self.panel.n

    @property
    def Tprime(self) -> int:
        return self.panel.Tprime

    @property
    def m_n(self) -> int:
        return self.design.m_n

    @property
    def r_n(self) -> int:
        return self.Ztilde.shape[1]

    @property
    def k_n(self) -> int:
        return self.m_n + self.r_n

    @property
    def resid_blocks(self) -> np.ndarray:
        """Residuals as (n, T') per-individual blocks"""
        return self.panel.blocks(self.residuals)

    @property
    def Z_blocks(self) -> np.ndarray:
        """Annihilated test directions as (n, T', r_n) blocks"""
        return self.panel.blocks(self.Ztilde)

    @property
    def fitted(self) -> np.ndarray:
        return self.panel.yhat - self.residuals


def _sigma_t(blocks: np.ndarray) -> np.ndarray:
    return blocks.T @ blocks / blocks.shape[0]


def is_degenerate(residuals: np.ndarray, reference: np.ndarray) -> bool:
    """True when residuals vanish relative to the outcome they came from"""
    scale = np.linalg.norm(reference)
    return bool(scale == 0 or np.linalg.norm(residuals) <= DEGENERATE_RESIDUAL_TOLERANCE * scale)


def fit_restricted(tp: TransformedPanel, ds: DesignSplit) -> RestrictedFit:
    """
    Regress the transformed outcome on W

    Args:
        tp: Transformed panel (supplies yhat and the per-individual blocking)
        ds: Design split, usually orthonormalized

    Returns:
        RestrictedFit with residuals e = M_W yhat and Ztilde = M_W Z
    """
    if ds.W.shape[0] != tp.nobs:
        raise PanelSpecError(
            f"design has {ds.W.shape[0]} rows but the transformed panel has {tp.nobs}"
        )
    maker = ResidualMaker(ds.W)
    y = np.asarray(tp.yhat)

    beta1 = maker.coefficients(y)
    residuals = maker.apply(y)
    Ztilde = maker.apply(ds.Z)

    SigmaT = _sigma_t(tp.blocks(residuals))
    eigenvalues = linalg.eigvalsh(SigmaT)
    sigma_rank = int(np.sum(eigenvalues > RANK_TOLERANCE * max(eigenvalues.max(), 1e-300)))

    degenerate = is_degenerate(residuals, y)
    if degenerate:
        logger.warning("Restricted residuals are numerically zero; the statistic is set to 0")

    logger.debug(
        f"Restricted fit: m_n={ds.m_n}, r_n={ds.r_n}, rank(Sigma_T)={sigma_rank} of {tp.Tprime}"
    )
    return RestrictedFit(
        beta1=beta1,
        residuals=residuals,
        Ztilde=Ztilde,
        SigmaT=SigmaT,
        sigma_rank=sigma_rank,
        degenerate=degenerate,
        panel=tp,
        design=ds,
        maker=maker,
    )


def with_directions(fit: RestrictedFit, ds: DesignSplit) -> RestrictedFit:
    """Same restricted fit, new test directions (W must be unchanged)"""
    if ds.W.shape != fit.design.W.shape or not np.allclose(ds.W, fit.design.W):
        raise PanelSpecError("candidate designs must share the restricted-model columns")
    return replace(fit, Ztilde=fit.maker.apply(ds.Z), design=ds)


def cross_moment(fit: RestrictedFit) -> np.ndarray:
    """sum_i Ztilde_i' e_i (un-normalized)"""
    return fit.Ztilde.T @ fit.residuals


def fitted_component(
    fit: RestrictedFit,
    variables: Sequence[str],
    X_level: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Estimated contribution of the null terms built only from `variables`

    Fixed effects absorb the level, so the curve is identified up to a constant;
    it is returned centred to mean zero over the evaluation points.

    Args:
        fit: Restricted fit
        variables: Regressor names whose own terms make up the component
        X_level: Evaluation points in level units (rows x d_x); defaults to the sample
    """
    raw = fit.design.raw
    if raw.designer is None or raw.spec_null is None:
        raise PanelSpecError("design carries no basis information to evaluate")

    coef, *_ = linalg.lstsq(raw.W, fit.fitted)
    terms, M = raw.designer.evaluate(raw.spec_null, X_level)
    column = {t.label: j for j, t in enumerate(terms)}
    wanted = set(variables)

    effect = np.zeros(M.shape[0])
    for label, beta in zip(raw.w_labels, coef):
        j = column[label]
        term = terms[j]
        if term.variables and set(term.variables) <= wanted:
            effect += beta * M[:, j]
    return effect - effect.mean()
