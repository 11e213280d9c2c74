"""Residual-on-residual least squares with heteroskedasticity-robust inference."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from .crossfit import ResidualSet, column_name

SE_VARIANTS = ("HC0", "HC1", "cluster")
P_REFERENCES = ("normal", "t")


class RankDeficiencyError(ValueError):
    """The treatment residual matrix does not have full column rank."""


@dataclass(frozen=True)
class FinalStage:
    coef: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    n: int
    se_variant: str


def sandwich_cov(R: np.ndarray, e: np.ndarray, variant: str = "HC1", clusters=None) -> np.ndarray:
    """Robust covariance bread^-1 meat bread^-1 of OLS coefficients.

    HC0 uses squared residuals as is; HC1 scales by n / (n - p). The
    cluster variant sums scores within clusters and applies the
    G/(G-1) * (n-1)/(n-p) correction.
    """
    n, p = R.shape
    bread = np.linalg.inv(R.T @ R)
    scores = R * e[:, None]
    if variant == "cluster":
        if clusters is None:
            raise ValueError("cluster standard errors need cluster ids")
        _, inv = np.unique(np.asarray(clusters), return_inverse=True)
        inv = inv.ravel()
        G = inv.max() + 1
        summed = np.zeros((G, p))
        np.add.at(summed, inv, scores)
        meat = summed.T @ summed
        scale = G / (G - 1) * (n - 1) / (n - p)
    elif variant in ("HC0", "HC1"):
        meat = scores.T @ scores
        scale = n / (n - p) if variant == "HC1" else 1.0
    else:
        raise ValueError(f"unknown se_variant {variant!r}; choose from {SE_VARIANTS}")
    return scale * bread @ meat @ bread


def two_sided_p(t: np.ndarray, reference: str = "normal", df: int | None = None) -> np.ndarray:
    t = np.abs(np.asarray(t, dtype=np.float64))
    if reference == "normal":
        return 2.0 * stats.norm.sf(t)
    if reference == "t":
        return 2.0 * stats.t.sf(t, df)
    raise ValueError(f"unknown p reference {reference!r}")


def final_stage_ols(
    residuals: ResidualSet,
    se_variant: str = "HC1",
    p_reference: str = "normal",
    rank_tol: float = 1e-10,
) -> FinalStage:
    """Regress outcome residuals on treatment residuals without intercept.

    Both sides are mean-centred first. Coefficients come from a QR-based
    least-squares solve; inference uses the chosen sandwich estimator and
    two-sided p-values from the chosen reference distribution.
    """
    y = residuals.r_Y - residuals.r_Y.mean()
    R = residuals.r_D - residuals.r_D.mean(axis=0)
    n, p = R.shape
    if n <= p:
        raise RankDeficiencyError(f"{n} rows cannot identify {p} coefficients")

    _, r_diag, piv = scipy.linalg.qr(R, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_diag))
    rank = int(np.sum(diag > rank_tol * diag[0])) if diag[0] > 0 else 0
    if rank < p:
        dependent = sorted(piv[rank:])
        listing = ", ".join(
            f"{column_name(residuals.columns[c])} (n={residuals.column_counts[c]})" for c in dependent
        )
        raise RankDeficiencyError(f"treatment residuals are collinear; dependent cells: {listing}")

    coef, *_ = np.linalg.lstsq(R, y, rcond=None)
    e = y - R @ coef
    clusters = residuals.groups if se_variant == "cluster" else None
    cov = sandwich_cov(R, e, se_variant, clusters)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.sign(coef) * np.inf))
    p_values = two_sided_p(t, p_reference, df=n - p)
    return FinalStage(coef, cov, se, t, p_values, n, se_variant)
