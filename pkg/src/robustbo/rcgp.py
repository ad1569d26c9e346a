"""Robust conjugate GP posterior and the Schur-complement deviation oracle.

The robust posterior replaces K + noise_var*I with K + noise_var*J_w and
shifts the targets by m_w.  When every residual sits inside the weight
plateau, J_w is the identity and m_w is zero, so the update collapses to
the standard GP bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gp import _predict_core, gp_fit
from .kernels import KernelSpec, _as_points, cross_matrix, gram_matrix, jittered_cho_factor, solve_cho
from .weights import NEGLIGIBLE_WEIGHT_RATIO, PimqParams, WeightCorrections, build_corrections

__all__ = ["RcgpPosterior", "rcgp_fit", "rcgp_predict", "deviation_schur"]


@dataclass(frozen=True)
class RcgpPosterior:
    """Immutable fitted robust GP: data, corrections, factorized K + noise_var*J_w."""

    X: np.ndarray
    y: np.ndarray
    spec: KernelSpec
    noise_var: float
    corrections: WeightCorrections
    chol: object = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    def predict(self, Xq):
        Xq = _as_points(Xq, self.spec.dim)
        return _predict_core(self.spec, self.X, self.chol, self.alpha, Xq)


def rcgp_fit(X, y, spec: KernelSpec, noise_var: float, params: PimqParams) -> RcgpPosterior:
    """Fit the robust posterior with corrections derived from the weight function."""
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] > 0:
        X = _as_points(X, spec.dim)
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y must have equal length")
        corr = build_corrections(params, noise_var, X, y)
        keep = corr.weights > NEGLIGIBLE_WEIGHT_RATIO * params.w_max
        if not np.all(keep):
            X, y = X[keep], y[keep]
            corr = WeightCorrections(corr.weights[keep], corr.jw[keep], corr.mw[keep])
    if y.shape[0] == 0:
        X = np.empty((0, spec.dim))
        corr = WeightCorrections(np.empty(0), np.empty(0), np.empty(0))
        return RcgpPosterior(X, y, spec, noise_var, corr, None, np.empty(0))
    A = gram_matrix(spec, X)
    A[np.diag_indices_from(A)] += noise_var * corr.jw
    chol = jittered_cho_factor(A, spec.outputscale)
    alpha = solve_cho(chol, y - corr.mw)
    return RcgpPosterior(X, y, spec, float(noise_var), corr, chol, alpha)


def rcgp_predict(post: RcgpPosterior, x) -> tuple[float, float]:
    mean, var = post.predict(x)
    return float(mean[0]), float(var[0])


def deviation_schur(clean, corrupt, spec: KernelSpec, noise_var: float, params: PimqParams, x):
    """Predicted gap between the full robust mean and the clean-only GP mean.

    Test-only oracle: requires ground-truth corruption labels, and assumes the
    clean residuals all lie inside the weight plateau (the caller asserts
    this).  Returns the deviation at each query point.

    clean and corrupt are (X, y) pairs; corrupt must be nonempty.
    """
    Xu, yu = clean
    Xc, yc = corrupt
    Xc = _as_points(Xc, spec.dim)
    yc = np.asarray(yc, dtype=float).reshape(-1)
    if yc.shape[0] == 0:
        raise ValueError("corrupt subset must be nonempty")
    Xq = _as_points(x, spec.dim)

    uc = gp_fit(Xu, yu, spec, noise_var)

    def cov_uc(A, B):
        # Posterior covariance conditioned on the clean subset.
        Kab = cross_matrix(spec, A, B)
        if uc.X.shape[0] == 0:
            return Kab
        Ka = cross_matrix(spec, uc.X, A)
        Kb = cross_matrix(spec, uc.X, B)
        return Kab - Ka.T @ solve_cho(uc.chol, Kb)

    corr_c = build_corrections(params, noise_var, Xc, yc)
    keep = corr_c.weights > NEGLIGIBLE_WEIGHT_RATIO * params.w_max
    if not np.all(keep):
        Xc, yc = Xc[keep], yc[keep]
        corr_c = WeightCorrections(corr_c.weights[keep], corr_c.jw[keep], corr_c.mw[keep])
        if yc.shape[0] == 0:
            dev = np.zeros(Xq.shape[0])
            return dev if Xq.shape[0] > 1 else float(dev[0])
    S = cov_uc(Xc, Xc) + noise_var * np.diag(corr_c.jw)
    S = 0.5 * (S + S.T)
    chol_s = jittered_cho_factor(S, spec.outputscale + noise_var * float(np.max(corr_c.jw)))
    mu_uc_c, _ = uc.predict(Xc)
    rhs = solve_cho(chol_s, yc - corr_c.mw - mu_uc_c)
    dev = cov_uc(Xc, Xq).T @ rhs
    return dev if Xq.shape[0] > 1 else float(dev[0])
