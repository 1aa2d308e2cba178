"""Trace distance, power-law fits and the POM performance factor."""

from dataclasses import dataclass

import numpy as np

from .linalg import check_hermitian, eigvalsh, hermitian_trace_norm_batch

D_THRESHOLD = 0.1


@dataclass(frozen=True)
class PowerLawFit:
    """D(N) = a / N**c, fitted by least squares on log-log data."""
    a: float
    c: float
    n_points: int
    residual_rms: float

    def predict(self, n):
        return self.a * np.asarray(n, dtype=float) ** (-self.c)


@dataclass(frozen=True)
class EtaReport:
    eta: float
    n_prod_thr: float
    n_sic_thr: float
    d_thr: float


def trace_distance(rho, sigma):
    """Half the trace norm of rho - sigma."""
    diff = check_hermitian(np.asarray(rho) - np.asarray(sigma))
    # fix the overall sign so that swapping the arguments is bit-exact
    flat = diff.view(float).ravel() if diff.dtype == complex else diff.ravel()
    nz = np.flatnonzero(flat)
    if nz.size and flat[nz[0]] < 0:
        diff = -diff
    return 0.5 * float(np.sum(np.abs(eigvalsh(diff))))


def trace_distance_batch(rho, sigma):
    return 0.5 * hermitian_trace_norm_batch(np.asarray(rho) - np.asarray(sigma))


def fit_power_law(points):
    """Ordinary least squares of log D against log N.

    ``points`` is a sequence of ``(N, D_avg)`` pairs.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (N, D) points")
    n, d = pts[:, 0], pts[:, 1]
    if np.any(d <= 0) or np.any(n <= 0):
        raise ValueError("N and D must be positive")
    if len(np.unique(n)) != len(n):
        raise ValueError("N values must be distinct")
    x, y = np.log(n), np.log(d)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return PowerLawFit(float(np.exp(intercept)), float(-slope), len(n),
                       float(np.sqrt(np.mean(resid ** 2))))


def n_to_threshold(fit, d_thr=D_THRESHOLD):
    if fit.c <= 0:
        raise ValueError(f"non-decreasing power law (c = {fit.c})")
    if d_thr <= 0:
        raise ValueError("threshold must be positive")
    return (fit.a / d_thr) ** (1.0 / fit.c)


def eta(prod_fit, sic_fit, d_thr=D_THRESHOLD):
    """N(product) / N(SIC) needed to reach ``d_thr``; below 1 favours the product POM."""
    n_prod = n_to_threshold(prod_fit, d_thr)
    n_sic = n_to_threshold(sic_fit, d_thr)
    return EtaReport(n_prod / n_sic, n_prod, n_sic, d_thr)
