"""State reconstruction from relative frequencies.

Two estimators are provided:

* raw-data (RD) linear inversion through the dual operators of the POM;
* maximum likelihood (ML) by the iteration
  ``rho -> (1 + eps R) rho (1 + eps R) / tr(...)`` with
  ``R = sum_j f_j Pi_j / tr(rho Pi_j) - 1`` and a per-step quadratic line
  search for ``eps``.

The ML loop is vectorised over a batch of frequency vectors; the
single-instance functions are thin wrappers.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import ID4, min_eigenvalue, min_eigenvalue_batch, trace_norm, trace_norm_batch
from .pom import reconstruct

PHYSICAL_TOL = 1e-10
MAX_HALVINGS = 20


class ProbabilityFloorWarning(RuntimeWarning):
    """A cell with nonzero frequency has (numerically) zero probability."""


@dataclass(frozen=True)
class MlConfig:
    # 1e-8 is out of reach within 5000 steps for a few percent of
    # rank-deficient problems: the update shrinks a degenerate boundary
    # eigenvalue only like 1/k.
    stop_threshold: float = 1e-6
    max_iterations: int = 5000
    trial_epsilons: tuple = (0.1, 0.5)
    epsilon_cap: float = 10.0
    probability_floor: float = 1e-12

    def __post_init__(self):
        ea, eb = self.trial_epsilons
        if min(self.stop_threshold, self.max_iterations, ea, eb,
               self.epsilon_cap, self.probability_floor) <= 0:
            raise ValueError("ML configuration values must be positive")
        if ea == eb:
            raise ValueError("trial epsilons must differ")
        object.__setattr__(self, "trial_epsilons", (float(ea), float(eb)))

    def to_dict(self):
        return {
            "stop_threshold": self.stop_threshold,
            "max_iterations": self.max_iterations,
            "trial_epsilons": list(self.trial_epsilons),
            "epsilon_cap": self.epsilon_cap,
            "probability_floor": self.probability_floor,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "trial_epsilons" in d:
            d["trial_epsilons"] = tuple(d["trial_epsilons"])
        return cls(**d)


@dataclass(frozen=True)
class RdEstimate:
    matrix: np.ndarray
    min_eig: float
    physical: bool


@dataclass
class MlResult:
    estimate: np.ndarray
    iterations: int
    final_stop_metric: float
    loglik_trace: list = field(default_factory=list)
    status: str = "converged"
    floored: bool = False

    @property
    def converged(self):
        return self.status == "converged"

    def csv_row(self):
        return [self.status, self.iterations, repr(self.final_stop_metric), int(self.floored)]


ML_RESULT_COLUMNS = ["status", "iterations", "final_stop_metric", "floored"]


# --- raw-data inversion -------------------------------------------------------

def rd_estimate(pom, f):
    rho = reconstruct(pom, f)
    rho = 0.5 * (rho + rho.conj().T)
    lam = min_eigenvalue(rho)
    return RdEstimate(rho, lam, lam >= -PHYSICAL_TOL)


def rd_estimate_batch(pom, freqs):
    """RD estimates for a stack of frequency vectors; returns (matrices, min eigenvalues)."""
    rho = reconstruct(pom, freqs)
    rho = 0.5 * (rho + rho.conj().swapaxes(-1, -2))
    return rho, min_eigenvalue_batch(rho)


# --- likelihood and R operator ------------------------------------------------

def log_likelihood(pom, f, n, rho, probability_floor=1e-12):
    """N sum_j f_j log p_j, with 0 log 0 = 0 and p floored where f > 0."""
    f = np.asarray(f, dtype=float)
    p = np.einsum("ab,jba->j", rho, pom.outcomes).real
    mask = f > 0
    if np.any(p[mask] < probability_floor):
        warnings.warn("probability floor activated", ProbabilityFloorWarning, stacklevel=2)
    p = np.maximum(p, probability_floor)
    return float(n * np.sum(f[mask] * np.log(p[mask])))


def ml_r_operator(pom, f, rho, probability_floor=1e-12):
    f = np.asarray(f, dtype=float)
    p = np.einsum("ab,jba->j", rho, pom.outcomes).real
    w = np.where(f > 0, f / np.maximum(p, probability_floor), 0.0)
    r = np.einsum("j,jab->ab", w, pom.outcomes) - ID4
    return 0.5 * (r + r.conj().T)


# --- batched ML iteration -----------------------------------------------------

class _Kernel:
    """Outcome operators laid out for batched traces in real arithmetic.

    Complex arrays are viewed as interleaved (re, im) float arrays, which
    turns every projection into a single real matrix product.
    """

    def __init__(self, outcomes, floor):
        outs = np.asarray(outcomes)
        n = len(outs)
        flat = outs.reshape(n, 16)
        self.expand = np.empty((n, 32))
        self.expand[:, 0::2] = flat.real
        self.expand[:, 1::2] = flat.imag
        # Re tr(A Pi_j) = sum_ab Re(A_ab) Re(Pi_ba) - Im(A_ab) Im(Pi_ba)
        tr = outs.swapaxes(1, 2).reshape(n, 16).T
        self.project = np.empty((32, n))
        self.project[0::2] = tr.real
        self.project[1::2] = -tr.imag
        self.floor = floor

    def probs(self, a):
        """Real parts of tr(a Pi_j) for a C-contiguous stack of 4x4 matrices."""
        return np.ascontiguousarray(a).reshape(len(a), 16).view(float) @ self.project

    def r_operator(self, f, p):
        w = np.where(f > 0, f / np.maximum(p, self.floor), 0.0)
        r = (w @ self.expand).view(complex).reshape(-1, 4, 4)
        r -= ID4
        return r


class _StepGain:
    """Per-click log-likelihood change along the update curve, one step size per row.

    With ``G1 = R rho + rho R`` and ``G2 = R rho R`` the updated state is
    ``(rho + e G1 + e^2 G2) / (1 + e t1 + e^2 t2)``.  The change of the
    probabilities is formed directly, so small gains near convergence are
    not swamped by rounding in the probabilities themselves.
    """

    def __init__(self, f, p, q1, q2):
        self.mask = f > 0
        self.f = f
        safe_p = np.where(self.mask, p, 1.0)
        self.u1 = np.where(self.mask, q1 / safe_p, 0.0)
        self.u2 = np.where(self.mask, q2 / safe_p, 0.0)
        self.t1 = q1.sum(axis=1)
        self.t2 = q2.sum(axis=1)

    def __call__(self, eps, rows=slice(None)):
        t1, t2 = self.t1[rows], self.t2[rows]
        e = eps[:, None]
        shift = (eps * t1 + eps * eps * t2)[:, None]
        ratio = (e * self.u1[rows] + e * e * self.u2[rows] - shift) / (1.0 + shift)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(self.mask[rows],
                             self.f[rows] * np.log1p(np.maximum(ratio, -1.0)), 0.0)
        gain = terms.sum(axis=1)
        gain[~np.isfinite(gain)] = -np.inf
        return gain


def _screened_trace_norm(a, threshold):
    """Trace norms, computed exactly only where the threshold test needs it.

    For 4x4 matrices ||a||_F <= ||a||_1 <= 2 ||a||_F, so rows with
    ||a||_F >= threshold are certainly above it; for those the Frobenius
    norm is returned as a lower bound.
    """
    fro = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    out = fro.copy()
    near = fro < threshold
    if np.any(near):
        out[near] = trace_norm_batch(a[near])
    return out


def ml_estimate_batch(pom, freqs, cfg=None, start=None, callback=None):
    """ML estimates for a stack of frequency vectors.

    Parameters
    ----------
    pom : Pom
    freqs : array, shape (B, 16)
    cfg : MlConfig, optional
    start : array, shape (B, 4, 4) or (4, 4), optional
        Initial states; the completely mixed state by default.
    callback : callable, optional
        Called as ``callback(index, rho, gain)`` after every accepted step,
        with the batch indices that moved, their new states and their
        per-click log-likelihood gains.

    Returns
    -------
    dict with arrays ``estimate``, ``iterations``, ``stop_metric``,
    ``status`` (0 converged, 1 stalled, 2 iteration cap) and ``floored``.
    """
    cfg = cfg or MlConfig()
    f = np.atleast_2d(np.asarray(freqs, dtype=float))
    bsz = len(f)
    kernel = _Kernel(pom.outcomes, cfg.probability_floor)
    if start is None:
        rho = np.broadcast_to(ID4 / 4, (bsz, 4, 4)).copy()
    else:
        rho = np.broadcast_to(np.asarray(start, dtype=complex), (bsz, 4, 4)).copy()

    iterations = np.zeros(bsz, dtype=int)
    metric = np.full(bsz, np.inf)
    status = np.full(bsz, 2, dtype=int)
    floored = np.zeros(bsz, dtype=bool)
    active = np.arange(bsz)
    ea, eb = cfg.trial_epsilons

    while active.size:
        r0 = rho[active]
        fa = f[active]
        p = kernel.probs(r0)
        floored[active] |= np.any((fa > 0) & (p < cfg.probability_floor), axis=1)
        big_r = kernel.r_operator(fa, p)
        r_rho = big_r @ r0
        m = _screened_trace_norm(r_rho, cfg.stop_threshold)
        metric[active] = m

        done = m < cfg.stop_threshold
        status[active[done]] = 0
        capped = ~done & (iterations[active] >= cfg.max_iterations)
        keep = ~done & ~capped
        if not np.any(keep):
            break
        active = active[keep]
        r0, fa, p, big_r, r_rho = r0[keep], fa[keep], p[keep], big_r[keep], r_rho[keep]

        # tr((R rho + rho R) Pi) = 2 Re tr(R rho Pi) for Hermitian R, rho, Pi
        g2 = r_rho @ big_r
        gain = _StepGain(fa, p, 2.0 * kernel.probs(r_rho), kernel.probs(g2))
        k = len(active)

        e1 = np.full(k, ea)
        e2 = np.full(k, eb)
        l1 = gain(e1)
        l2 = gain(e2)

        # quadratic A e^2 + B e through (0, 0), (e1, l1), (e2, l2)
        with np.errstate(invalid="ignore", over="ignore"):
            qa = (l2 / e2 - l1 / e1) / (e2 - e1)
            qb = l1 / e1 - qa * e1
            estar = -qb / (2 * qa)
        concave = np.isfinite(estar) & (qa < 0) & (estar > 0)
        estar = np.where(concave, np.minimum(estar, cfg.epsilon_cap), ea)
        l3 = np.where(concave, gain(estar), -np.inf)

        gains = np.stack([l3, l1, l2])
        best = np.argmax(gains, axis=0)
        best_gain = gains[best, np.arange(k)]
        step = np.stack([estar, e1, e2])[best, np.arange(k)]

        # no trial value helps: keep halving the smaller trial step
        stuck = ~(best_gain > 0)
        if np.any(stuck):
            idx = np.flatnonzero(stuck)
            eps = np.full(idx.size, ea)
            for _ in range(MAX_HALVINGS):
                if idx.size == 0:
                    break
                eps = eps / 2
                lg = gain(eps, idx)
                ok = lg > 0
                best_gain[idx[ok]] = lg[ok]
                step[idx[ok]] = eps[ok]
                idx, eps = idx[~ok], eps[~ok]
            stuck = ~(best_gain > 0)

        moved = ~stuck
        if np.any(stuck):
            status[active[stuck]] = 1
        e = step[moved][:, None, None]
        rr = r_rho[moved]
        new = r0[moved] + e * (rr + rr.conj().swapaxes(1, 2)) + e * e * g2[moved]
        new = 0.5 * (new + new.conj().swapaxes(1, 2))
        new /= np.trace(new, axis1=1, axis2=2).real[:, None, None]
        rho[active[moved]] = new
        iterations[active[moved]] += 1
        if callback is not None and np.any(moved):
            callback(active[moved], new, best_gain[moved])
        active = active[moved]

    inexact = status != 0
    if np.any(inexact):
        rr = rho[inexact]
        p = kernel.probs(rr)
        metric[inexact] = trace_norm_batch(kernel.r_operator(f[inexact], p) @ rr)
    return {
        "estimate": rho,
        "iterations": iterations,
        "stop_metric": metric,
        "status": status,
        "floored": floored,
    }


_STATUS = {0: "converged", 1: "stalled", 2: "max_iterations"}


def ml_estimate(pom, f, n, cfg=None, start=None, record_iterates=False):
    """Maximum-likelihood state for one frequency vector.

    ``n`` only scales the recorded log-likelihood values.  With
    ``record_iterates`` the states visited are kept on ``result.iterates``.
    """
    cfg = cfg or MlConfig()
    f = np.asarray(f, dtype=float)
    rho0 = ID4 / 4 if start is None else np.asarray(start, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProbabilityFloorWarning)
        trace = [log_likelihood(pom, f, n, rho0, cfg.probability_floor)]
    iterates = [rho0]

    def record(_, new, gain):
        trace.append(trace[-1] + n * float(gain[0]))
        if record_iterates:
            iterates.append(new[0].copy())

    out = ml_estimate_batch(pom, f[None], cfg, start=rho0, callback=record)
    res = MlResult(
        estimate=out["estimate"][0],
        iterations=int(out["iterations"][0]),
        final_stop_metric=float(out["stop_metric"][0]),
        loglik_trace=trace,
        status=_STATUS[int(out["status"][0])],
        floored=bool(out["floored"][0]),
    )
    if record_iterates:
        res.iterates = iterates
    return res


def stop_metric(pom, f, rho, probability_floor=1e-12):
    """tr|R rho|, the quantity the ML iteration drives below its threshold."""
    r = ml_r_operator(pom, f, rho, probability_floor)
    return trace_norm(r @ rho)


def warm_start(rd_matrix, floor=1e-3):
    """A full-rank state near an RD estimate: clip eigenvalues at ``floor`` and renormalise."""
    w, v = np.linalg.eigh(0.5 * (rd_matrix + rd_matrix.conj().T))
    w = np.maximum(w, floor)
    rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real
