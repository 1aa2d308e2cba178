"""True states: Bell states, random ensembles, purity and concurrence."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import ID4, SIGMA_X, SIGMA_Y, SIGMA_Z, check_hermitian, kron, min_eigenvalue

ENSEMBLE_KINDS = ("unbiased_mixed", "biased_mixed", "pure", "max_entangled", "bell", "fixed")
BELL_LABELS = ("psi_minus", "phi_minus", "phi_plus", "psi_plus")

# Pauli-correlation signs (xx, yy, zz) of the four Bell states
_BELL_SIGNS = {
    "psi_minus": (-1, -1, -1),
    "phi_minus": (-1, 1, 1),
    "phi_plus": (1, -1, 1),
    "psi_plus": (1, 1, -1),
}

STATE_TOL = 1e-10


class InvalidStateError(ValueError):
    pass


def check_state(rho, tol=STATE_TOL):
    """Validate a 4x4 density matrix and return it as a complex array."""
    rho = check_hermitian(rho)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected 4x4 state, got {rho.shape}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-12 * 100:
        raise InvalidStateError(f"trace {tr!r} != 1")
    if min_eigenvalue(rho) < -tol:
        raise InvalidStateError("state has a negative eigenvalue")
    return rho


def bell_state(which):
    try:
        sx, sy, sz = _BELL_SIGNS[which]
    except KeyError:
        raise ValueError(f"unknown Bell state {which!r}; choose from {BELL_LABELS}") from None
    return 0.25 * (ID4 + sx * kron(SIGMA_X, SIGMA_X) + sy * kron(SIGMA_Y, SIGMA_Y)
                   + sz * kron(SIGMA_Z, SIGMA_Z))


def purity(rho):
    rho = np.asarray(rho)
    return float(np.einsum("ab,ba->", rho, rho).real)


def concurrence_pure(psi, tol=1e-10):
    """Concurrence |<psi| sy(x)sy |psi*>| of a normalized two-qubit ket."""
    psi = np.asarray(psi, dtype=complex).reshape(4)
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise ValueError("ket is not normalized")
    yy = kron(SIGMA_Y, SIGMA_Y)
    return float(abs(psi.conj() @ yy @ psi.conj()))


def haar_unitary(rng, d=2):
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def partial_trace(rho, keep):
    """Reduced state of qubit ``keep`` (0 or 1)."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ajbj->ab", r)
    return np.einsum("jajb->ab", r)


@dataclass
class EnsembleSpec:
    """Description of a sample of true states.

    ``mean`` is the 4 x rank offset matrix of the Gaussian entries (biased
    samples only).  ``label`` names the Bell state for kind ``bell`` and
    ``matrix`` holds the state for kind ``fixed``.
    """
    kind: str
    rank: int = 4
    mean: np.ndarray = None
    seed: int = 0
    label: str = None
    matrix: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "pure":
            self.rank = 1
        if self.kind == "unbiased_mixed":
            self.rank = 4
            self.mean = None
        if not 1 <= int(self.rank) <= 4:
            raise ValueError(f"rank must be in 1..4, got {self.rank}")
        if self.mean is not None:
            self.mean = np.asarray(self.mean, dtype=complex)
            if self.mean.shape != (4, self.rank):
                raise ValueError(f"mean matrix must be 4 x {self.rank}, got {self.mean.shape}")

    def to_dict(self):
        d = {"kind": self.kind, "rank": int(self.rank), "seed": int(self.seed)}
        if self.mean is not None:
            d["mean_real"] = self.mean.real.tolist()
            d["mean_imag"] = self.mean.imag.tolist()
        if self.label is not None:
            d["label"] = self.label
        if self.matrix is not None:
            d["matrix"] = state_record(self.matrix)
        return d

    @classmethod
    def from_dict(cls, d):
        mean = None
        if "mean_real" in d:
            mean = np.array(d["mean_real"]) + 1j * np.array(d.get("mean_imag", 0.0))
        matrix = state_from_record(d["matrix"]) if "matrix" in d else None
        return cls(kind=d["kind"], rank=d.get("rank", 4), mean=mean,
                   seed=d.get("seed", 0), label=d.get("label"), matrix=matrix)


def biased_mean(scale, rank=4):
    """Rank-one offset matrix with a single entry ``scale`` at (0, 0)."""
    m = np.zeros((4, rank), dtype=complex)
    m[0, 0] = scale
    return m


def _gaussian_states(mean, rank, size, rng):
    y = rng.standard_normal((size, 4, rank)) + 1j * rng.standard_normal((size, 4, rank))
    if mean is not None:
        y = y + mean
    rho = y @ y.conj().swapaxes(1, 2)
    return rho / np.trace(rho, axis1=1, axis2=2).real[:, None, None]


def random_state(spec, rng):
    """Draw one state from the ensemble described by ``spec``."""
    kind = spec.kind
    if kind in ("unbiased_mixed", "biased_mixed", "pure"):
        rho = _gaussian_states(spec.mean, spec.rank, 1, rng)[0]
        return 0.5 * (rho + rho.conj().T)
    if kind == "max_entangled":
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        u = np.kron(haar_unitary(rng), haar_unitary(rng))
        psi = u @ phi
        return np.outer(psi, psi.conj())
    if kind == "bell":
        return bell_state(spec.label or "psi_minus")
    if kind == "fixed":
        return check_state(spec.matrix)
    raise ValueError(f"cannot sample ensemble kind {kind!r}")


def sample_states(spec, count, rng=None):
    """Draw ``count`` states; the stream depends only on ``spec.seed`` when no rng is given."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return np.array([random_state(spec, rng) for _ in range(count)])


def batch_purity(rho):
    return np.einsum("...ab,...ba->...", rho, rho).real


def calibrate_biased_mean(target_purity, confidence, rng, rank=4, draws=10_000,
                          tol=1e-3, max_scale=1e3):
    """Scale a rank-one offset until P(purity > target) >= confidence.

    The same Gaussian draws are reused for every trial scale, so the
    estimated probability is monotone in the scale and the bisection is
    deterministic.  The Monte Carlo estimate must clear ``confidence`` by
    three standard errors so that a fresh sample also clears it.
    """
    if not 0.25 < target_purity < 1:
        raise ValueError("target purity must lie in (1/4, 1)")
    goal = confidence + 3 * np.sqrt(confidence * (1 - confidence) / draws)
    g = rng.standard_normal((draws, 4, rank)) + 1j * rng.standard_normal((draws, 4, rank))

    def prob(scale):
        y = g + biased_mean(scale, rank)
        rho = y @ y.conj().swapaxes(1, 2)
        rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
        return float(np.mean(batch_purity(rho) > target_purity))

    lo, hi = 0.0, 1.0
    while prob(hi) < goal:
        lo, hi = hi, 2 * hi
        if hi > max_scale:
            raise RuntimeError("could not bracket the offset scale")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if prob(mid) >= goal:
            hi = mid
        else:
            lo = mid
    return biased_mean(hi, rank)


def state_record(rho):
    """Flatten a 4x4 state to 32 reals: row-major real parts then imaginary parts."""
    rho = np.asarray(rho)
    return rho.real.ravel().tolist() + rho.imag.ravel().tolist()


def state_from_record(rec):
    rec = np.asarray(rec, dtype=float)
    if rec.shape != (32,):
        raise ValueError("state record must hold 32 numbers")
    return (rec[:16] + 1j * rec[16:]).reshape(4, 4)
