"""Two-qubit measurements: the product tetrahedron POM and the SIC POM.

Both POMs have 16 outcomes labelled ``(m, n)`` with ``m, n in 0..3`` and
are stored in lexicographic label order, so outcome ``4*m + n`` carries
label ``(m, n)``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import (ID2, ID4, SIGMA_X, SIGMA_Y, SIGMA_Z, check_hermitian,
                     kron, min_eigenvalue)

DIM = 4
N_OUTCOMES = DIM * DIM
LABELS = tuple((m, n) for m in range(DIM) for n in range(DIM))

# rank-1 SIC overlap constants for d = 4
SIC_A = 1.0 / (DIM + DIM ** 2)
SIC_B = SIC_A / DIM

IC_THRESHOLD = 1e-8

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

# Bloch-vector sign patterns of the tetrahedron outcomes T_0..T_3
_TETRA_SIGNS = np.array([
    [1, 1, 1],
    [1, -1, -1],
    [-1, -1, 1],
    [-1, 1, -1],
], dtype=float)


@dataclass(frozen=True)
class SicParameters:
    """Overlap constants with ``tr(P_j P_k) = a delta_jk + b``."""
    d: int
    a: float
    b: float

    @classmethod
    def rank_one(cls, d):
        a = 1.0 / (d + d * d)
        return cls(d, a, a / d)


@dataclass(frozen=True)
class HWGroup:
    d: int
    x_op: np.ndarray
    z_op: np.ndarray

    def element(self, m, n):
        """The unitary X^m Z^n."""
        return (np.linalg.matrix_power(self.x_op, m)
                @ np.linalg.matrix_power(self.z_op, n))

    def act(self, m, n, f):
        """Group action F -> X^m Z^n F Z^-n X^-m."""
        u = self.element(m, n)
        return u @ f @ u.conj().T


@dataclass(frozen=True)
class Pom:
    outcomes: np.ndarray
    duals: np.ndarray
    kind: str
    labels: tuple = field(default=LABELS)

    def __post_init__(self):
        for arr in (self.outcomes, self.duals):
            if arr.shape != (N_OUTCOMES, DIM, DIM):
                raise ValueError(f"expected shape (16, 4, 4), got {arr.shape}")
            arr.flags.writeable = False
        if self.kind not in ("product", "sic"):
            raise ValueError(f"unknown POM kind {self.kind!r}")

    def __len__(self):
        return len(self.outcomes)


def tetrahedron():
    """The four qubit outcomes T_j = (1 + t_j . sigma) / 4 with |t_j| = 1."""
    s3 = np.sqrt(3.0)
    out = []
    for sx, sy, sz in _TETRA_SIGNS:
        t = (s3 * ID2 + sx * SIGMA_X + sy * SIGMA_Y + sz * SIGMA_Z) / (4 * s3)
        out.append(t)
    return out


def tetrahedron_vectors():
    return _TETRA_SIGNS / np.sqrt(3.0)


def product_pom():
    t = tetrahedron()
    outcomes = np.array([kron(t[m], t[n]) for m, n in LABELS])
    duals = np.array([kron(6 * t[m] - ID2, 6 * t[n] - ID2) for m, n in LABELS])
    return Pom(outcomes, duals, "product")


def hw_group():
    """Two-qubit shift and clock operators on the basis |00>, |01>, |10>, |11>."""
    z = 0.5 * (1 + 1j) * kron(SIGMA_Z, ID2 - 1j * SIGMA_Z)
    x = 0.5 * kron(ID2 + SIGMA_X, SIGMA_X) - 0.5j * kron(ID2 - SIGMA_X, SIGMA_Y)
    return HWGroup(DIM, x, z)


def appleby_fiducial():
    g = GOLDEN
    w = np.exp(1j * np.pi / 4)
    f = np.array([
        1 + np.conj(w),
        w + 1j * g ** -1.5,
        1 - np.conj(w),
        w - 1j * g ** -1.5,
    ])
    return f / (2 * np.sqrt(3 + g))


def dual_operators(outcomes):
    """Reconstruction operators dual to a minimal IC set of outcomes.

    Solves ``tr(P_j Pi_k) = delta_jk`` through the inverse of the outcome
    Gram matrix.  Used to cross-check the closed forms.
    """
    outcomes = np.asarray(outcomes)
    gram = gram_matrix(outcomes)
    return np.einsum("jk,kab->jab", np.linalg.inv(gram), outcomes)


def gram_matrix(outcomes):
    return np.einsum("jab,kba->jk", outcomes, outcomes).real


def sic_pom():
    hw = hw_group()
    f = appleby_fiducial()
    fid = np.outer(f, f.conj()) / DIM
    outcomes = np.array([hw.act(m, n, fid) for m, n in LABELS])
    outcomes = 0.5 * (outcomes + outcomes.conj().swapaxes(1, 2))
    duals = (DIM + DIM ** 2) * outcomes - ID4
    return Pom(outcomes, duals, "sic")


def make_pom(kind):
    if kind == "product":
        return product_pom()
    if kind == "sic":
        return sic_pom()
    raise ValueError(f"unknown POM kind {kind!r}")


def probabilities(pom, rho):
    """Outcome probabilities tr(rho Pi_j).

    ``rho`` may be a single 4x4 matrix or a stack ``(..., 4, 4)``.
    """
    rho = np.asarray(rho)
    return np.einsum("...ab,jba->...j", rho, pom.outcomes).real


def reconstruct(pom, p):
    """sum_j p_j P_j for a probability (or frequency) vector or a stack of them."""
    return np.einsum("...j,jab->...ab", np.asarray(p, dtype=float), pom.duals)


@dataclass
class Check:
    name: str
    residual: float
    passed: bool
    required: bool = True
    detail: str = ""


@dataclass
class PomReport:
    kind: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.required)

    @property
    def max_residual(self):
        return max(c.residual for c in self.checks if c.required and np.isfinite(c.residual))

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self):
        lines = [f"POM kind: {self.kind}"]
        for c in self.checks:
            status = "PASS" if c.passed else ("FAIL" if c.required else "info")
            line = f"  {c.name:<28s} {status:<5s} residual={c.residual:.3e}"
            if c.detail:
                line += f"  ({c.detail})"
            lines.append(line)
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def verify_pom(p, tol=1e-10):
    """Run the algebraic checks on a POM and collect residuals."""
    outs = np.asarray(p.outcomes)
    duals = np.asarray(p.duals)
    checks = []

    herm = max(float(np.max(np.abs(o - o.conj().T))) for o in outs)
    checks.append(Check("hermiticity", herm, herm <= tol))

    r = float(np.max(np.abs(outs.sum(axis=0) - ID4)))
    checks.append(Check("completeness", r, r <= tol))

    mins = [min_eigenvalue(check_hermitian(0.5 * (o + o.conj().T))) for o in outs]
    worst = min(mins)
    checks.append(Check("positivity", max(0.0, -worst), worst >= -1e-12,
                        detail=f"min eigenvalue {worst:.3e}"))

    traces = np.trace(outs, axis1=1, axis2=2)
    r = float(np.max(np.abs(traces - 1.0 / DIM)))
    checks.append(Check("trace", r, r <= tol))

    gram = gram_matrix(outs)
    sic_pattern = SIC_A * np.eye(N_OUTCOMES) + SIC_B
    r = float(np.max(np.abs(gram - sic_pattern)))
    is_sic = r <= tol
    checks.append(Check("sic_gram", r, is_sic, required=(p.kind == "sic"),
                        detail="SIC overlap pattern" if is_sic else "non-SIC Gram pattern"))

    dual_gram = np.einsum("jab,kba->jk", duals, outs).real
    r = float(np.max(np.abs(dual_gram - np.eye(N_OUTCOMES))))
    checks.append(Check("duality", r, r <= 10 * tol))

    r = float(np.max(np.abs(duals.sum(axis=0) - DIM * ID4)))
    checks.append(Check("dual_sum", r, r <= 10 * tol))

    r = float(np.max(np.abs(np.trace(duals, axis1=1, axis2=2) - 1.0)))
    checks.append(Check("dual_trace", r, r <= 10 * tol))

    smin = float(np.linalg.svd(gram, compute_uv=False)[-1])
    checks.append(Check("informational_completeness", 0.0, smin > IC_THRESHOLD,
                        detail=f"smallest Gram singular value {smin:.3e}"))
    return PomReport(p.kind, checks)


def pom_to_dict(p):
    return {
        "kind": p.kind,
        "labels": [list(lab) for lab in p.labels],
        "outcomes_real": np.asarray(p.outcomes).real.tolist(),
        "outcomes_imag": np.asarray(p.outcomes).imag.tolist(),
        "duals_real": np.asarray(p.duals).real.tolist(),
        "duals_imag": np.asarray(p.duals).imag.tolist(),
    }


def pom_from_dict(data):
    outs = np.array(data["outcomes_real"]) + 1j * np.array(data["outcomes_imag"])
    if "duals_real" in data:
        duals = np.array(data["duals_real"]) + 1j * np.array(data["duals_imag"])
    else:
        duals = dual_operators(outs)
    labels = tuple(tuple(lab) for lab in data["labels"])
    return Pom(outs, duals, data["kind"], labels)


def save_pom(p, path):
    with open(path, "w") as fh:
        json.dump(pom_to_dict(p), fh, indent=1)


def load_pom(path):
    with open(path) as fh:
        return pom_from_dict(json.load(fh))
