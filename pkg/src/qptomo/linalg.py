"""Small dense complex linear algebra for 2x2 and 4x4 operators.

Everything here works on plain ``numpy`` arrays.  The single-matrix
routines use a cyclic Jacobi eigensolver; the ``*_batch`` helpers at the
bottom operate on stacks of shape ``(..., d, d)`` and are what the
estimation loops call.
"""

import numpy as np

HERMITIAN_RTOL = 1e-12
EIGEN_RTOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
ID4 = np.eye(4, dtype=complex)


class NotHermitianError(ValueError):
    pass


def _as_square(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermiticity_residual(a):
    """Max |a_ij - conj(a_ji)|."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().swapaxes(-1, -2))))


def is_hermitian(a, rtol=HERMITIAN_RTOL):
    a = _as_square(a)
    return hermiticity_residual(a) <= rtol * (1.0 + np.max(np.abs(a)))


def check_hermitian(a, rtol=HERMITIAN_RTOL):
    a = _as_square(a)
    if not is_hermitian(a, rtol):
        raise NotHermitianError(
            f"matrix is not Hermitian (residual {hermiticity_residual(a):.3e})")
    return a


def kron(a, b):
    """Kronecker product of two 2x2 matrices, ``out[2i+k, 2j+l] = a[i,j] b[k,l]``."""
    a = _as_square(a)
    b = _as_square(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"kron expects 2x2 inputs, got {a.shape} and {b.shape}")
    out = np.empty((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = a[i, j] * b
    return out


def _jacobi(a, max_sweeps=50):
    """Cyclic complex Jacobi diagonalisation of a Hermitian matrix.

    Returns unsorted eigenvalues and the unitary whose columns are the
    eigenvectors.
    """
    a = 0.5 * (a + a.conj().T)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(np.triu(a, 1)) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                # rotate the complex phase away, then a real 2x2 Jacobi rotation
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
                c = np.cos(theta)
                s = np.sin(theta)
                g = np.eye(d, dtype=complex)
                g[p, p] = c
                g[q, q] = c
                g[p, q] = s * phase
                g[q, p] = -s * np.conj(phase)
                a = g.conj().T @ a @ g
                a[p, q] = a[q, p] = 0.0
                v = v @ g
    return np.real(np.diag(a)).copy(), v


def eig_hermitian(a):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Eigenvalues sorted in descending order; eigenvectors are the
        matching orthonormal columns.
    """
    a = check_hermitian(a)
    w, v = _jacobi(a)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def eigvalsh(a):
    return eig_hermitian(a)[0]


def singular_values(a):
    """Singular values from the eigenvalues of a^dagger a, descending."""
    a = _as_square(a)
    w = eigvalsh(a.conj().T @ a)
    return np.sqrt(np.clip(w, 0.0, None))


def trace_norm(a):
    return float(np.sum(singular_values(a)))


def min_eigenvalue(a):
    return float(eigvalsh(a)[-1])


# Batched kernels for the hot loops.  These go through LAPACK.

def eigvalsh_batch(a):
    return np.linalg.eigvalsh(a)


def min_eigenvalue_batch(a):
    return np.linalg.eigvalsh(a)[..., 0]


def trace_norm_batch(a):
    """Trace norm of each matrix in a stack, via eigenvalues of a^dagger a."""
    aha = a.conj().swapaxes(-1, -2) @ a
    w = np.linalg.eigvalsh(aha)
    return np.sum(np.sqrt(np.clip(w, 0.0, None)), axis=-1)


def hermitian_trace_norm_batch(a):
    return np.sum(np.abs(np.linalg.eigvalsh(a)), axis=-1)
