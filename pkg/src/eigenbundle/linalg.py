"""Cyclic Jacobi eigensolver for small dense symmetric matrices."""

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch

OFF_TOL = 1e-12
MAX_SWEEPS = 100


def off_norm(a: np.ndarray) -> float:
    """Frobenius norm of the off-diagonal part."""
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(matrix, tol: float = OFF_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigen-decompose a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs in row order, annihilating ``a[p, q]`` with a
    plane rotation, until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)``.

    Returns:
        (w, v): eigenvalues in ascending order and the matching orthonormal
        eigenvectors as columns of ``v``.

    Raises:
        ConvergenceFailure: if ``max_sweeps`` sweeps do not reach ``tol``.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    while off_norm(a) >= threshold:
        if sweeps == max_sweeps:
            raise ConvergenceFailure(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off_norm(a):.3e} >= {threshold:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c

                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
