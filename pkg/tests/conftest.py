import math

import numpy as np


def quadratic_eigenvalues(a: np.ndarray) -> tuple[float, float]:
    """Roots of the characteristic polynomial of a 2x2 symmetric matrix,
    via the quadratic formula (independent of any iterative solver)."""
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = math.sqrt(tr * tr - 4.0 * det)
    return (tr + disc) / 2.0, (tr - disc) / 2.0


def align_sign(vec: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Flip vec so it points the same way as reference."""
    return vec if float(np.dot(vec, reference)) >= 0.0 else -vec


def s_formula(lam1: float) -> float:
    """Closed-form second coordinate of the top unit eigenvector for
    B = diag(lam1, 1), v = (1, 1):  e_1 = (1, s)/sqrt(1+s^2)."""
    s = math.sqrt(lam1) * (1.0 - 1.0 / lam1 - math.sqrt(1.0 - 1.0 / lam1 + 1.0 / lam1**2))
    return abs(s) / math.sqrt(1.0 + s * s)
