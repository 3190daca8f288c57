"""Certified eigenvalue/eigenvector bounds for low-rank perturbations.

Every function here is evaluated from the *unperturbed* spectrum and the
perturbation directions alone -- never from the perturbed matrix -- so the
harness can compare predictions against oracle truth.

Indices are 0-based throughout the library; the CLI translates to the
1-based convention used in file formats and printed tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .symmat import PerturbationSet, Spectrum

# A report entry passes when slack >= -PASS_RTOL * max(1, bound).
PASS_RTOL = 1e-9
# C_m recursion saturates to +inf past this magnitude (bound is vacuous there).
CM_SATURATION = 1e300


class JIndexError(ValueError):
    """Rank-one eigenvalue refinement is not applicable; use the rank-m bound."""


def alpha(a: float, b: float) -> float:
    """sqrt(min(a, b) / max(a, b)) for positive a, b; symmetric, in (0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"alpha requires positive arguments, got ({a}, {b})")
    return math.sqrt(min(a, b) / max(a, b))


@dataclass(frozen=True)
class BoundParams:
    """Dimension, number of rank-one terms, and the two infinity-norm constants.

    `v_bound` is floored at 1/sqrt(d) (used by the eigenvector bounds);
    `v_inf` is the raw max infinity norm (used by the rank-m eigenvalue
    interval, which is stated without the floor).
    """

    d: int
    m: int
    v_bound: float
    v_inf: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        floor = 1.0 / math.sqrt(self.d)
        if self.v_bound < floor * (1.0 - 1e-12):
            raise ValueError(
                f"v_bound {self.v_bound} is below the 1/sqrt(d) floor {floor}"
            )
        if self.v_inf < 0.0:
            raise ValueError("v_inf must be non-negative")

    @classmethod
    def from_perturbations(cls, perts: PerturbationSet) -> "BoundParams":
        return cls(d=perts.dim, m=perts.m, v_bound=perts.v_bound, v_inf=perts.v_inf)


def eigenvalue_bound_rankm(spec: Spectrum, p: BoundParams, i: int) -> tuple[float, float]:
    """Interval [lambda_i, lambda_i (1 + m d v_inf^2)] certain to contain nu_i."""
    lam = float(spec.lambdas[i])
    return lam, lam * (1.0 + p.m * p.d * p.v_inf**2)


def j_index(spec: Spectrum, v, i: int) -> int:
    """The coordinate the rank-one eigenvalue refinement pivots on.

    Smallest j in {i..d-1} maximizing |v_j| subject to
        lambda_j >= lambda_i (1 - sqrt(lambda_j/lambda_i) (d-i) vinf |v_j|)
    (0-based i, so d-i counts the trailing coordinates including i).
    The feasible set always contains j = i.
    """
    lam = spec.lambdas
    d = spec.d
    v = np.asarray(v, dtype=float)
    if not 0 <= i < d:
        raise IndexError(f"index {i} out of range for d={d}")
    if not spec.is_strict:
        raise JIndexError(
            "spectrum has repeated eigenvalues; use the rank-m eigenvalue bound"
        )
    if np.any(v == 0.0):
        raise JIndexError(
            "perturbation vector has zero entries; use the rank-m eigenvalue bound"
        )
    vinf = float(np.max(np.abs(v)))
    tail = d - i
    best = -1
    best_mag = -1.0
    for j in range(i, d):
        mag = abs(float(v[j]))
        threshold = lam[i] * (1.0 - math.sqrt(lam[j] / lam[i]) * tail * vinf * mag)
        if lam[j] >= threshold and mag > best_mag:
            best, best_mag = j, mag
    if best < 0:  # cannot happen: j = i is always feasible
        raise JIndexError(f"empty feasible set at i={i}")
    return best


def eigenvalue_bound_rank1(spec: Spectrum, v, i: int) -> float:
    """lambda_i (1 + (d-i) vinf |v_{j_i}|): the refined upper bound for m = 1.

    Never looser than the rank-m interval at m = 1; strictly tighter whenever
    |v_{j_i}| < d vinf / (d - i).
    """
    v = np.asarray(v, dtype=float)
    ji = j_index(spec, v, i)
    vinf = float(np.max(np.abs(v)))
    tail = spec.d - i
    return float(spec.lambdas[i]) * (1.0 + tail * vinf * abs(float(v[ji])))


def psi(rho: float, w: float) -> float:
    """max(2 (1-rho)^{-1/2}, 2 w / rho) on rho in (0, 1)."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if w <= 0.0:
        raise ValueError(f"w must be positive, got {w}")
    return max(2.0 / math.sqrt(1.0 - rho), 2.0 * w / rho)


class PsiInfimum(NamedTuple):
    value: float
    rho: float


def psi_inf(w: float) -> PsiInfimum:
    """Exact infimum of psi(., w) over (0, 1).

    The decreasing branch 2w/rho meets the increasing branch
    2(1-rho)^{-1/2} at rho* = 2w / (w + sqrt(w^2 + 4)), where both equal
    w + sqrt(w^2 + 4).
    """
    if w <= 0.0:
        raise ValueError(f"w must be positive, got {w}")
    root = math.sqrt(w * w + 4.0)
    return PsiInfimum(value=w + root, rho=2.0 * w / (w + root))


def eigvec_bound_rank1(spec: Spectrum, p: BoundParams, i: int, j: int) -> float:
    """min(1, 5 d^2 V^4 alpha(lambda_i, lambda_j)): the m = 1 coordinate bound."""
    v4 = p.v_bound**4
    return min(
        1.0,
        5.0 * p.d**2 * v4 * alpha(float(spec.lambdas[i]), float(spec.lambdas[j])),
    )


def eigvec_bound_rank1_refined(spec: Spectrum, p: BoundParams, i: int, j: int) -> float:
    """Sharper m = 1 coordinate bound, applicable when the eigenvalue ratio
    exceeds 1 + d V^2; returns the trivial bound 1 otherwise.

    Also capped at 1: a unit-vector coordinate never exceeds 1, and the raw
    expression blows up towards the applicability boundary.
    """
    lami = float(spec.lambdas[i])
    lamj = float(spec.lambdas[j])
    mx, mn = max(lami, lamj), min(lami, lamj)
    v2 = p.v_bound**2
    if mx <= (1.0 + p.d * v2) * mn:
        return 1.0
    r = mn / mx
    w = (p.d - i) * v2
    value = w * psi_inf(w).value / (1.0 - (1.0 + w) * r) * math.sqrt(r)
    return min(1.0, value)


def cm_constant(p: BoundParams) -> float:
    """The rank-m eigenvector constant: C_0 = 1,
    C_{m+1} = 5 d^7 V^4 C_m^5 sqrt(1 + d m V^2).

    Grows doubly exponentially in m; saturates to +inf past 1e300 rather
    than wrapping, which makes the resulting bound explicitly vacuous.
    """
    d = float(p.d)
    v4 = p.v_bound**4
    v2 = p.v_bound**2
    c = 1.0
    for k in range(p.m):
        c5 = c * c * c * c * c
        nxt = 5.0 * d**7 * v4 * c5 * math.sqrt(1.0 + d * k * v2)
        if not math.isfinite(nxt) or nxt > CM_SATURATION:
            return math.inf
        c = nxt
    return c


def eigvec_bound_rankm(spec: Spectrum, p: BoundParams, i: int, j: int) -> float:
    """min(1, C_m alpha(lambda_i, lambda_j)): coordinate bound for any m >= 0."""
    c = cm_constant(p)
    a = alpha(float(spec.lambdas[i]), float(spec.lambdas[j]))
    if math.isinf(c):
        return 1.0
    return min(1.0, c * a)


@dataclass(frozen=True, slots=True)
class BoundEntry:
    """One observed-vs-certified comparison.

    `side` is "upper" when the bound must dominate the observation and
    "lower" when the observation must dominate the bound; slack is
    non-negative in the sound direction either way.
    """

    i: int
    j: int | None
    observed: float
    bound: float
    slack: float
    side: str = "upper"


REPORT_KINDS = (
    "eigenvalue-rank1",
    "eigenvalue-rankm",
    "eigvec-rank1",
    "eigvec-rank1-refined",
    "eigvec-rankm",
)


@dataclass(frozen=True)
class BoundReport:
    """All entries for one inequality kind on one instance."""

    kind: str
    entries: tuple
    passed: bool
    notes: tuple = ()

    @property
    def worst_slack(self) -> float:
        if not self.entries:
            return math.inf
        return min(e.slack for e in self.entries)

    @property
    def n_entries(self) -> int:
        return len(self.entries)


def make_report(kind: str, entries, notes=()) -> BoundReport:
    if kind not in REPORT_KINDS:
        raise ValueError(f"unknown report kind {kind!r}")
    entries = tuple(entries)
    passed = all(e.slack >= -PASS_RTOL * max(1.0, e.bound) for e in entries)
    return BoundReport(kind=kind, entries=entries, passed=passed, notes=tuple(notes))


def upper_entry(i: int, j: int | None, observed: float, bound: float) -> BoundEntry:
    return BoundEntry(i=i, j=j, observed=observed, bound=bound, slack=bound - observed)


def lower_entry(i: int, j: int | None, observed: float, bound: float) -> BoundEntry:
    return BoundEntry(
        i=i, j=j, observed=observed, bound=bound, slack=observed - bound, side="lower"
    )
