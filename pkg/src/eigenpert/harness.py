"""Instance generation, randomized bound certification, and the tightness scan.

Instances are generated from a SplitMix64 stream plus a Marsaglia polar
transform, so every vector is reproducible bit-exactly from (seed, recipe)
alone.  The per-vector stream is derived from (seed, d, m, vector index)
and deliberately *not* from lambda_1: a scan over the condition-number grid
reuses the same Gaussian realization at every grid point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from .rankone import rankone_full
from .symmat import (
    ConvergenceError,
    EigenDecomposition,
    PerturbationSet,
    Spectrum,
    build_perturbed,
    jacobi_eig,
)

_MASK64 = (1 << 64) - 1
# points below this condition number are excluded from slope fits: constant
# factors and the cap at 1 pollute the power law there
SLOPE_GATE_LAMBDA1 = 100.0
CROSSCHECK_RTOL = 1e-8

DEFAULT_DIMS = (2, 3, 5, 10, 20)
DEFAULT_MS = (0, 1, 2, 3, 5)
DEFAULT_LAMBDA1S = (1.0, 1e2, 1e4, 1e6, 1e8)
DEFAULT_N_SEEDS = 5


class OracleMismatchError(RuntimeError):
    """Jacobi and secular routes disagree beyond tolerance on the same input."""


class InsufficientDataError(ValueError):
    """Too few points survive the asymptotic gate for a slope fit."""


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class SplitMix64:
    """Tiny deterministic 64-bit PRNG (SplitMix64)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_raw(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        return _mix64(self._state)

    def next_unit(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_raw() >> 11) * 2.0**-53


def derive_seed(*parts: int) -> int:
    """Mix integer parts into one 64-bit stream seed."""
    acc = 0x9E3779B97F4A7C15
    for p in parts:
        acc = _mix64(acc ^ (int(p) & _MASK64))
    return acc


def gaussian_vector(d: int, seed: int) -> np.ndarray:
    """d standard Gaussians from the polar (Marsaglia) transform."""
    rng = SplitMix64(seed)
    out = np.empty(d)
    k = 0
    while k < d:
        u = 2.0 * rng.next_unit() - 1.0
        v = 2.0 * rng.next_unit() - 1.0
        s = u * u + v * v
        if s <= 0.0 or s >= 1.0:
            continue
        f = math.sqrt(-2.0 * math.log(s) / s)
        out[k] = u * f
        k += 1
        if k < d:
            out[k] = v * f
            k += 1
    return out


@dataclass(frozen=True)
class Instance:
    """A (spectrum, perturbations) pair with its reproduction recipe."""

    spectrum: Spectrum
    perts: PerturbationSet
    seed: int
    meta: str

    @property
    def d(self) -> int:
        return self.spectrum.d

    @property
    def m(self) -> int:
        return self.perts.m


def gen_instance(d: int, m: int, lambda1: float, seed: int) -> Instance:
    """Geometric spectrum between lambda_1 and 1, plus m seeded Gaussian vectors.

    lambda_j = lambda_1^((d-j)/(d-1)) for 1-based j, i.e. log-uniformly spaced
    with lambda_d = 1.  Vector streams do not depend on lambda_1.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2 (the ratio grid is undefined at d={d})")
    if lambda1 < 1.0:
        raise ValueError(f"lambda1 must be >= 1, got {lambda1}")
    expo = np.array([(d - 1 - j) / (d - 1) for j in range(d)])
    spectrum = Spectrum(lambda1**expo)
    vectors = tuple(gaussian_vector(d, derive_seed(seed, d, m, k)) for k in range(m))
    perts = PerturbationSet(vectors, dim=d)
    return Instance(
        spectrum=spectrum,
        perts=perts,
        seed=seed,
        meta=f"grid(d={d},m={m},lambda1={lambda1!r})",
    )


def gen_rankone_instance(seed: int) -> Instance:
    """Strict-spectrum rank-one instance for the secular/BNS stress suite.

    d in 2..10, condition number log-uniform in [10^0.5, 10^6], consecutive
    eigenvalue gaps bounded away from collision, and v entries in +-[1e-3, 2].
    """
    rng = SplitMix64(derive_seed(seed, 0xA5C3))
    d = 2 + int(rng.next_raw() % 9)
    log_l1 = 0.5 + 5.5 * rng.next_unit()
    gaps = np.array([0.1 + 0.9 * rng.next_unit() for _ in range(d - 1)])
    gaps *= log_l1 / float(gaps.sum())
    expo = np.concatenate([[0.0], np.cumsum(gaps)])[::-1]
    spectrum = Spectrum(10.0**expo)
    v = np.array(
        [
            (1.0 if rng.next_unit() < 0.5 else -1.0) * (1e-3 + (2.0 - 1e-3) * rng.next_unit())
            for _ in range(d)
        ]
    )
    return Instance(
        spectrum=spectrum,
        perts=PerturbationSet((v,), dim=d),
        seed=seed,
        meta=f"rank1-suite(seed={seed})",
    )


def certify(instance: Instance, bound_scale: float = 1.0) -> list:
    """Evaluate every applicable bound against the oracle decomposition.

    Builds the perturbed matrix, diagonalizes it with the Jacobi oracle
    (cross-checked against the secular route when m = 1), and returns one
    BoundReport per applicable inequality.  `bound_scale` multiplies every
    bound before comparison; values below 1 are used by the falsification
    self-test.
    """
    spec = instance.spectrum
    perts = instance.perts
    d = spec.d
    m = perts.m

    a = build_perturbed(spec, perts)
    try:
        eig = jacobi_eig(a)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"oracle did not converge on instance seed={instance.seed} "
            f"meta={instance.meta}: {exc}",
            residual=exc.residual,
        ) from exc
    nus = eig.values
    comp = np.abs(eig.basis)  # comp[j, i] = |[e_i]_j|
    params = bnd.BoundParams.from_perturbations(perts)

    if m == 1:
        _crosscheck_rankone(instance, eig)

    reports = []

    entries = []
    for i in range(d):
        lo, hi = bnd.eigenvalue_bound_rankm(spec, params, i)
        entries.append(bnd.lower_entry(i, None, float(nus[i]), lo * bound_scale))
        entries.append(bnd.upper_entry(i, None, float(nus[i]), hi * bound_scale))
    reports.append(bnd.make_report("eigenvalue-rankm", entries))

    if m == 1 and spec.is_strict and not np.any(perts.vectors[0] == 0.0):
        v = perts.vectors[0]
        entries = []
        notes = []
        for i in range(d):
            b6 = bnd.eigenvalue_bound_rank1(spec, v, i)
            entries.append(bnd.upper_entry(i, None, float(nus[i]), b6 * bound_scale))
            _, b5 = bnd.eigenvalue_bound_rankm(spec, params, i)
            if b6 < b5:
                notes.append(f"refinement wins at i={i}: {b6:.6g} < {b5:.6g}")
        reports.append(bnd.make_report("eigenvalue-rank1", entries, notes))

    cm = bnd.cm_constant(params)
    notes = ["C_m saturated: bound is vacuous (capped at 1)"] if math.isinf(cm) else ()
    entries = [
        bnd.upper_entry(
            i, j, float(comp[j, i]), bnd.eigvec_bound_rankm(spec, params, i, j) * bound_scale
        )
        for i in range(d)
        for j in range(d)
    ]
    reports.append(bnd.make_report("eigvec-rankm", entries, notes))

    if m == 1:
        entries = [
            bnd.upper_entry(
                i, j, float(comp[j, i]), bnd.eigvec_bound_rank1(spec, params, i, j) * bound_scale
            )
            for i in range(d)
            for j in range(d)
        ]
        reports.append(bnd.make_report("eigvec-rank1", entries))

        entries = []
        notes = []
        for i in range(d):
            for j in range(d):
                refined = bnd.eigvec_bound_rank1_refined(spec, params, i, j)
                coarse = bnd.eigvec_bound_rank1(spec, params, i, j)
                if refined > coarse:
                    notes.append(f"refined bound exceeds coarse at (i={i}, j={j})")
                entries.append(
                    bnd.upper_entry(i, j, float(comp[j, i]), refined * bound_scale)
                )
        reports.append(bnd.make_report("eigvec-rank1-refined", entries, notes))

    return reports


def _crosscheck_rankone(instance: Instance, oracle: EigenDecomposition) -> None:
    """Jacobi vs secular eigenvalues must agree to CROSSCHECK_RTOL."""
    sec = rankone_full(instance.spectrum, instance.perts.vectors[0])
    diff = np.abs(sec.values - oracle.values)
    tol = CROSSCHECK_RTOL * np.maximum(1.0, np.abs(oracle.values))
    if np.any(diff > tol):
        i = int(np.argmax(diff - tol))
        raise OracleMismatchError(
            f"secular and Jacobi eigenvalues disagree at index {i}: "
            f"{sec.values[i]!r} vs {oracle.values[i]!r} "
            f"(instance seed={instance.seed}, meta={instance.meta})"
        )


@dataclass(frozen=True)
class GridPoint:
    d: int
    m: int
    lambda1: float
    seed: int


def default_grid() -> list:
    """The certification grid: 5 dims x 5 ranks x 5 condition numbers x 5 seeds."""
    return [
        GridPoint(d, m, lam1, seed)
        for d in DEFAULT_DIMS
        for m in DEFAULT_MS
        for lam1 in DEFAULT_LAMBDA1S
        for seed in range(DEFAULT_N_SEEDS)
    ]


@dataclass(frozen=True)
class CertifySummary:
    n_instances: int
    n_reports: int
    failures: tuple  # (GridPoint, kind) pairs
    worst_slack: dict  # kind -> most negative slack seen

    @property
    def passed(self) -> bool:
        return not self.failures


def certify_grid(points, threads: int = 1, bound_scale: float = 1.0) -> CertifySummary:
    """Certify every grid point; results merge in grid order regardless of
    completion order, so output is deterministic for any thread count."""
    points = list(points)

    def run(pt: GridPoint):
        return certify(gen_instance(pt.d, pt.m, pt.lambda1, pt.seed), bound_scale)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_reports = list(pool.map(run, points))
    else:
        all_reports = [run(pt) for pt in points]

    failures = []
    worst: dict[str, float] = {}
    n_reports = 0
    for pt, reports in zip(points, all_reports):
        for rep in reports:
            n_reports += 1
            worst[rep.kind] = min(worst.get(rep.kind, math.inf), rep.worst_slack)
            if not rep.passed:
                failures.append((pt, rep.kind))
    return CertifySummary(
        n_instances=len(points),
        n_reports=n_reports,
        failures=tuple(failures),
        worst_slack=worst,
    )


@dataclass(frozen=True)
class ScanRecord:
    """One tightness-scan sample: |[e_1]_j| against its certified bounds.

    `j` is the 1-based coordinate label used by file formats and plots;
    `bound_rank1` is nan unless m = 1.
    """

    d: int
    m: int
    j: int
    lambda1: float
    ratio: float
    observed: float
    bound_rankm: float
    bound_rank1: float
    seed: int

    def __post_init__(self):
        limit = min(self.bound_rankm, self.bound_rank1) if math.isfinite(
            self.bound_rank1
        ) else self.bound_rankm
        if self.observed > limit + bnd.PASS_RTOL * max(1.0, limit):
            raise ValueError(
                f"scan record violates soundness: observed {self.observed!r} "
                f"exceeds bound {limit!r} (d={self.d}, m={self.m}, j={self.j}, "
                f"lambda1={self.lambda1!r}, seed={self.seed})"
            )


def scan(d: int, m: int, j: int, lambda1_grid, seed: int, threads: int = 1) -> list:
    """Sample |[e_1]_j| over a lambda_1 grid with a shared Gaussian realization.

    `j` is 1-based (2 <= j <= d).  The grid must be ascending with every
    value >= 1.  Records come back in grid order.
    """
    grid = [float(x) for x in lambda1_grid]
    if not grid:
        raise ValueError("lambda1 grid is empty")
    if any(x < 1.0 for x in grid):
        raise ValueError("lambda1 grid values must be >= 1")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda1 grid must be strictly ascending")
    if not 2 <= j <= d:
        raise ValueError(f"j must lie in 2..d={d}, got {j}")

    def run(lam1: float) -> ScanRecord:
        inst = gen_instance(d, m, lam1, seed)
        eig = jacobi_eig(build_perturbed(inst.spectrum, inst.perts))
        params = bnd.BoundParams.from_perturbations(inst.perts)
        observed = abs(float(eig.basis[j - 1, 0]))
        b10 = bnd.eigvec_bound_rankm(inst.spectrum, params, 0, j - 1)
        b8 = (
            bnd.eigvec_bound_rank1(inst.spectrum, params, 0, j - 1)
            if m == 1
            else math.nan
        )
        return ScanRecord(
            d=d,
            m=m,
            j=j,
            lambda1=lam1,
            ratio=lam1 / float(inst.spectrum.lambdas[j - 1]),
            observed=observed,
            bound_rankm=b10,
            bound_rank1=b8,
            seed=seed,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, grid))
    return [run(lam1) for lam1 in grid]


@dataclass(frozen=True)
class SlopeFit:
    """OLS fit of log10(observed) against log10(ratio) on the gated points."""

    slope: float
    intercept: float
    residual_rms: float
    count: int


def fit_slope(records, min_lambda1: float = SLOPE_GATE_LAMBDA1) -> SlopeFit:
    """Least-squares slope over records with lambda_1 >= `min_lambda1`.

    The gate keeps the fit in the asymptotic regime; it is applied to the
    condition number lambda_1 (equal to the pair ratio for the j = d
    protocol).  Requires at least 3 gated points with positive observed
    values.
    """
    gated = [r for r in records if r.lambda1 >= min_lambda1]
    if any(r.observed <= 0.0 for r in gated):
        raise ValueError(
            "observed values must be positive for a log-log fit "
            "(m = 0 scans are exactly zero and are not fittable)"
        )
    if len(gated) < 3:
        raise InsufficientDataError(
            f"slope fit needs >= 3 gated points, got {len(gated)}"
        )
    x = np.array([math.log10(r.ratio) for r in gated])
    y = np.array([math.log10(r.observed) for r in gated])
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return SlopeFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        count=len(gated),
    )
