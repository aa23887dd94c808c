"""Backward-orbit trees, the derivative series S_n, and preimage-sum diagnostics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .basin import Verdict, connectivity, escape_radius
from .bottcher import green
from .errors import (
    BracketFailure,
    BudgetExceeded,
    ConvergenceFailure,
    DegenerateDenominator,
    NotInBasin,
    ValidationError,
)
from .poly import Polynomial, derivative, require_monic
from .roots import fiber, fibers, preimages

NODE_BUDGET = 10**7
PARENT_BLOCK = 1 << 15


def base_point(f: Polynomial, r0: float = 0.5, tol: float = 1e-9) -> complex:
    """Point w0 > 0 on the real axis with G(w0) = log(1/r0), i.e. |F(w0)| = r0."""
    require_monic(f, "base_point")
    if not 0 < r0 < 1:
        raise ValidationError("r0 must lie in (0, 1)")
    if connectivity(f).verdict is Verdict.NOT_SIMPLY_CONNECTED:
        raise ValidationError("base_point needs a basin that is not disconnected")
    target = math.log(1.0 / r0)

    def G(x):
        try:
            return green(f, complex(x)).value
        except NotInBasin:
            return 0.0

    lo = escape_radius(f)
    if G(lo) > target:
        raise BracketFailure("Green value already above target at the escape radius")
    hi = max(2.0 * lo, 2.0 / r0)
    for _ in range(60):
        if G(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketFailure("could not bracket the target Green value")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if G(mid) < target:
            lo = mid
        else:
            hi = mid
    w0 = lo if abs(G(lo) - target) <= abs(G(hi) - target) else hi
    if abs(G(w0) - target) > tol:
        raise BracketFailure(f"bisection stalled at |G - target| = {abs(G(w0) - target):.2e}")
    return complex(w0)


@dataclass(frozen=True)
class OrbitNode:
    point: complex
    log_deriv: float


@dataclass(frozen=True)
class OrbitFrontier:
    """One level of the backward orbit tree of ``base_point``.

    Points and their log|(f^n)'| weights are kept as parallel arrays; nodes
    are ordered by parent index, then by root phase.
    """

    level: int
    points: np.ndarray = field(repr=False)
    log_deriv: np.ndarray = field(repr=False)
    base_point: complex
    skipped: int = 0

    @classmethod
    def root(cls, w0: complex) -> "OrbitFrontier":
        return cls(0, np.array([complex(w0)]), np.zeros(1), complex(w0), 0)

    @property
    def nodes(self) -> list[OrbitNode]:
        return [OrbitNode(complex(p), float(l)) for p, l in zip(self.points, self.log_deriv)]

    def __len__(self):
        return self.points.size


def expand(f: Polynomial, frontier: OrbitFrontier) -> OrbitFrontier:
    """Replace every node by its f-preimages, adding log|f'| at each child.

    Fibers whose root solve fails are dropped and counted in ``skipped``.
    """
    m = f.degree
    df = derivative(f)
    pts, lds = [], []
    skipped = frontier.skipped
    for s in range(0, frontier.points.size, PARENT_BLOCK):
        par = frontier.points[s : s + PARENT_BLOCK]
        par_ld = frontier.log_deriv[s : s + PARENT_BLOCK]
        roots, ok = fibers(f, par)
        skipped += int((~ok).sum())
        roots, par_ld = roots[ok], par_ld[ok]
        order = np.argsort(np.angle(roots), axis=1, kind="stable")
        roots = np.take_along_axis(roots, order, axis=1)
        with np.errstate(divide="ignore"):
            step = np.log(np.abs(df.eval_array(roots)))
        pts.append(roots.ravel())
        lds.append((par_ld[:, None] + step).ravel())
    points = np.concatenate(pts) if pts else np.empty(0, dtype=complex)
    log_deriv = np.concatenate(lds) if lds else np.empty(0)
    return OrbitFrontier(frontier.level + 1, points, log_deriv, frontier.base_point, skipped)


def logsumexp(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -math.inf
    top = float(np.max(x))
    if not math.isfinite(top):
        return top
    return top + math.log(float(np.sum(np.exp(x - top))))


def sharp_bound(m: int) -> float:
    """m^3 2^((m+1)/m): limiting ratio bound for simply connected z^m + a0."""
    return m**3 * 2.0 ** ((m + 1) / m)


@dataclass(frozen=True)
class SeriesReport:
    m: int
    w0: complex
    log_S: tuple  # natural log of S_1..S_N
    ratios: tuple  # S_{n+1}/S_n for n = 1..N-1
    partial_sums: tuple  # sum_{j<=n} m^(-4j) S_j for n = 1..N
    m4: float
    sharp_bound: float
    skipped: tuple = ()

    @property
    def S(self) -> tuple:
        out = []
        for ls in self.log_S:
            try:
                out.append(math.exp(ls))
            except OverflowError:
                out.append(math.inf)
        return tuple(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,S_n_log10,ratio,partial_sum,m4,sharp_bound\n")
        for i, ls in enumerate(self.log_S):
            ratio = repr(self.ratios[i]) if i < len(self.ratios) else ""
            buf.write(
                f"{i + 1},{ls / math.log(10)!r},{ratio},{self.partial_sums[i]!r},"
                f"{self.m4!r},{self.sharp_bound!r}\n"
            )
        return buf.getvalue()


def series(f: Polynomial, w0: complex, N: int, budget: int = NODE_BUDGET) -> SeriesReport:
    """Expand N levels from w0 and report S_n = sum_k |(f^n)'(w_{n,k})|^2."""
    m = f.degree
    if m < 2:
        raise ValidationError("series needs degree >= 2")
    if N < 1:
        raise ValidationError("N must be >= 1")
    if m**N > budget:
        raise BudgetExceeded(f"m^N = {m**N} nodes exceeds budget {budget}")
    frontier = OrbitFrontier.root(w0)
    log_S, skipped = [], []
    for _ in range(N):
        frontier = expand(f, frontier)
        log_S.append(logsumexp(2.0 * frontier.log_deriv))
        skipped.append(frontier.skipped)
    with np.errstate(over="ignore"):
        ratios = tuple(float(np.exp(log_S[i + 1] - log_S[i])) for i in range(N - 1))
    logm = math.log(m)
    acc = -math.inf
    partial = []
    for n, ls in enumerate(log_S, start=1):
        acc = float(np.logaddexp(acc, ls - 4 * n * logm))
        partial.append(math.exp(acc) if acc < 709 else math.inf)
    return SeriesReport(m, complex(w0), tuple(log_S), ratios, tuple(partial), float(m**4), sharp_bound(m), tuple(skipped))


def one_step_factor(f: Polynomial, w: complex) -> float:
    """Sum of |f'(u)|^2 over the fiber f(u) = w."""
    df = derivative(f)
    r = preimages(f, w).roots
    return float(np.sum(np.abs(df.eval_array(r)) ** 2))


def one_step_factor_closed_form(f: Polynomial, w: complex) -> float:
    """Binomial value m^3 |w - a0|^(2(m-1)/m), generalized to any leading coefficient."""
    if not f.is_binomial:
        raise ValidationError("closed form needs a binomial a_m z^m + a_0")
    m = f.degree
    am = abs(f.leading)
    return m**3 * am**2 * (abs(w - f.coeffs[0]) / am) ** (2 * (m - 1) / m)


def two_step_ratio(f: Polynomial, w: complex) -> float:
    """Second-level preimage sum of |f'(f(u))|^2 |f'(u)|^2 over the first-level sum of |f'|^2."""
    df = derivative(f)
    first = preimages(f, w).roots
    d1 = np.abs(df.eval_array(first)) ** 2
    den = float(np.sum(d1))
    if den <= 1e-30:
        raise DegenerateDenominator(f"first-level preimage sum {den:.3e} at w={w}")
    second, ok = fibers(f, first)
    if not ok.all():
        raise ConvergenceFailure("second-level fiber did not converge", roots=second)
    d2 = np.abs(df.eval_array(second)) ** 2
    return float(np.sum(d1[:, None] * d2)) / den


@dataclass(frozen=True)
class SupEstimate:
    """Sampled lower bound for a supremum over a polynomial family."""

    value: float
    evaluated: int
    skipped: int


def _unit_disk(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.sqrt(rng.random(size)) * np.exp(2j * np.pi * rng.random(size))


def perturbed(m: int, a0: complex, middle: np.ndarray) -> Polynomial:
    return Polynomial([a0, *middle, 1.0])


def u_delta_estimate(m: int, a: complex, w: complex, delta: float, samples: int, seed: int) -> SupEstimate:
    """Largest sampled |two_step_ratio(f, w) - two_step_ratio(z^m + a, w)|.

    Middle coefficients are delta * (1 - 1e-9) * xi with xi uniform in the
    unit disk and drawn from ``seed`` independently of delta, so families
    for different delta are nested rescalings of one another.
    """
    if m < 2:
        raise ValidationError("m must be >= 2")
    if abs(w - a) <= 1e-9:
        raise ValidationError("(w, a) lies on the diagonal w = a")
    if delta < 0 or samples < 1:
        raise ValidationError("need delta >= 0 and samples >= 1")
    g = perturbed(m, a, np.zeros(m - 1))
    ref = two_step_ratio(g, w)
    rng = np.random.default_rng(seed)
    xi = _unit_disk(rng, samples * (m - 1)).reshape(samples, m - 1)
    best, used, skipped = 0.0, 0, 0
    for row in xi:
        f = perturbed(m, a, delta * (1 - 1e-9) * row)
        try:
            val = abs(two_step_ratio(f, w) - ref)
        except (DegenerateDenominator, ConvergenceFailure):
            skipped += 1
            continue
        used += 1
        best = max(best, val)
    return SupEstimate(best, used, skipped)


def v_deviation(f: Polynomial, a: complex, eta: complex = 0j) -> float:
    """max over f(f(w)) = a + eta of ||f'(w)| - m |a|^((m-1)/m)|."""
    m = f.degree
    df = derivative(f)
    first = fiber(f, a + eta).roots
    second, ok = fibers(f, first)
    if not ok.all():
        raise ConvergenceFailure("second-level fiber did not converge", roots=second)
    target = m * abs(a) ** ((m - 1) / m)
    return float(np.max(np.abs(np.abs(df.eval_array(second)) - target)))


def v_estimate(m: int, a: complex, eps_prime: float, samples: int, seed: int) -> SupEstimate:
    """Sampled lower bound for v_eps'(a).

    Each sample draws middle coefficients and a target offset eta, both
    uniform in the disk of radius eps' (1 - 1e-9).
    """
    if m < 2:
        raise ValidationError("m must be >= 2")
    if eps_prime <= 0:
        raise ValidationError("eps_prime must be positive")
    if abs(a) > 2:
        raise ValidationError("|a| must be <= 2")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    rad = eps_prime * (1 - 1e-9)
    best, used, skipped = 0.0, 0, 0
    for _ in range(samples):
        middle = rad * _unit_disk(rng, m - 1)
        eta = complex(rad * _unit_disk(rng, 1)[0])
        try:
            val = v_deviation(perturbed(m, a, middle), a, eta)
        except ConvergenceFailure:
            skipped += 1
            continue
        used += 1
        best = max(best, val)
    return SupEstimate(best, used, skipped)
