"""Complex polynomials: evaluation, derivatives, iteration, normalization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotMonic, ValidationError

TINY = 1e-300
OVERFLOW = 1e150
CLUSTER_RADIUS = 1e-6


@dataclass(frozen=True)
class Polynomial:
    """f(z) = sum a_k z^k with ``coeffs[k] == a_k`` (ascending order).

    Degree 1 is admitted so that f' of a quadratic is still a Polynomial;
    the dynamical operations check ``degree >= 2`` themselves.
    """

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coeffs)
        if len(cs) < 2:
            raise ValidationError("polynomial needs degree >= 1")
        for c in cs:
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValidationError(f"non-finite coefficient {c!r}")
        if abs(cs[-1]) <= TINY:
            raise ValidationError("leading coefficient a_m must be nonzero")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def from_json(cls, text: str) -> "Polynomial":
        try:
            data = json.loads(text)
            pairs = data["coeffs"]
            cs = [complex(float(re), float(im)) for re, im in pairs]
        except (ValueError, KeyError, TypeError) as exc:
            raise ValidationError(f"bad polynomial JSON: {exc}") from exc
        return cls(cs)

    def to_json(self) -> str:
        return json.dumps({"coeffs": [[c.real, c.imag] for c in self.coeffs]})

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    @property
    def is_binomial(self) -> bool:
        return all(abs(c) < TINY for c in self.coeffs[1:-1])

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def __call__(self, z):
        return evaluate(self, z)

    def eval_array(self, z: np.ndarray) -> np.ndarray:
        """Horner evaluation over an array of points."""
        acc = np.full(np.shape(z), self.coeffs[-1], dtype=complex)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc

    def __str__(self):
        out = ""
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            if c.imag == 0:
                sign, mag = ("-" if c.real < 0 else "+"), f"{abs(c.real):g}"
            else:
                sign, mag = "+", f"({c.real:g}{c.imag:+g}j)"
            if k > 0 and mag == "1":
                mag = ""
            term = mag + ("" if k == 0 else "z" if k == 1 else f"z^{k}")
            out += (f" {sign} " if out else ("-" if sign == "-" else "")) + term
        return out or "0"


@dataclass(frozen=True)
class AffineMap:
    scale: complex
    offset: complex = 0j

    def __post_init__(self):
        if abs(self.scale) <= 0:
            raise ValidationError("affine scale must be nonzero")

    def __call__(self, z):
        return self.scale * z + self.offset

    def inverse(self, z):
        return (z - self.offset) / self.scale


@dataclass(frozen=True)
class IterateResult:
    value: complex
    deriv_log_abs: float
    deriv_arg_defined: bool
    escaped_at: int | None = None  # step at which |f^j(z)| > OVERFLOW

    def __iter__(self):
        return iter((self.value, self.deriv_log_abs, self.deriv_arg_defined))


def evaluate(f: Polynomial, z: complex) -> complex:
    acc = f.coeffs[-1]
    for c in reversed(f.coeffs[:-1]):
        acc = acc * z + c
    return acc


def derivative(f: Polynomial) -> Polynomial:
    if f.degree < 2:
        raise ValidationError("derivative of a linear map is constant, not a Polynomial")
    return Polynomial([k * f.coeffs[k] for k in range(1, f.degree + 1)])


def _log_abs(x: complex) -> float:
    a = abs(x)
    return math.log(a) if a > 0 else -math.inf


def iterate(f: Polynomial, z: complex, n: int) -> IterateResult:
    """Compute f^n(z) and log|(f^n)'(z)| by the chain rule.

    The log-derivative is accumulated term by term so deep iterates never
    overflow. An orbit that leaves |w| <= 1e150 stops early and reports the
    step in ``escaped_at``.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    df = derivative(f)
    z = complex(z)
    log_d = 0.0
    defined = True
    for j in range(n):
        d = evaluate(df, z)
        if abs(d) < TINY:
            defined = False
        log_d += _log_abs(d)
        z = evaluate(f, z)
        if abs(z) > OVERFLOW or not math.isfinite(abs(z)):
            return IterateResult(z, log_d, defined, escaped_at=j + 1)
    return IterateResult(z, log_d, defined)


def critical_points(f: Polynomial) -> list[complex]:
    """The m-1 roots of f' counted with multiplicity."""
    from .roots import fiber

    if f.degree < 2:
        raise ValidationError("critical points need degree >= 2")
    return list(fiber(derivative(f), 0j).roots)


def cluster_roots(roots: Sequence[complex], radius: float = CLUSTER_RADIUS):
    """Group roots lying within ``radius`` of a cluster seed.

    Returns ``[(center, multiplicity), ...]`` with centers as cluster means.
    """
    clusters: list[list[complex]] = []
    for r in roots:
        for cl in clusters:
            if abs(r - cl[0]) <= radius:
                cl.append(r)
                break
        else:
            clusters.append([r])
    return [(sum(cl) / len(cl), len(cl)) for cl in clusters]


def delta_condition(f: Polynomial, delta: float) -> bool:
    """True iff |a_k| < delta for 1 <= k <= m-1; a_0 is unconstrained."""
    if not f.is_monic:
        raise NotMonic("delta-condition is defined for monic polynomials")
    return all(abs(c) < delta for c in f.coeffs[1:-1])


def monic_normalize(f: Polynomial) -> tuple[Polynomial, AffineMap]:
    """Conjugate f by L(z) = a z with a^(m-1) = a_m, so g = L o f o L^-1 is monic.

    Basins correspond through the map: Omega(g) = L(Omega(f)).
    """
    m = f.degree
    if m < 2:
        raise ValidationError("monic_normalize needs degree >= 2")
    if f.is_monic:
        return f, AffineMap(1 + 0j)
    a = complex(np.power(complex(f.leading), 1.0 / (m - 1)))
    # g(z) = a f(z / a): coefficient k is a^(1-k) a_k
    cs = [a ** (1 - k) * c for k, c in enumerate(f.coeffs)]
    cs[-1] = 1 + 0j
    return Polynomial(cs), AffineMap(a)


def require_monic(f: Polynomial, what: str) -> None:
    if not f.is_monic:
        raise NotMonic(f"{what} requires a monic polynomial")
    if f.degree < 2:
        raise ValidationError(f"{what} requires degree >= 2")
