"""Green's function, Boettcher-coordinate magnitudes and the Monte-Carlo |F'|^p integral.

Only |phi| and |phi'| are computed. Both come from real limits along the
forward orbit:

    G(z)          = lim m^-n log|f^n(z)|           (= log|phi(z)|)
    |phi'/phi|(z) = lim m^-n |(f^n)'(z)| / |f^n(z)|

and F = 1/phi gives |F'| = |phi'| / |phi|^2 = exp(-G) |phi'/phi|.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .basin import Verdict, connectivity, escape_radius
from .errors import IndexOutOfRange, NotInBasin, ValidationError
from .poly import Polynomial, derivative, require_monic

CHUNK = 1 << 16


@dataclass(frozen=True)
class GreenValue:
    value: float
    iterations_used: int
    error_bound: float


def _lower_mass(f: Polynomial) -> float:
    return float(sum(abs(c) for c in f.coeffs[:-1]))


def potential_batch(f: Polynomial, z, target_mag: float = 1e8, max_iter: int = 200):
    """Iterate every point until |f^n(z)| > target_mag.

    Returns ``(green, log_deriv_ratio, n, escaped)`` arrays; entries for points
    that never pass the threshold are nan with ``escaped`` False.
    """
    require_monic(f, "green")
    m = f.degree
    df = derivative(f)
    z = np.asarray(z, dtype=complex).ravel()
    green = np.full(z.size, np.nan)
    ratio = np.full(z.size, np.nan)
    steps = np.full(z.size, -1, dtype=np.int64)
    idx = np.arange(z.size)
    cur = z.copy()
    logd = np.zeros(z.size)
    logm = math.log(m)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for n in range(max_iter + 1):
            mag = np.abs(cur)
            out = mag > target_mag
            if out.any():
                lm = np.log(mag[out])
                sel = idx[out]
                green[sel] = lm * math.exp(-n * logm)
                ratio[sel] = np.exp(logd[out] - lm - n * logm)
                steps[sel] = n
                keep = ~out
                idx, cur, logd = idx[keep], cur[keep], logd[keep]
            if n == max_iter or idx.size == 0:
                break
            logd = logd + np.log(np.abs(df.eval_array(cur)))
            cur = f.eval_array(cur)
    return green, ratio, steps, steps >= 0


def green(f: Polynomial, z: complex, target_mag: float = 1e8, max_iter: int = 200) -> GreenValue:
    g, _, n, ok = potential_batch(f, [z], target_mag, max_iter)
    if not ok[0]:
        raise NotInBasin(f"|f^n(z)| stayed below {target_mag:g} for {max_iter} steps at z={z}")
    nn = int(n[0])
    err = 2.0 * _lower_mass(f) / target_mag * f.degree ** (-nn)
    return GreenValue(float(g[0]), nn, err)


def log_phi_deriv_ratio(f: Polynomial, z: complex, target_mag: float = 1e8, max_iter: int = 200) -> float:
    """|phi'(z)| / |phi(z)|, evaluated at the same stopping step as :func:`green`."""
    _, r, _, ok = potential_batch(f, [z], target_mag, max_iter)
    if not ok[0]:
        raise NotInBasin(f"z={z} not shown to escape within {max_iter} steps")
    return float(r[0])


def F_derivative_abs(f: Polynomial, z: complex, target_mag: float = 1e8, max_iter: int = 200) -> float:
    g, r, _, ok = potential_batch(f, [z], target_mag, max_iter)
    if not ok[0]:
        raise NotInBasin(f"z={z} not shown to escape within {max_iter} steps")
    return float(math.exp(-g[0]) * r[0])


def F_derivative_abs_batch(f: Polynomial, z, target_mag: float = 1e8, max_iter: int = 200):
    """|F'| on an array; 0 where the point was not shown to escape."""
    g, r, _, ok = potential_batch(f, z, target_mag, max_iter)
    out = np.zeros(g.shape)
    out[ok] = np.exp(-g[ok]) * r[ok]
    return out, ok


@dataclass(frozen=True)
class BrennanEstimate:
    p: float
    annulus_part: float
    tail_part: float
    total: float
    std_error: float
    samples_in: int
    samples_total: int
    R_big: float
    seed: int
    mc_std_error: float = 0.0
    tail_uncertainty: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.p,
                "total": self.total,
                "annulus": self.annulus_part,
                "tail": self.tail_part,
                "std_error": self.std_error,
                "samples": self.samples_total,
                "samples_in": self.samples_in,
                "R_big": self.R_big,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    def as_dict(self):
        return asdict(self)


def _disk_chunk(seed: int, j: int, count: int, radius: float) -> np.ndarray:
    """``count`` uniform points of |z| <= radius for chunk ``j``.

    Each chunk owns a Philox key derived from (seed, j), so chunk contents do
    not depend on the order in which chunks are produced.
    """
    rng = np.random.Generator(np.random.Philox(key=(int(j) << 64) | int(seed)))
    pts = np.empty(0, dtype=complex)
    while pts.size < count:
        xy = rng.uniform(-radius, radius, size=(2, 2 * count))
        cand = xy[0] + 1j * xy[1]
        pts = np.concatenate([pts, cand[np.abs(cand) <= radius]])
    return pts[:count]


def tail_integral(p: float, R_big: float) -> float:
    """Closed form of the integral of |z|^(-2p) over |z| > R_big."""
    return math.pi * R_big ** (2 - 2 * p) / (p - 1)


def brennan_integral(
    f: Polynomial,
    p: float,
    samples: int,
    R_big: float,
    seed: int,
    max_iter: int = 500,
    target_mag: float = 1e8,
) -> BrennanEstimate:
    """Monte-Carlo estimate of the integral of |F'|^p over Omega(f).

    The disk |z| <= R_big is sampled uniformly (rejection from the bounding
    square); points that never pass ``target_mag`` count as complement
    points. Beyond R_big the leading-order tail |z|^(-2p) is integrated in
    closed form. Its relative correction bound eps = 4 sum_{k<m}|a_k| / R_big
    enters ``std_error`` (in quadrature with the sampling error) as the gap
    between the leading-order tail and the tail of (|z|^2 (1 + eps))^(-p).
    """
    require_monic(f, "brennan_integral")
    if not 2 <= p <= 4:
        raise ValidationError("p must lie in [2, 4]")
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must fit in 64 bits")
    rho = escape_radius(f)
    if R_big < 2 * rho:
        raise ValidationError(f"R_big must be >= 2 * escape radius = {2 * rho:.6g}")
    if connectivity(f).verdict is Verdict.NOT_SIMPLY_CONNECTED:
        raise ValidationError("basin is not simply connected")

    vals = np.empty(samples)
    n_in = 0
    for j, start in enumerate(range(0, samples, CHUNK)):
        cnt = min(CHUNK, samples - start)
        z = _disk_chunk(seed, j, cnt, R_big)
        fd, ok = F_derivative_abs_batch(f, z, target_mag, max_iter)
        vals[start : start + cnt] = fd**p
        n_in += int(ok.sum())

    area = math.pi * R_big**2
    annulus = area * float(np.mean(vals))
    mc_se = area * float(np.std(vals, ddof=1)) / math.sqrt(samples)
    tail = tail_integral(p, R_big)
    eps_R = 4.0 * _lower_mass(f) / R_big
    tail_unc = tail * (1.0 - (1.0 + eps_R) ** (-p))
    return BrennanEstimate(
        p=float(p),
        annulus_part=annulus,
        tail_part=tail,
        total=annulus + tail,
        std_error=math.hypot(mc_se, tail_unc),
        samples_in=n_in,
        samples_total=samples,
        R_big=float(R_big),
        seed=int(seed),
        mc_std_error=mc_se,
        tail_uncertainty=tail_unc,
    )


@dataclass(frozen=True)
class DiskPartition:
    """Fundamental domains of z -> z^m on the unit disk, anchored at r0 e^(i theta0)."""

    m: int
    r0: float
    theta0: float = 0.0

    def __post_init__(self):
        if not 0 < self.r0 < 1:
            raise ValidationError("r0 must lie in (0, 1)")
        if self.m < 2:
            raise ValidationError("m must be >= 2")


def partition_point(part: DiskPartition, n: int, k: int):
    """Return ``(z_nk, (r_lo, r_hi), (theta_lo, theta_hi))`` for the cell P_{n,k}."""
    size = part.m**n
    if n < 0 or not 0 <= k < size:
        raise IndexOutOfRange(f"need 0 <= k < m^n = {size}, got k={k}")
    r_lo = part.r0 ** (1.0 / size)
    r_hi = part.r0 ** (1.0 / (size * part.m))
    z = r_lo * complex(math.cos((part.theta0 + 2 * math.pi * k) / size), math.sin((part.theta0 + 2 * math.pi * k) / size))
    return z, (r_lo, r_hi), (2 * math.pi * k / size, 2 * math.pi * (k + 1) / size)


def koebe_bounds(r: float):
    """Distortion envelopes at |z| = r for normalized univalent maps of the disk.

    Returns three ``(lower, upper)`` pairs bounding |h(z)|, |z h'(z)/h(z)| and
    |h'(z)| respectively.
    """
    if not 0 <= r < 1:
        raise ValidationError("r must lie in [0, 1)")
    return (
        (r / (1 + r) ** 2, r / (1 - r) ** 2),
        ((1 - r) / (1 + r), (1 + r) / (1 - r)),
        ((1 - r) / (1 + r) ** 3, (1 + r) / (1 - r) ** 3),
    )
