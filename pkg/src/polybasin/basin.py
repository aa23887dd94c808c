"""Escape-time membership in the basin at infinity and its coarse geometry."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .poly import Polynomial, critical_points, evaluate, monic_normalize, require_monic

RADIUS_MARGIN = 1e-6


def _bisect_increasing(h, lo: float, hi: float, rel: float = 4e-16) -> float:
    # assumes h(lo) <= 0 <= h(hi); returns the upper end of the final bracket
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rel * hi:
            break
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def escape_radius(f: Polynomial) -> float:
    """Radius beyond which |f(z)| >= |z| + h(|z|) > |z|.

    h(t) = t^m - sum_{k<m} |a_k| t^k - t has exactly one positive root (one
    sign change); it lies in [1, 1 + sum|a_k|]. The returned radius is that
    root plus a 1e-6 margin.
    """
    require_monic(f, "escape_radius")
    m = f.degree
    mags = [abs(c) for c in f.coeffs[:-1]]
    total = sum(mags)

    def h(t):
        return t**m - sum(a * t**k for k, a in enumerate(mags)) - t

    root = _bisect_increasing(h, 1.0, 1.0 + total) if total > 0 else 1.0
    return max(root, 1.0) + RADIUS_MARGIN


def basin_radius(f: Polynomial) -> float:
    """Escape radius for any leading coefficient, via the monic conjugate."""
    g, L = monic_normalize(f)
    return escape_radius(g) / abs(L.scale)


def alpha(a: float, m: int) -> float:
    """Root of t^m - t - a on [1, inf): bisection, then a Newton polish."""
    if a < 0:
        raise ValidationError("alpha needs a >= 0")
    if m < 2:
        raise ValidationError("alpha needs m >= 2")
    if a == 0:
        return 1.0

    def h(t):
        return t**m - t - a

    t = _bisect_increasing(h, 1.0, 1.0 + a, rel=1e-13)
    for _ in range(4):
        d = m * t ** (m - 1) - 1
        step = h(t) / d
        if not math.isfinite(step):
            break
        t -= step
        if abs(step) <= 1e-16 * t:
            break
    return t


@dataclass(frozen=True)
class EscapeResult:
    escaped: bool
    steps: int
    final_magnitude: float


def escapes(f: Polynomial, z: complex, max_iter: int, radius: float) -> EscapeResult:
    z = complex(z)
    for n in range(max_iter + 1):
        mag = abs(z)
        if mag > radius:
            return EscapeResult(True, n, mag)
        if n == max_iter:
            break
        z = evaluate(f, z)
    return EscapeResult(False, max_iter, abs(z))


def escape_steps(f: Polynomial, z: np.ndarray, max_iter: int, radius: float) -> np.ndarray:
    """Vectorized escape counts; -1 where the orbit stayed within ``radius``."""
    z = np.array(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    steps = np.full(z.size, -1, dtype=np.int64)
    idx = np.arange(z.size)
    cur = z.copy()
    for n in range(max_iter + 1):
        out = np.abs(cur) > radius
        if out.any():
            steps[idx[out]] = n
            keep = ~out
            idx, cur = idx[keep], cur[keep]
        if n == max_iter or idx.size == 0:
            break
        cur = f.eval_array(cur)
    return steps.reshape(shape)


class Verdict(str, enum.Enum):
    SIMPLY_CONNECTED = "SimplyConnected"
    NOT_SIMPLY_CONNECTED = "NotSimplyConnected"
    UNDETERMINED = "Undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConnectivityVerdict:
    verdict: Verdict
    evidence: tuple
    critical_points: tuple = ()
    max_iter: int = 0


def connectivity(f: Polynomial, max_iter: int = 1000) -> ConnectivityVerdict:
    """Classify Omega(f) by the fate of the finite critical orbits.

    No critical point escapes: simply connected. All escape: not simply
    connected. Mixed behaviour is not covered by either criterion and is
    reported as undetermined. Non-monic input is conjugated to monic form
    first; the evidence then refers to the conjugate's critical points.
    """
    if f.degree < 2:
        raise ValidationError("connectivity needs degree >= 2")
    g, _ = monic_normalize(f)
    radius = escape_radius(g)
    crit = critical_points(g)
    evidence = tuple(escapes(g, c, max_iter, radius) for c in crit)
    n_esc = sum(e.escaped for e in evidence)
    if n_esc == 0:
        v = Verdict.SIMPLY_CONNECTED
    elif n_esc == len(evidence):
        v = Verdict.NOT_SIMPLY_CONNECTED
    else:
        v = Verdict.UNDETERMINED
    return ConnectivityVerdict(v, evidence, tuple(crit), max_iter)


def complement_radius_estimate(f: Polynomial, grid_resolution: int, max_iter: int) -> float:
    """Lower bound for b(f) = sup{|z| : z not in Omega(f)} from a square grid.

    Grid covers [-rho, rho]^2 with rho the escape radius; returns 0.0 when no
    grid point stays bounded.
    """
    if grid_resolution < 16:
        raise ValidationError("grid_resolution must be >= 16")
    rho = basin_radius(f)
    xs = np.linspace(-rho, rho, grid_resolution)
    z = xs[None, :] + 1j * xs[:, None]
    steps = escape_steps(f, z, max_iter, rho)
    bounded = steps < 0
    if not bounded.any():
        return 0.0
    return float(np.abs(z[bounded]).max())


@dataclass(frozen=True)
class EscapeGrid:
    center: complex
    width: float
    height: float
    nx: int
    ny: int
    cells: np.ndarray = field(repr=False)  # (ny, nx), row 0 at the top

    def pixel_points(self) -> np.ndarray:
        return pixel_points(self.center, self.width, self.height, self.nx, self.ny)

    def to_pgm(self) -> bytes:
        """Binary 16-bit PGM (P5, big-endian); non-escaping cells map to 0."""
        vals = np.clip(self.cells, 0, 65535).astype(">u2")
        header = f"P5\n{self.nx} {self.ny}\n65535\n".encode("ascii")
        return header + vals.tobytes()

    def to_csv(self) -> str:
        pts = self.pixel_points()
        buf = io.StringIO()
        buf.write("x,y,steps\n")
        for j in range(self.ny):
            for i in range(self.nx):
                z = pts[j, i]
                buf.write(f"{z.real!r},{z.imag!r},{int(self.cells[j, i])}\n")
        return buf.getvalue()


def pixel_points(center: complex, width: float, height: float, nx: int, ny: int) -> np.ndarray:
    xs = center.real - width / 2 + (np.arange(nx) + 0.5) * width / nx
    ys = center.imag + height / 2 - (np.arange(ny) + 0.5) * height / ny
    return xs[None, :] + 1j * ys[:, None]


def rasterize(f: Polynomial, viewport, resolution, max_iter: int) -> EscapeGrid:
    """Escape counts per pixel centre; ``viewport = (center, width, height)``."""
    center, width, height = viewport
    nx, ny = resolution
    if width <= 0 or height <= 0 or nx < 1 or ny < 1 or max_iter < 0:
        raise ValidationError("viewport and resolution must be positive")
    center = complex(center)
    pts = pixel_points(center, width, height, nx, ny)
    cells = escape_steps(f, pts, max_iter, basin_radius(f))
    return EscapeGrid(center, float(width), float(height), int(nx), int(ny), cells)
