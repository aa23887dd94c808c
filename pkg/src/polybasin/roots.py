"""Fibers f^-1(w): closed-form binomial roots and batched Aberth-Ehrlich iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ValidationError
from .poly import Polynomial

EPS = np.finfo(float).eps
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    residual_max: float

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


def _nth_roots_array(w: np.ndarray, m: int) -> np.ndarray:
    """Shape (B,) -> (B, m): all m-th roots, principal branch first."""
    w = np.asarray(w, dtype=complex)
    mod = np.abs(w) ** (1.0 / m)
    phase = np.angle(w)
    ang = (phase[..., None] + 2 * np.pi * np.arange(m)) / m
    return mod[..., None] * np.exp(1j * ang)


def nth_roots(w: complex, m: int) -> RootSet:
    if m < 1:
        raise ValidationError("m must be >= 1")
    r = _nth_roots_array(np.array([w]), m)[0]
    return RootSet(r, float(np.max(np.abs(r**m - w))))


def _horner_rows(c: np.ndarray, z: np.ndarray):
    """Value, derivative and error-bound polynomial at z, coefficient rows c.

    c has shape (B, m+1) ascending; z has shape (B, k).
    """
    m = c.shape[1] - 1
    p = np.broadcast_to(c[:, m : m + 1], z.shape).astype(complex)
    dp = np.zeros_like(p)
    ac = np.abs(c)
    az = np.abs(z)
    eb = np.broadcast_to(ac[:, m : m + 1], z.shape).astype(float)
    for k in range(m - 1, -1, -1):
        dp = dp * z + p
        p = p * z + c[:, k : k + 1]
        eb = eb * az + ac[:, k : k + 1]
    return p, dp, eb


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    """Circle of radius 1 + max|c_k| (monic rows), golden-angle phase offset."""
    m = c.shape[1] - 1
    radius = 1.0 + np.max(np.abs(c[:, :m]), axis=1)
    k = np.arange(m)
    ang = (2 * np.pi * k + GOLDEN_ANGLE) / m
    # small radial jitter breaks any residual symmetry of the start
    rad = radius[:, None] * (1.0 + 0.01 * np.sin(k + 1.0))
    return rad * np.exp(1j * ang)


def solve_batch(coeffs, w, tol: float = 1e-11, max_iter: int = 200):
    """Simultaneous Aberth-Ehrlich iteration on many fibers at once.

    ``coeffs`` is (B, m+1) ascending (or (m+1,) broadcast to every row),
    ``w`` is (B,). Returns ``(roots (B, m), residual (B,), ok (B,))`` where
    ``ok`` marks rows meeting residual <= tol * max(1, |w|, |a_m| max|r|^m).
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim == 1:
        coeffs = np.broadcast_to(coeffs, (w.size, coeffs.size))
    B, m1 = coeffs.shape
    m = m1 - 1
    if m < 1:
        raise ValidationError("degree must be >= 1")
    shifted = coeffs.copy()
    shifted[:, 0] -= w
    lead = shifted[:, -1:]
    c = shifted / lead

    if m == 1:
        z = -c[:, :1]
    else:
        z = _initial_guesses(c)
        active = np.ones(z.shape, dtype=bool)
        eye = np.eye(m, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for _ in range(max_iter):
                p, dp, eb = _horner_rows(c, z)
                settled = (np.abs(p) <= 2 * m * EPS * eb) | (p == 0)
                diff = z[:, :, None] - z[:, None, :]
                inv = np.where(eye | (diff == 0), 0, 1.0 / diff)
                s = inv.sum(axis=2)
                ratio = p / dp
                corr = ratio / (1.0 - ratio * s)
                stuck = ~np.isfinite(corr)
                if stuck.any():
                    # dp == 0 at a non-root: nudge off the critical point
                    corr = np.where(stuck, -1e-3 * (1.0 + np.abs(z)) * np.exp(1j * GOLDEN_ANGLE), corr)
                upd = active & ~settled
                z = np.where(upd, z - corr, z)
                active = upd & (np.abs(corr) > 2 * EPS * np.abs(z))
                if not active.any():
                    break

    resid = np.max(np.abs(_eval_rows(coeffs, z) - w[:, None]), axis=1)
    rmax = np.max(np.abs(z), axis=1)
    with np.errstate(over="ignore"):
        scale = np.maximum.reduce([np.ones(B), np.abs(w), np.abs(coeffs[:, -1]) * rmax**m])
    ok = np.isfinite(resid) & (resid <= tol * scale)
    return z, resid, ok


def _eval_rows(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    m = coeffs.shape[1] - 1
    acc = np.broadcast_to(coeffs[:, m : m + 1], z.shape).astype(complex)
    for k in range(m - 1, -1, -1):
        acc = acc * z + coeffs[:, k : k + 1]
    return acc


def solve(f: Polynomial, w: complex, tol: float = 1e-11, max_iter: int = 200) -> RootSet:
    """All m roots of f(z) = w by simultaneous iteration; raises ConvergenceFailure."""
    z, resid, ok = solve_batch(f.array, np.array([w]), tol, max_iter)
    if not ok[0]:
        raise ConvergenceFailure(
            f"residual {resid[0]:.3e} above target after {max_iter} iterations",
            roots=z[0],
            residual=float(resid[0]),
        )
    return RootSet(z[0], float(resid[0]))


def binomial_fibers(f: Polynomial, w) -> np.ndarray:
    """Fibers of a_m z^m + a_0 over an array of targets, shape (B, m)."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    return _nth_roots_array((w - f.coeffs[0]) / f.leading, f.degree)


def fibers(f: Polynomial, w, tol: float = 1e-11, max_iter: int = 200):
    """Batched fiber computation with the binomial fast path.

    Returns ``(roots (B, m), ok (B,))``.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if f.is_binomial:
        return binomial_fibers(f, w), np.ones(w.size, dtype=bool)
    z, _, ok = solve_batch(f.array, w, tol, max_iter)
    return z, ok


def fiber(f: Polynomial, w: complex) -> RootSet:
    """Single fiber for any degree >= 1, dispatching like :func:`preimages`."""
    if f.is_binomial:
        r = binomial_fibers(f, w)[0]
        resid = float(np.max(np.abs(f.eval_array(r) - w)))
        return RootSet(r, resid)
    return solve(f, w)


def preimages(f: Polynomial, w: complex) -> RootSet:
    if f.degree < 2:
        raise ValidationError("preimages need degree >= 2")
    return fiber(f, w)
