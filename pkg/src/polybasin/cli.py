"""Command-line front end.

    polybasin <command> --poly f.json [options]

Exit status: 0 on success, 1 on invalid input, 2 on computational failure.
Output files are written only after the computation succeeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from . import basin, bottcher, orbit
from .errors import PolybasinError, ValidationError
from .poly import Polynomial, critical_points, delta_condition, monic_normalize

COMMANDS = ("render", "connectivity", "series", "brennan", "perturb", "partition", "info")

DEFAULTS = {
    "n": 10,
    "p": 2.0,
    "samples": 100_000,
    "seed": 0,
    "r0": 0.5,
    "theta0": 0.0,
    "delta": None,
    "eps_prime": None,
    "rbig": None,  # 2 * escape radius, at least 8
    "res": 512,
    "max_iter": None,  # per command: render 200, connectivity 1000, brennan 500
    "w": None,
    "center": "0,0",
    "width": None,  # 2.2 * escape radius
}


def _complex(text: str) -> complex:
    text = text.strip()
    try:
        if "," in text:
            re, im = text.split(",")
            return complex(float(re), float(im))
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polybasin", description="Basins of attraction at infinity of polynomials.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--poly", help='JSON file {"coeffs": [[re, im], ...]}, ascending degree')
    ap.add_argument("--out", help="output file (CSV, JSON or PGM by command)")
    ap.add_argument("--n", type=int, default=DEFAULTS["n"], help="series depth / partition level")
    ap.add_argument("--p", type=float, default=DEFAULTS["p"], help="Brennan exponent in [2, 4]")
    ap.add_argument("--samples", type=int, default=DEFAULTS["samples"])
    ap.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    ap.add_argument("--r0", type=float, default=DEFAULTS["r0"])
    ap.add_argument("--theta0", type=float, default=DEFAULTS["theta0"])
    ap.add_argument("--delta", type=float, default=DEFAULTS["delta"])
    ap.add_argument("--eps-prime", dest="eps_prime", type=float, default=DEFAULTS["eps_prime"])
    ap.add_argument("--rbig", type=float, default=DEFAULTS["rbig"])
    ap.add_argument("--res", type=int, default=DEFAULTS["res"])
    ap.add_argument("--max-iter", dest="max_iter", type=int, default=DEFAULTS["max_iter"])
    ap.add_argument("--w", type=_complex, default=DEFAULTS["w"], help="target point for perturb, e.g. 1.5,0")
    ap.add_argument("--center", type=_complex, default=_complex(DEFAULTS["center"]))
    ap.add_argument("--width", type=float, default=DEFAULTS["width"])
    return ap


def _write_atomic(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".polybasin-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_poly(path: str | None) -> Polynomial:
    if not path:
        raise ValidationError("--poly is required")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    f = Polynomial.from_json(text)
    if f.degree < 2:
        raise ValidationError("polynomial degree must be >= 2")
    return f


def _fmt(z: complex) -> str:
    return f"{z.real:.12g}{z.imag:+.12g}i"


def run(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    f = _load_poly(args.poly)
    g, _ = monic_normalize(f)
    cmd = args.command
    payload: bytes | None = None

    if cmd == "info":
        print(f"degree: {f.degree}", file=out)
        print(f"monic: {f.is_monic}", file=out)
        print(f"escape_radius: {basin.basin_radius(f):.12g}", file=out)
        print("critical_points: " + " ".join(_fmt(c) for c in critical_points(f)), file=out)
        if args.delta is not None:
            print(f"delta_condition({args.delta:g}): {delta_condition(g, args.delta)}", file=out)
        print("defaults: " + json.dumps(DEFAULTS, sort_keys=True), file=out)
        return 0

    if cmd == "connectivity":
        v = basin.connectivity(f, args.max_iter or 1000)
        print(v.verdict.value, file=out)
        if args.out:
            rows = [
                {"critical_point": [c.real, c.imag], "escaped": e.escaped, "steps": e.steps, "final_magnitude": e.final_magnitude}
                for c, e in zip(v.critical_points, v.evidence)
            ]
            payload = json.dumps({"verdict": v.verdict.value, "max_iter": v.max_iter, "evidence": rows}, sort_keys=True).encode()

    elif cmd == "render":
        width = args.width or 2.2 * basin.basin_radius(f)
        grid = basin.rasterize(f, (args.center, width, width), (args.res, args.res), args.max_iter or 200)
        if args.out and args.out.lower().endswith(".csv"):
            payload = grid.to_csv().encode()
        else:
            payload = grid.to_pgm()
        bounded = int((grid.cells < 0).sum())
        print(f"render {args.res}x{args.res}: {bounded} bounded cells", file=out)

    elif cmd == "series":
        # derivatives along backward orbits are invariant under affine conjugation
        w0 = orbit.base_point(g, args.r0)
        rep = orbit.series(g, w0, args.n)
        payload = rep.to_csv().encode()
        last = rep.ratios[-1] if rep.ratios else math.nan
        print(f"series N={args.n} w0={w0.real:.12g} last_ratio={last:.6g} m4={rep.m4:g}", file=out)

    elif cmd == "brennan":
        if not f.is_monic:
            raise ValidationError("brennan needs a monic polynomial")
        rbig = args.rbig or max(8.0, 2 * basin.escape_radius(f))
        est = bottcher.brennan_integral(f, args.p, args.samples, rbig, args.seed, args.max_iter or 500)
        payload = est.to_json().encode()
        print(f"brennan p={est.p:g} total={est.total:.8g} std_error={est.std_error:.3g}", file=out)

    elif cmd == "perturb":
        if not f.is_monic:
            raise ValidationError("perturb needs a monic polynomial")
        a = f.coeffs[0]
        res = {"m": f.degree, "a": [a.real, a.imag], "samples": args.samples, "seed": args.seed}
        if args.delta is None and args.eps_prime is None:
            raise ValidationError("perturb needs --delta (with --w) and/or --eps-prime")
        if args.delta is not None:
            if args.w is None:
                raise ValidationError("--delta needs --w")
            u = orbit.u_delta_estimate(f.degree, a, args.w, args.delta, args.samples, args.seed)
            res["u_delta"] = {"delta": args.delta, "w": [args.w.real, args.w.imag], "value": u.value, "evaluated": u.evaluated, "skipped": u.skipped}
        if args.eps_prime is not None:
            v = orbit.v_estimate(f.degree, a, args.eps_prime, args.samples, args.seed)
            res["v"] = {"eps_prime": args.eps_prime, "value": v.value, "evaluated": v.evaluated, "skipped": v.skipped}
        payload = json.dumps(res, sort_keys=True).encode()
        print("perturb " + " ".join(f"{k}={res[k]['value']:.6g}" for k in ("u_delta", "v") if k in res), file=out)

    elif cmd == "partition":
        part = bottcher.DiskPartition(f.degree, args.r0, args.theta0)
        size = f.degree**args.n
        if args.n < 0 or size > 10**6:
            raise ValidationError("partition level must satisfy 0 <= m^n <= 1e6")
        lines = ["k,re,im,r_lo,r_hi,theta_lo,theta_hi"]
        for k in range(size):
            z, (rl, rh), (tl, th) = bottcher.partition_point(part, args.n, k)
            lines.append(f"{k},{z.real!r},{z.imag!r},{rl!r},{rh!r},{tl!r},{th!r}")
        payload = ("\n".join(lines) + "\n").encode()
        print(f"partition m={f.degree} n={args.n}: {size} cells", file=out)

    if args.out and payload is not None:
        _write_atomic(args.out, payload)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ValidationError as exc:
        print(f"polybasin: error: {exc}", file=sys.stderr)
        return 1
    except PolybasinError as exc:
        print(f"polybasin: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
