"""Command-line front end: ``holofix <command> ...``.

Every command prints one JSON artifact (canonical key order, full tolerance
table embedded). ``--output FILE`` or ``$HOLOFIX_OUT`` (a directory) also
saves it. Exit status: 0 success, 1 mathematical/verification failure,
2 usage or input error.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io
from ._config import tolerance_table
from .automorphisms import PolyAutomorphism, prescribe_fixed_points, verify_automorphism
from .ball import (HalfSpace, automorphism_fixing_pair, kobayashi_ball, kobayashi_distance,
                   nearest_on_sphere, sample_ball, sample_line_in_ball)
from .errors import CertificateFailure, HolofixError, WitnessNotFound
from .fixed_points import (PointSet, classify_candidate_set, fixed_points_numeric,
                           fixed_points_structural, is_isolated)
from .gallery import (BlaschkeProduct, CurveInvolution, annuli_product_automorphism,
                      involution_fixed_points, strip_automorphism)
from .linearization import (annulus_sampler, ball_point_sampler, ball_sampler, cartan_phi,
                            equivariance_residual, polydisc_sampler)
from .polycore import MultiPoly, PolyMap
from .shells import ShellSchedule, build_domain, line_witness, third_fixed_point

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    seed: int = 0
    tolerances: dict = field(default_factory=tolerance_table)
    schedule_path: str | None = None
    output_dir: str | None = None

    def to_dict(self) -> dict:
        return {"seed": self.seed, "tolerances": dict(self.tolerances),
                "schedule_path": self.schedule_path, "output_dir": self.output_dir}

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        return cls(int(d.get("seed", 0)), dict(d.get("tolerances", tolerance_table())),
                   d.get("schedule_path"), d.get("output_dir"))


class UsageError(Exception):
    pass


def parse_complex_list(text: str) -> np.ndarray:
    """'0.1+0.2j, 0.3' -> array of complex."""
    try:
        return np.array([complex(s.strip().replace(" ", "")) for s in text.split(",") if s.strip()],
                        dtype=np.complex128)
    except ValueError as exc:
        raise UsageError(f"cannot parse complex list {text!r}") from exc


def parse_half_space(text: str) -> HalfSpace:
    """'im2>=-0.5' or 'im2<=0.5' (coordinate index is 1-based)."""
    t = text.replace(" ", "").lower()
    for op, sign in ((">=", 1), ("<=", -1)):
        if op in t:
            lhs, rhs = t.split(op)
            if not lhs.startswith("im") or not lhs[2:].isdigit():
                break
            return HalfSpace(int(lhs[2:]) - 1, sign, float(rhs))
    raise UsageError(f"half-space must look like im2>=-0.5, got {text!r}")


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _load_points(path: str) -> np.ndarray:
    data = _load_json(path)
    if isinstance(data, dict):
        data = data["points"]
    return np.array([[io.complex_from_json(c) for c in p] for p in data], dtype=np.complex128)


def _load_map(path: str):
    d = _load_json(path)
    if "result" in d:  # a saved construct artifact
        d = d["result"]
    if "provenance" in d:
        return PolyAutomorphism.from_dict(d)
    if "automorphism" in d:
        return PolyAutomorphism.from_dict(d["automorphism"])
    return PolyMap.from_dict(d)


def _schedule(path):
    return ShellSchedule.default() if path is None else ShellSchedule.from_dict(_load_json(path))


# --- commands -------------------------------------------------------------

def cmd_construct(args, cfg):
    P = _load_points(args.points)
    g = prescribe_fixed_points(P, seed=args.seed)
    rep = verify_automorphism(g, samples=args.samples, box=args.box, seed=args.seed)
    fix = fixed_points_structural(g)
    return {"automorphism": g.to_dict(), "verification": rep.to_dict(),
            "structural_fixed_points": fix.to_dict(), "input_hausdorff": fix.hausdorff(P)}, rep.passed


def cmd_verify(args, cfg):
    g = _load_map(args.map)
    if not isinstance(g, PolyAutomorphism):
        raise UsageError("verify needs an automorphism file with inverse factors")
    rep = verify_automorphism(g, samples=args.samples, box=args.box, seed=args.seed)
    return {"verification": rep.to_dict()}, rep.passed


def cmd_fix_points(args, cfg):
    f = _load_map(args.map)
    out = {}
    if args.structural:
        out["structural"] = fixed_points_structural(f).to_dict()
    rep = fixed_points_numeric(f, args.box, args.starts, args.tol, seed=args.seed)
    out["report"] = rep.to_dict()
    return out, True


def cmd_kobayashi(args, cfg):
    if args.kind == "dist":
        z, w = parse_complex_list(args.z), parse_complex_list(args.w)
        return {"z": io.point_to_json(z), "w": io.point_to_json(w), "distance": kobayashi_distance(z, w)}, True
    if args.kind == "ball":
        b = kobayashi_ball(parse_complex_list(args.center), args.sigma)
        return {"ball": b.to_dict()}, True
    hs = parse_half_space(args.half_space) if args.half_space else None
    res = nearest_on_sphere(parse_complex_list(args.p), parse_complex_list(args.center), args.radius, hs,
                            starts=args.starts, seed=args.seed)
    return {"nearest": res.to_dict()}, True


def cmd_shell_domain(args, cfg):
    D = build_domain(_schedule(args.schedule))
    if args.kind == "build":
        return {"domain": D.to_dict()}, True
    a, b = parse_complex_list(args.a), parse_complex_list(args.b)
    try:
        if args.kind == "check-line":
            return {"witness": line_witness(D, a, b).to_dict()}, True
        cert = third_fixed_point(D, a, b, args.probe_offset, seed=args.seed)
        return {"certificate": cert.to_dict()}, cert.passed
    except (WitnessNotFound, CertificateFailure) as exc:
        return {"failure": str(exc), "diagnostics": exc.diagnostics}, False


def cmd_gallery(args, cfg):
    if args.kind == "curve":
        if args.blaschke:
            branch = BlaschkeProduct(tuple(parse_complex_list(args.blaschke)))
        else:
            branch = MultiPoly.from_roots(parse_complex_list(args.roots))
        fix = involution_fixed_points(CurveInvolution(branch))
        return {"fixed_points": fix.to_dict(), "count": len(fix)}, True
    if args.kind == "strip":
        f = strip_automorphism(args.k)
        Z = f.sample_domain(args.samples, args.seed)
        inv = bool(np.all(f.contains(f(Z))))
        return {"k": args.k, "fixed_points": io.points_to_json(f.fixed_points),
                "domain_samples": args.samples, "domain_invariant": inv}, inv
    A = annuli_product_automorphism(parse_complex_list(args.radii).real)
    fix = A.fixed_points()
    out = {"radii": list(A.radii), "fixed_points": fix.to_dict(), "count": len(fix),
           "isolated": [is_isolated(A, p) for p in fix]}
    if args.solve:
        rep = fixed_points_numeric(A, 1.0, args.starts, seed=args.seed)
        out["numeric"] = rep.to_dict()
        return out, len(rep.found) == len(fix)
    return out, True


def cmd_linearize(args, cfg):
    if args.domain == "annulus":
        sampler = annulus_sampler(args.r)
        if args.point is not None and abs(parse_complex_list(args.point)[0] - math.sqrt(args.r)) > 1e-12:
            raise UsageError("the annulus isotropy sampler is based at sqrt(r)")
    elif args.domain == "polydisc":
        if args.point is not None and np.any(parse_complex_list(args.point)):
            raise UsageError("the polydisc sampler is based at the origin")
        sampler = polydisc_sampler(args.dim)
    else:
        z = np.zeros(args.dim) if args.point is None else parse_complex_list(args.point)
        sampler = ball_sampler(z.size) if not np.any(z) else ball_point_sampler(z)
    phi = cartan_phi(sampler, args.samples, seed=args.seed)
    held_out = sampler.sample(1, seed=args.seed + 1)[0]
    n = sampler.point.size
    rng = np.random.default_rng(args.seed)
    if args.domain == "annulus":
        r = args.r
        Z = (r + (1 - r) * rng.uniform(0.05, 0.95, (16, 1))) * np.exp(2j * np.pi * rng.random((16, 1)))
    elif args.domain == "polydisc":
        Z = 0.9 * np.sqrt(rng.random((16, n))) * np.exp(2j * np.pi * rng.random((16, n)))
    else:
        Z = sample_ball(n, 16, rng, 0.9)
    rep = phi.report()
    rep["point"] = io.point_to_json(sampler.point)
    rep["equivariance_residual"] = equivariance_residual(phi, held_out, Z)
    rep["standard_error"] = float(phi.standard_error(Z).max())
    return {"linearization": rep}, True


def cmd_classify(args, cfg):
    K = _load_points(args.points)
    rng = np.random.default_rng(args.seed)
    if args.family == "shift-map":
        if not args.map:
            raise UsageError("--family shift-map needs --map")
        g = _load_map(args.map)
        family = [g]
        box = args.box

        def sampler(count):
            u = rng.uniform(-box, box, (count, 2 * K.shape[1]))
            return u[:, : K.shape[1]] + 1j * u[:, K.shape[1]:]
    else:
        if len(K) < 2:
            raise UsageError("ball families need at least two points in K")
        a, b = K[0], K[1]
        thetas = rng.uniform(0.1, 2 * np.pi - 0.1, args.family_size)
        family = [automorphism_fixing_pair(a, b, t) for t in thetas]

        def sampler(count):
            line = sample_line_in_ball(a, b, count // 2, rng)
            return np.vstack([line, sample_ball(K.shape[1], count - count // 2, rng, 0.95)])
    res = classify_candidate_set(PointSet(K), family, sampler, family_name=args.family)
    return {"classification": res.to_dict()}, True


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holofix", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"holofix {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", help="also write the JSON artifact here")

    sp = sub.add_parser("construct", help="automorphism with prescribed fixed points")
    sp.add_argument("--points", required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--box", type=float, default=10.0)
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("verify", help="round-trip check of a stored automorphism")
    sp.add_argument("--map", required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--box", type=float, default=10.0)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("fix-points", help="numeric fixed points of a polynomial map")
    sp.add_argument("--map", required=True)
    sp.add_argument("--box", type=float, required=True)
    sp.add_argument("--starts", type=int, default=2000)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--structural", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_fix_points)

    sp = sub.add_parser("kobayashi", help="ball distance, balls and nearest points")
    ksub = sp.add_subparsers(dest="kind", required=True)
    k = ksub.add_parser("dist")
    k.add_argument("--z", required=True)
    k.add_argument("--w", required=True)
    common(k)
    k = ksub.add_parser("ball")
    k.add_argument("--center", required=True)
    k.add_argument("--sigma", type=float, required=True)
    common(k)
    k = ksub.add_parser("nearest")
    k.add_argument("--p", required=True)
    k.add_argument("--center", required=True)
    k.add_argument("--radius", type=float, required=True)
    k.add_argument("--half-space", default=None, help="e.g. im2>=-0.5")
    k.add_argument("--starts", type=int, default=None)
    common(k)
    sp.set_defaults(func=cmd_kobayashi)

    sp = sub.add_parser("shell-domain", help="shell domain, line witnesses, certificates")
    ssub = sp.add_subparsers(dest="kind", required=True)
    s = ssub.add_parser("build")
    s.add_argument("--schedule", default=None)
    common(s)
    for name in ("check-line", "certify"):
        s = ssub.add_parser(name)
        s.add_argument("--schedule", default=None)
        s.add_argument("--a", required=True)
        s.add_argument("--b", required=True)
        if name == "certify":
            s.add_argument("--probe-offset", type=float, default=None)
        common(s)
    sp.set_defaults(func=cmd_shell_domain)

    sp = sub.add_parser("gallery", help="curve, strip and annuli examples")
    gsub = sp.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("curve")
    grp = g.add_mutually_exclusive_group(required=True)
    grp.add_argument("--roots")
    grp.add_argument("--blaschke", help="Blaschke zeros (comma separated)")
    common(g)
    g = gsub.add_parser("strip")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--samples", type=int, default=1000)
    common(g)
    g = gsub.add_parser("annuli")
    g.add_argument("--radii", required=True)
    g.add_argument("--solve", action="store_true")
    g.add_argument("--starts", type=int, default=2000)
    common(g)
    sp.set_defaults(func=cmd_gallery)

    sp = sub.add_parser("linearize", help="Cartan linearization by isotropy averaging")
    sp.add_argument("--domain", choices=("ball", "polydisc", "annulus"), required=True)
    sp.add_argument("--point", default=None)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--r", type=float, default=0.25)
    sp.add_argument("--samples", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_linearize)

    sp = sub.add_parser("classify", help="determining-set classification against a finite family")
    sp.add_argument("--points", required=True)
    sp.add_argument("--family", choices=("pair-fixing", "shift-map"), required=True)
    sp.add_argument("--map", default=None)
    sp.add_argument("--family-size", type=int, default=8)
    sp.add_argument("--box", type=float, default=5.0)
    common(sp)
    sp.set_defaults(func=cmd_classify)
    return p


def _artifact_name(args) -> str:
    parts = [args.command] + ([args.kind] if getattr(args, "kind", None) else [])
    return "-".join(parts) + ".json"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = os.environ.get("HOLOFIX_OUT")
    cfg = RunConfig(seed=args.seed, schedule_path=getattr(args, "schedule", None), output_dir=out_dir)
    try:
        result, ok = args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"holofix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HolofixError, ValueError) as exc:
        print(f"holofix: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAIL
    artifact = {"command": _artifact_name(args)[:-5], "config": cfg.to_dict(), "ok": bool(ok),
                "result": result}
    text = io.dumps(artifact)
    sys.stdout.write(text)
    targets = [args.output] if args.output else []
    if out_dir:
        targets.append(str(Path(out_dir) / _artifact_name(args)))
    for t in targets:
        Path(t).parent.mkdir(parents=True, exist_ok=True)
        Path(t).write_text(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
