"""Command line entry point: ``wavrel <subcommand> [options]``.

Every run prints one JSON report (schema v1) on stdout. Exit status is 0
when all requested suites pass, 1 on a suite failure and 2 on malformed
input.
"""

from __future__ import annotations

import os

# cap BLAS/FFT threads before numpy loads
_threads = os.environ.get("WAVREL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402

SCHEMA = 1


class InputError(Exception):
    """Malformed input (exit status 2)."""


# ---------------------------------------------------------------- io helpers


def _load_domain(path):
    from .geometry import DomainError, make_domain

    if not path:
        raise InputError("--domain is required")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read domain file: {exc}") from exc
    try:
        return make_domain(text)
    except DomainError as exc:
        raise InputError(str(exc)) from exc


def _write_table(path, header, rows, fmt="csv", preamble=None):
    if path is None:
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "json":
            json.dump({"columns": header, "rows": [list(r) for r in rows]}, fh)
            return
        if preamble:
            fh.write(f"# {preamble}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])


def _read_table(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    meta = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    if not body:
        raise InputError(f"{path} has no header row")
    rd = csv.DictReader(io.StringIO("\n".join(body)))
    try:
        rows = [{k: float(v) for k, v in r.items()} for r in rd]
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: non-numeric entry") from exc
    return meta, rd.fieldnames, rows


def _clean(x):
    """JSON-safe conversion (numpy scalars, arrays, non-finite floats)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Report:
    def __init__(self, argv, args):
        self.doc = {
            "schema": SCHEMA,
            "tool": f"wavrel {__version__}",
            "command": list(argv),
            "domain_hash": None,
            "seed": getattr(args, "seed", 0),
            "tolerance": getattr(args, "tol", None),
            "suites": [],
            "result": {},
        }
        self.timings = {}
        self.keep_time = getattr(args, "timings", False)

    def suite(self, name, ok, **data):
        self.doc["suites"].append({"name": name, "pass": bool(ok), **data})

    def stage(self, name, t0):
        self.timings[name] = round(time.perf_counter() - t0, 4)

    def ok(self):
        return all(s["pass"] for s in self.doc["suites"])

    def dump(self):
        doc = dict(self.doc)
        if self.keep_time:
            doc["timings_s"] = self.timings
        return json.dumps(_clean(doc), sort_keys=True, indent=2)


# ---------------------------------------------------------------- commands


def cmd_light_points(args, rep):
    from .geometry import DomainError, light_points

    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    try:
        lps = light_points(dom)
    except DomainError as exc:
        rep.suite("light-points", False, error=str(exc), error_type=type(exc).__name__)
        return
    pts = []
    for lp in lps:
        x, y = dom.curves[lp.component].position(lp.t)
        pts.append({"component": lp.component, "t": lp.t, "sign": lp.sign,
                    "kappa": lp.kappa, "x": float(x), "y": float(y)})
    rep.doc["result"] = {"count": len(pts), "points": pts}
    rep.suite("light-points", True, count=len(pts))


def cmd_involution(args, rep):
    from .characteristics import involution_map

    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    t0 = time.perf_counter()
    E = involution_map(dom, args.sign, args.grid)
    rep.stage("involution", t0)
    rows = E.table_rows()
    _write_table(args.out, ["component", "t", "target_component", "target_t", "class_order"],
                 rows, args.format, f"domain={dom.digest()}")
    bad = sum(1 for r in rows if r[2] < 0)
    rep.doc["result"] = {"rows": len(rows), "unresolved": bad,
                         "exceptional": [list(e) for e in E.exceptional]}
    rep.suite("involution", True, rows=len(rows))


def cmd_orbit(args, rep):
    from .dirichlet import OrbitError, orbit

    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    t0 = time.perf_counter()
    try:
        rec = orbit(dom, (args.component, args.start), args.iters, args.grid)
    except OrbitError as exc:
        rep.suite("orbit", False, error=str(exc))
        return
    rep.stage("orbit", t0)
    rows = [(k, int(c), float(t)) for k, (c, t) in enumerate(rec.iterates)]
    _write_table(args.out, ["k", "component", "t"], rows, args.format, f"domain={dom.digest()}")
    rep.doc["result"] = rec.to_dict()
    rep.suite("orbit", True)


def _read_field(path, dom, M=None):
    from .fields import BoundaryField

    meta, cols, rows = _read_table(path)
    for m in meta:
        if m.startswith("domain=") and m.split("=", 1)[1] != dom.digest():
            raise InputError(f"{path} was written for a different domain")
    need = {"component", "t", "phi", "phi_n"}
    if not need <= set(cols or []):
        raise InputError(f"{path} needs columns component, t, phi, phi_n")
    comps = sorted({int(r["component"]) for r in rows})
    if comps != list(range(dom.N)):
        raise InputError(f"{path} must list every boundary component")
    per = [[r for r in rows if int(r["component"]) == c] for c in comps]
    sizes = {len(p) for p in per}
    if len(sizes) != 1:
        raise InputError(f"{path}: components have different grid sizes")
    phi = np.array([[r["phi"] for r in p] for p in per])
    phin = np.array([[r["phi_n"] for r in p] for p in per])
    return BoundaryField(dom, phi, phin)


def cmd_pairing(args, rep):
    from .fields import FieldError
    from .symplectic import L_basis, glob_basis, isotropy_residual, omega, pairing_matrix

    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    tol = args.tol if args.tol is not None else 1e-7
    if args.a and args.b:
        try:
            u, w = _read_field(args.a, dom), _read_field(args.b, dom)
        except FieldError as exc:
            raise InputError(str(exc)) from exc
        if u.M != w.M:
            raise InputError("field files use different grids")
        val = omega(dom, u, w)
        rep.doc["result"] = {"omega": val, "antisymmetry": abs(val + omega(dom, w, u))}
        rep.suite("pairing", True, omega=val)
        return
    t0 = time.perf_counter()
    B = glob_basis(dom, args.K, args.M) + L_basis(dom, args.K, args.M)
    P = pairing_matrix(dom, B)
    iso = isotropy_residual(dom, B)
    rep.stage("pairing", t0)
    rep.doc["result"] = {"size": len(B), "antisymmetry": P.antisymmetry(), "isotropy": iso}
    rep.suite("isotropy", iso < tol, residual=iso, tol=tol)


def cmd_verify(args, rep):
    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    t0 = time.perf_counter()
    if args.suite == "defect":
        if dom.is_misner:
            from .misner import misner_defect

            r = misner_defect(args.K)
            want = 2 * (2 * args.K + 1)
            rep.doc["result"] = {"defect": r.defect, "lagrangian": r.defect == 0,
                                 "dim_L": r.dim_L, "dim_perp": r.dim_perp,
                                 "label": r.label, "spectrum": r.spectrum}
            rep.suite("defect", r.defect == want, defect=r.defect, expected=want)
        else:
            from .symplectic import truncated_reduction

            r = truncated_reduction(dom, args.K, args.M)
            rep.timings["reduction"] = r.extra.pop("runtime_s", None)
            want = 2 * (dom.N - 1)
            done = r.extra.get("defect_completed")
            ok = r.defect == want and done == 0
            rep.doc["result"] = {"defect": r.defect, "defect_completed": done,
                                 "pass": ok, **{k: v for k, v in r.to_dict().items()
                                                if k not in ("defect",)}}
            rep.suite("defect", ok, defect=r.defect, expected=want)
    elif args.suite == "isotropy":
        from .symplectic import L_basis, isotropy_residual

        if dom.is_misner:
            from .misner import _pairing, _modes, part_L

            Lm = np.array([part_L("full", b) for b in _modes(args.K, 256)])
            iso = float(np.max(np.abs(_pairing("full", Lm, Lm))))
        else:
            iso = isotropy_residual(dom, L_basis(dom, args.K, args.M, validate=True))
        tol = args.tol if args.tol is not None else 1e-7
        rep.doc["result"] = {"isotropy": iso}
        rep.suite("isotropy", iso < tol, residual=iso, tol=tol)
    else:
        raise InputError(f"unknown suite {args.suite!r}")
    rep.stage(args.suite, t0)


def cmd_dirichlet(args, rep):
    from .dirichlet import diagnose

    dom = _load_domain(args.domain)
    rep.doc["domain_hash"] = dom.digest()
    t0 = time.perf_counter()
    out = diagnose(dom, n_iter=args.iters, seed=args.seed, grid=args.grid)
    rep.stage("diagnose", t0)
    rep.doc["result"] = out
    rep.suite("dirichlet", True, verdict=out["verdict"])


def cmd_diamond(args, rep):
    from .diamond import DiamondError, bulk_action, diamond_L, hj_action, named_function

    try:
        f, g = named_function(args.f), named_function(args.g)
        box = tuple(float(b) for b in args.box)
        if not (box[1] > box[0] and box[3] > box[2]):
            raise InputError("box must satisfy s+0 < s+1 and s-0 < s-1")
        u = diamond_L(f, g, box, args.n)
        val = hj_action(u)
    except DiamondError as exc:
        raise InputError(str(exc)) from exc
    bulk = bulk_action(f, g, box)
    tol = args.tol if args.tol is not None else 1e-10
    err = abs(val - bulk)
    rep.doc["result"] = {"vertices": u.vertices(), "hj_action": val, "bulk_action": bulk,
                         "difference": err}
    rep.suite("hj", err <= tol * max(1.0, abs(val)), difference=err, tol=tol)


def cmd_flow(args, rep):
    from . import hamiltonian as H

    tol = args.tol if args.tol is not None else 1e-6
    if args.compose:
        xi, xi2 = args.compose
        t0 = time.perf_counter()
        samples = H.member_samples(xi + xi2, 3, args.seed, args.M)
        r = H.flow_composition_check(xi, xi2, samples)
        rep.stage("compose", t0)
        rep.doc["result"] = {"composition_residual": r, "xi": xi, "xi_prime": xi2}
        rep.suite("composition", r < tol, residual=r, tol=tol)
        return
    if args.xi is None or not args.input:
        raise InputError("flow needs --xi and --in (or --compose XI XI2)")
    _, cols, rows = _read_table(args.input)
    if not {"theta", "phi", "phi_n"} <= set(cols or []):
        raise InputError("circle field files need columns theta, phi, phi_n")
    try:
        u = H.CircleField([r["phi"] for r in rows], [r["phi_n"] for r in rows])
        t0 = time.perf_counter()
        v = H.reduced_flow_neg(u, args.xi)
        rep.stage("flow", t0)
    except H.HamiltonianError as exc:
        rep.suite("flow", False, error=str(exc))
        return
    th = v.theta
    _write_table(args.out, ["theta", "phi", "phi_n"],
                 [(float(a), float(b), float(c)) for a, b, c in zip(th, v.phi, v.phin)], args.format)
    rep.doc["result"] = {"xi": args.xi, "M": v.M, "H_in": H.hamiltonian_H(u),
                         "H_out": H.hamiltonian_H(v), "membership": H.c_xi_membership(u, args.xi)}
    rep.suite("flow", True)


def cmd_misner(args, rep):
    from . import misner as Ms

    rep.doc["domain_hash"] = "misner"
    if args.defect:
        r = Ms.misner_defect(args.K, part=args.part)
        want = 2 * (2 * args.K + 1) if args.part == "full" else None
        rep.doc["result"] = {"defect": r.defect, "lagrangian": r.defect == 0, **r.to_dict()}
        ok = r.defect == want if want is not None else True
        rep.suite("misner-defect", ok, defect=r.defect, expected=want)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(_clean(rep.doc["result"]), sort_keys=True, indent=2))
    elif args.trace is not None:
        r = Ms.misner_trace(args.trace, args.sign, args.component)
        _write_table(args.out, ["x", "y"], [(float(a), float(b)) for a, b in r.path], args.format)
        rep.doc["result"] = {"outcome": r.outcome, "component": r.component, "t": r.t,
                             "steps": int(r.path.shape[0])}
        rep.suite("misner-trace", True, outcome=r.outcome)
    else:
        raise InputError("misner needs --defect or --trace X0")


# ---------------------------------------------------------------- parser


def _sign(s):
    s = s.strip().lower()
    if s in ("minus", "-", "m"):
        return "-"
    if s in ("plus", "+", "p"):
        return "+"
    raise argparse.ArgumentTypeError("sign must be plus or minus")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", help="domain-spec JSON file")
    common.add_argument("--K", type=int, default=8)
    common.add_argument("--M", type=int, default=1024)
    common.add_argument("--grid", type=int, default=2048)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="csv")
    common.add_argument("--timings", action="store_true", help="add wall-clock stage times")

    p = argparse.ArgumentParser(prog="wavrel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"wavrel {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("light-points", parents=[common]).set_defaults(fn=cmd_light_points)

    s = sub.add_parser("involution", parents=[common])
    s.add_argument("--sign", type=_sign, default="-")
    s.set_defaults(fn=cmd_involution)

    s = sub.add_parser("orbit", parents=[common])
    s.add_argument("--start", type=float, default=0.0)
    s.add_argument("--component", type=int, default=0)
    s.add_argument("--iters", type=int, default=100)
    s.set_defaults(fn=cmd_orbit)

    s = sub.add_parser("pairing", parents=[common])
    s.add_argument("--a", help="field CSV (component, t, phi, phi_n)")
    s.add_argument("--b", help="second field CSV")
    s.set_defaults(fn=cmd_pairing)

    s = sub.add_parser("verify", parents=[common])
    s.add_argument("--suite", choices=("isotropy", "defect"), required=True)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("dirichlet", parents=[common])
    s.add_argument("--diagnose", action="store_true", default=True)
    s.add_argument("--iters", type=int, default=20000)
    s.set_defaults(fn=cmd_dirichlet)

    s = sub.add_parser("diamond", parents=[common])
    s.add_argument("--hj", action="store_true", default=True)
    s.add_argument("--f", default="id")
    s.add_argument("--g", default="id")
    s.add_argument("--box", nargs=4, type=float, default=[0.0, 1.0, 0.0, 1.0])
    s.add_argument("--n", type=int, default=129)
    s.set_defaults(fn=cmd_diamond)

    s = sub.add_parser("flow", parents=[common])
    s.add_argument("--xi", type=float)
    s.add_argument("--in", dest="input")
    s.add_argument("--compose", nargs=2, type=float, metavar=("XI", "XI2"))
    s.add_argument("--check", action="store_true")
    s.set_defaults(fn=cmd_flow)

    s = sub.add_parser("misner", parents=[common])
    s.add_argument("--defect", action="store_true")
    s.add_argument("--part", choices=("full", "lower", "upper"), default="full")
    s.add_argument("--trace", type=float, default=None, metavar="X0")
    s.add_argument("--sign", type=_sign, default="-")
    s.add_argument("--component", type=int, default=0)
    s.set_defaults(fn=cmd_misner)
    return p


def run(argv=None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rep = Report(argv, args)
    try:
        args.fn(args, rep)
    except InputError as exc:
        rep.doc["error"] = str(exc)
        stdout.write(rep.dump() + "\n")
        return 2
    stdout.write(rep.dump() + "\n")
    return 0 if rep.ok() else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
