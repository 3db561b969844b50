"""Command-line front end: ``tightlag <subcommand> [options]``.

Exit codes: 0 success, 1 verification mismatch, 2 numerical instability,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import intgeo
from . import killing as kl
from . import liegroup as lg
from . import surfaces as sf

EXIT_OK, EXIT_MISMATCH, EXIT_UNSTABLE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# -- formatting ----------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _json_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps_json(obj, indent=2, _level=0) -> str:
    """JSON with every float written to 17 significant digits."""
    obj = _plain(obj) if _level == 0 else obj
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps_json(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps_json(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        return _json_float(obj)
    return json.dumps(obj)


def _text_value(v):
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, list):
        return "[" + ", ".join(_text_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_text_value(x)}" for k, x in v.items()) + "}"
    return str(v)


def render(report: dict, fmt: str) -> str:
    report = _plain(report)
    rows = report.get("rows")
    if fmt == "json":
        return dumps_json(report) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if rows:
            keys = list(rows[0])
            w.writerow(keys)
            for r in rows:
                w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
        else:
            w.writerow(["key", "value"])
            for k, v in report.items():
                w.writerow([k, _text_value(v)])
        return buf.getvalue()
    lines = [f"{k}: {_text_value(v)}" for k, v in report.items() if k != "rows"]
    if rows:
        keys = list(rows[0])
        lines.append(" ".join(keys))
        lines += [" ".join(_text_value(r[k]) for k in keys) for r in rows]
    return "\n".join(lines) + "\n"


# -- subcommands ---------------------------------------------------------------
# each returns (report, exit code)

def _surface(args) -> sf.LagrangianSurface:
    if not args.surface:
        raise UsageError("--surface is required")
    try:
        return sf.parse_surface(args.surface)
    except (sf.AtlasError, sf.ImmersionError):
        raise
    except (ValueError, OSError) as err:
        raise UsageError(str(err)) from None


def cmd_nullity(args):
    L = _surface(args)
    rep = kl.nullity_report(L, n_points=max(12, args.samples or 64), tol=args.tol or 1e-8, seed=args.seed)
    out = {"surface": L.describe(), "seed": args.seed, "tol": args.tol or 1e-8,
           "nullity": rep.rank if rep.stable else None,
           "ranks_by_tol": {format(t, "g"): r for t, r in rep.ranks.items()},
           "singular_values": rep.singular_values, "stable": rep.stable}
    if sf.check_lagrangian(L, seed=args.seed):
        q = L.domain.sample_params(64, np.random.default_rng(args.seed))
        out["max_gotoh_bound"] = int(kl.gotoh_bounds(L, q).max())
    if not rep.stable:
        return out, EXIT_UNSTABLE
    return out, EXIT_OK


def cmd_gotoh(args):
    L = _surface(args)
    n = args.samples or 1000
    q = L.domain.sample_params(n, np.random.default_rng(args.seed))
    try:
        bounds = kl.gotoh_bounds(L, q)
    except ValueError as err:
        return {"surface": L.describe(), "error": str(err)}, EXIT_MISMATCH
    nul = kl.killing_nullity(L, seed=args.seed)
    ok = nul >= bounds.max()
    vals, counts = np.unique(bounds, return_counts=True)
    out = {"surface": L.describe(), "seed": args.seed, "samples": n,
           "bound_histogram": {str(v): int(c) for v, c in zip(vals, counts)},
           "max_bound": int(bounds.max()), "nullity": nul, "inequality_holds": bool(ok)}
    return out, EXIT_OK if ok else EXIT_MISMATCH


def cmd_kahler_scan(args):
    res = args.resolution or 64
    if res < 2:
        raise UsageError("--resolution must be >= 2")
    rows = [{"sum": s, "diff": d, "dim_im_psi2": k} for s, d, k in geo.scan_fundamental_domain(res)]
    return {"resolution": res, "rows": rows}, EXIT_OK


def _count_entry(rep: intgeo.IntersectionReport):
    return {"count": rep.count, "transverse": rep.transverse, "degenerate": rep.degenerate}


def cmd_intersect(args):
    L = _surface(args)
    count = (lambda g: intgeo.intersect_generic(L, L.transformed(g))) if args.method == "generic" \
        else (lambda g: intgeo.count_intersections(L, g))
    if args.replay:
        try:
            cases = intgeo.violations_from_json(json.loads(Path(args.replay).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as err:
            raise UsageError(f"cannot read replay file: {err}") from None
        rows, bad = [], 0
        for g, expected in cases:
            r = count(g)
            bad += r.count != expected
            rows.append({"expected": expected, **_count_entry(r)})
        out = {"surface": L.describe(), "replay": args.replay, "cases": len(rows),
               "mismatches": bad, "rows": rows}
        return out, EXIT_MISMATCH if bad else EXIT_OK
    n = args.samples or 100
    a, b = lg.haar_pairs(np.random.default_rng(args.seed), n)
    rows = [_count_entry(count(lg.ProductGroupElement.from_matrices(ai, bi))) for ai, bi in zip(a, b)]
    counts = [r["count"] for r in rows if not r["degenerate"]]
    hist = {str(c): counts.count(c) for c in sorted(set(c for c in counts if c is not None))}
    out = {"surface": L.describe(), "seed": args.seed, "samples": n, "method": args.method,
           "histogram": hist, "degenerate": sum(r["degenerate"] for r in rows), "rows": rows}
    return out, EXIT_OK


def cmd_poincare(args):
    L = _surface(args)
    n = args.samples or 100_000
    est = intgeo.poincare_mc(L, n, args.seed)
    expected = intgeo.expected_intersection_integral(L)
    out = {"surface": L.describe(), "seed": args.seed, "samples": n, "mean": est.mean,
           "std_error": est.std_error, "discarded": est.discarded, "vol_g": intgeo.vol_g()}
    code = EXIT_OK
    if expected is not None:
        tol = max(3 * est.std_error, 1e-9 * abs(expected))
        ok = abs(est.mean - expected) <= tol
        out.update(expected=expected, tolerance=tol, within_tolerance=bool(ok))
        code = EXIT_OK if ok else EXIT_MISMATCH
    return out, code


def cmd_tightness(args):
    L = _surface(args)
    n = args.samples or 10_000
    v = intgeo.tightness_check(L, args.regime, n, args.epsilon, args.seed)
    out = {"surface": L.describe(), "regime": v.regime, "seed": args.seed, "trials": v.trials,
           "transverse_trials": v.transverse_trials, "epsilon": v.epsilon,
           "expected_count": sf.sb_z2(L.topology), "violations": len(v.violations)}
    if v.violations:
        path = Path(args.violations)
        path.write_text(dumps_json(intgeo.violations_to_json(v)) + "\n")
        out["violations_file"] = str(path)
    code = EXIT_MISMATCH if (args.expect_tight and v.violations) else EXIT_OK
    return out, code


def cmd_morse(args):
    L = _surface(args)
    n = args.samples or 10
    rng = np.random.default_rng(args.seed)
    res = args.resolution or 128
    rows, expected = [], sf.sb_z2(L.topology)
    for _ in range(n):
        w = rng.standard_normal(6)
        rep = kl.morse_report(w, L, res)
        rows.append({"field": w.tolist(), "zeros": rep.zero_count, "critical": rep.critical_count,
                     "nondegenerate": rep.nondegenerate})
        if rep.zero_count != rep.critical_count:
            raise kl.MorseMismatchError(f"{rep.critical_count} critical points vs {rep.zero_count} zeros")
    tight = all(r["zeros"] == expected for r in rows if r["nondegenerate"])
    out = {"surface": L.describe(), "seed": args.seed, "samples": n, "resolution": res,
           "sb_z2": expected, "counts_equal_sb": tight, "rows": rows}
    return out, EXIT_MISMATCH if (args.expect_tight and not tight) else EXIT_OK


def cmd_check_lagrangian(args):
    L = _surface(args)
    tol = args.tol or 1e-9
    n = args.samples or 256
    defect = sf.max_lagrangian_defect(L, n, args.seed)
    ok = defect <= tol
    out = {"surface": L.describe(), "seed": args.seed, "samples": n, "tol": tol,
           "max_omega_defect": defect, "lagrangian": bool(ok)}
    return out, EXIT_OK if ok else EXIT_MISMATCH


COMMANDS = {
    "nullity": cmd_nullity,
    "gotoh": cmd_gotoh,
    "kahler-scan": cmd_kahler_scan,
    "intersect": cmd_intersect,
    "poincare": cmd_poincare,
    "tightness": cmd_tightness,
    "morse": cmd_morse,
    "check-lagrangian": cmd_check_lagrangian,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tightlag", description="Numerical checks for Lagrangian surfaces in S^2 x S^2.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--surface", help="m0 | torus:a,b | param:path.json")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--samples", type=int)
        s.add_argument("--resolution", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--epsilon", type=float, default=0.05)
        s.add_argument("--regime", choices=["local", "global"], default="global")
        s.add_argument("--expect-tight", action="store_true")
        s.add_argument("--format", choices=["csv", "json", "text"], default="text")
        s.add_argument("--out", help="write the report here instead of stdout")
        if name == "intersect":
            s.add_argument("--replay", help="violation file written by `tightness`")
            s.add_argument("--method", choices=["auto", "generic"], default="auto")
        if name == "tightness":
            s.add_argument("--violations", default="violations.json",
                           help="where to write replayable violations")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.samples is not None and args.samples <= 0:
        print("tightlag: error: --samples must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.tol is not None and args.tol <= 0:
        print("tightlag: error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        report, code = COMMANDS[args.command](args)
    except UsageError as err:
        print(f"tightlag: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (kl.RankInstabilityError, kl.MorseMismatchError, kl.MomentMapError,
            sf.ImmersionError, sf.AtlasError, np.linalg.LinAlgError) as err:
        print(f"tightlag: numerical instability: {err}", file=sys.stderr)
        return EXIT_UNSTABLE
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
