"""Command-line front end.

Exit codes: 0 ok, 2 parse error, 3 evaluation error, 4 unknown name,
5 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

from . import regression
from .chains import (
    chain_closures,
    cumulative_residue_chain,
    densify_range,
    dk_union_chain,
    make_chain,
    saturate_chain,
    uniform_convergence_certificate,
)
from .constructions import dk_family
from .density import EstimatorConfig, density_profile, exact_charge, exact_limits
from .dsl import DslError, parse_set_expr
from .kp import (
    AnomalySequence,
    SimpleSequence,
    anomaly_demo,
    cesaro_integral_check,
    kp_norm,
    kp_tail_condition,
)
from .nullmod import algorithm1, decision_rows, verify_nullmod
from .quotient import classify_measure_space, field_additivity_check, generate_field, make_partition
from .sets import CesaroError, Finite

EXIT_OK, EXIT_PARSE, EXIT_EVAL, EXIT_UNKNOWN, EXIT_CHECK = 0, 2, 3, 4, 5
SCHEMA_VERSION = 1
DEFAULT_HORIZON = 10**6


class UnknownName(CesaroError):
    pass


class CheckFailed(CesaroError):
    pass


def _default_horizon() -> int:
    env = os.environ.get("CESARO_HORIZON")
    return int(env) if env else DEFAULT_HORIZON


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--horizon", type=int, default=None, help="largest N examined (default 10^6 or $CESARO_HORIZON)")
    p.add_argument("--eps", type=Fraction, default=None, help="epsilon for certificates and densification")
    p.add_argument("--tol", type=Fraction, default=Fraction(1, 1000), help="convergence / nullity tolerance")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule-base", type=int, default=64)
    p.add_argument("--schedule-ratio", type=Fraction, default=Fraction(5, 4))
    return p


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(
        base_n=args.schedule_base,
        growth_ratio=args.schedule_ratio,
        tolerance=args.tol,
        horizon=args.horizon,
    )


def _parse(text: str):
    return parse_set_expr(text)


def _json(obj, command: str) -> str:
    return json.dumps({"command": command, "schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args) -> tuple[str, int]:
    e = _parse(args.expr)
    prof = density_profile(e, _config(args))
    if args.format == "csv":
        return _csv(("N", "count", "nu_N"), prof.csv_rows()), EXIT_OK
    return _json({"expr": str(e), "profile": prof.to_json()}, "eval"), EXIT_OK


def cmd_examples(args) -> tuple[str, int]:
    names = list(regression.SUITES) if args.name == "all" else [args.name]
    for n in names:
        if n not in regression.SUITES:
            raise UnknownName(f"unknown example {n!r}; choose from: all, {', '.join(regression.SUITES)}")
    results = [(n, c) for n in names for c in regression.run(n, args.horizon_given)]
    ok = all(c.passed for _, c in results)
    if args.format == "csv":
        text = _csv(("suite", "check", "passed", "detail"), [(n, c.name, int(c.passed), c.detail) for n, c in results])
    else:
        text = _json(
            {"passed": ok, "checks": [{"suite": n, "name": c.name, "passed": c.passed, "detail": c.detail} for n, c in results]},
            "examples",
        )
    return text, EXIT_OK if ok else EXIT_CHECK


def _target_for(e, given):
    if given is not None:
        return Fraction(given), False
    c = exact_charge(e)
    if c is not None:
        return c.value, False
    lim = exact_limits(e)
    if lim is not None:
        return lim[0], False
    return density_profile(e).upper_est, True


def cmd_nullmod(args) -> tuple[str, int]:
    e = _parse(args.expr)
    target, heuristic = _target_for(e, args.target)
    res = algorithm1(e, target, heuristic)
    if args.format == "csv":
        return _csv(("N", "in_A", "in_Aprime", "in_F", "nu_N_Aprime"), decision_rows(res, args.rows)), EXIT_OK
    rep = verify_nullmod(res, args.horizon, args.tol, _config(args))
    body = {"expr": str(e), "target": str(target), "heuristic": heuristic, "report": rep.to_json()}
    return _json(body, "nullmod"), EXIT_OK if rep.structural_ok else EXIT_CHECK


NAMED_CHAINS = {
    "dk-partial-unions": lambda: dk_union_chain(10),
    "residues-mod-10": lambda: cumulative_residue_chain(10),
}


def _nominal_charge(e, cfg):
    """Exact charge, else the midpoint of the exact or estimated limits.

    A set without a Cesàro limit then keeps oscillating around the nominal
    value, so the certificate search fails instead of erroring out.
    """
    c = exact_charge(e)
    if c is not None:
        return c.value
    lim = exact_limits(e)
    if lim is None:
        prof = density_profile(e, cfg)
        lim = (prof.upper_est, prof.lower_est)
    return (lim[0] + lim[1]) / 2


def _chain_from(args):
    if len(args.exprs) == 1 and args.exprs[0] in NAMED_CHAINS:
        return NAMED_CHAINS[args.exprs[0]]()
    elems = [_parse(t) for t in args.exprs]
    if args.action == "certify":
        cfg = _config(args)
        return make_chain(elems, [_nominal_charge(e, cfg) for e in elems])
    return make_chain(elems, exact=args.action == "densify")


def cmd_chain(args) -> tuple[str, int]:
    ch = _chain_from(args)
    code = EXIT_OK
    if args.action == "certify":
        cert = uniform_convergence_certificate(ch, args.eps or Fraction(1, 100), _config(args))
        body = {"action": "certify", "certificate": cert.to_json()}
        code = EXIT_OK if cert.found else EXIT_CHECK
    elif args.action == "densify":
        d = densify_range(ch, args.eps or Fraction(1, 4))
        body = {"action": "densify", "elements": [{"expr": str(e), "charge": str(c)} for e, c in zip(d.elements, d.charges)]}
    elif args.action == "closures":
        c = chain_closures(ch)
        body = {"action": "closures", "elements": [str(e) for e in c.elements]}
    else:
        body = {"action": "saturate", "elements": [str(e) for e in saturate_chain(ch, args.budget)]}
    if args.format == "csv":
        rows = []
        cfg = _config(args)
        for i, e in enumerate(ch.elements):
            rows.extend((i, *r) for r in density_profile(e, cfg).csv_rows())
        return _csv(("element", "N", "count", "nu_N"), rows), code
    return _json(body, "chain"), code


def cmd_field(args) -> tuple[str, int]:
    gens = [_parse(t) for t in args.exprs]
    fld = generate_field(gens, min(args.horizon, 10**5))
    add = field_additivity_check(fld, seed=args.seed)
    if args.format == "csv":
        return _csv(("atom", "charge"), [(str(a), "" if c is None else str(c)) for a, c in zip(fld.atoms, fld.charges)]), EXIT_OK
    body = {"field": fld.to_json(), "additivity": {"pairs": add.pairs, "failures": len(add.failures)}}
    return _json(body, "field"), EXIT_OK if add.passed else EXIT_CHECK


def cmd_classify(args) -> tuple[str, int]:
    if args.exprs == ["dk"]:
        parts = [dk_family(k) for k in range(args.K)]
    elif args.exprs == ["singletons"]:
        parts = [Finite((k,)) for k in range(1, args.K + 1)]
    else:
        parts = [_parse(t) for t in args.exprs]
    cls = classify_measure_space(make_partition(parts, horizon=min(args.horizon, 10**5)))
    if args.format == "csv":
        return _csv(("k", "tail_mass"), [(k + 1, str(t)) for k, t in enumerate(cls.trend)]), EXIT_OK
    return _json({"classification": cls.to_json()}, "classify"), EXIT_OK


def _load_sequence(spec: str):
    if spec == "anomaly":
        return AnomalySequence()
    with open(spec, encoding="utf-8") as fh:
        data = json.load(fh)
    terms = data["terms"] if isinstance(data, dict) else data
    return SimpleSequence(tuple((Fraction(str(t["coef"])), _parse(t["set"])) for t in terms))


def cmd_kp(args) -> tuple[str, int]:
    cfg = _config(args)
    if args.action == "anomaly":
        rep = anomaly_demo(args.m_max)
        if args.format == "csv":
            return _csv(("m", "nu_m2", "nu_before_next_square"), rep.csv_rows()), EXIT_OK
        return _json({"action": "anomaly", "report": rep.to_json()}, "kp"), EXIT_OK if rep.passed else EXIT_CHECK
    h = _load_sequence(args.spec)
    if args.action == "norm":
        if not isinstance(h, SimpleSequence):
            raise CesaroError("the norm is defined here for simple sequences only")
        n = kp_norm(h, args.p)
        if args.format == "csv":
            return _csv(("p", "power", "norm_float"), [(str(n.p), n.power, f"{n.norm_float:.12g}")]), EXIT_OK
        return _json({"action": "norm", "norm": n.to_json()}, "kp"), EXIT_OK
    if args.action == "integral":
        chk = cesaro_integral_check(h, cfg, seed=args.seed)
        if args.format == "csv":
            return _csv(("N", "deviation"), chk.csv_rows()), EXIT_OK
        return _json({"action": "integral", "report": chk.to_json()}, "kp"), EXIT_OK
    t = kp_tail_condition(h, args.p, args.eps or Fraction(1, 10), cfg)
    if args.format == "csv":
        return _csv(("y", "upper_est"), [(str(y), f"{float(u):.12g}") for y, u in t.estimates]), EXIT_OK
    return _json({"action": "tail", "result": t.to_json()}, "kp"), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="cesaro", description="Cesàro densities, charges and null modification.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="exact charge and density profile of a set expression")
    p.add_argument("expr")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("examples", parents=[common], help="run the frozen worked examples")
    p.add_argument("name", help="suite name or 'all'")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("nullmod", parents=[common], help="null-modify a set (CSV: decision stream)")
    p.add_argument("expr")
    p.add_argument("--target", type=Fraction, default=None)
    p.add_argument("--rows", type=int, default=100, help="rows of the CSV decision stream")
    p.set_defaults(func=cmd_nullmod)

    p = sub.add_parser("chain", parents=[common], help="chain operations")
    p.add_argument("action", choices=("certify", "densify", "closures", "saturate"))
    p.add_argument("exprs", nargs="+", help="increasing DSL expressions or a named chain")
    p.add_argument("--budget", type=int, default=3)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("field", parents=[common], help="atoms of the field generated by expressions")
    p.add_argument("exprs", nargs="*")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("classify", parents=[common], help="countable-partition classification")
    p.add_argument("exprs", nargs="+", help="disjoint parts, or 'dk' / 'singletons'")
    p.add_argument("--K", type=int, default=12, help="truncation level for named partitions")
    p.set_defaults(func=cmd_classify)

    kp = sub.add_parser("kp", help="simple sequences and the K_p pseudonorm")
    kp_sub = kp.add_subparsers(dest="action", required=True)
    for action in ("norm", "integral", "tail"):
        p = kp_sub.add_parser(action, parents=[common])
        p.add_argument("spec", help="JSON sequence spec file, or 'anomaly' for the squares-growth sequence")
        p.add_argument("--p", type=Fraction, default=Fraction(1))
        p.set_defaults(func=cmd_kp)
    p = kp_sub.add_parser("anomaly", parents=[common], help="exact partial averages of the squares-growth sequence")
    p.add_argument("--m-max", type=int, default=1000)
    p.set_defaults(func=cmd_kp)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.horizon_given = args.horizon
    if args.horizon is None:
        args.horizon = _default_horizon()
    try:
        text, code = args.func(args)
    except DslError as exc:
        print(f"parse error: {exc}\n{exc.caret()}", file=sys.stderr)
        return EXIT_PARSE
    except UnknownName as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (CesaroError, ValueError, OverflowError, OSError, KeyError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
