"""Command-line front end.

Exit codes: 0 when the answer is "true" or the transformation succeeded,
1 when it is "false" or a verification failed, 2 for usage and input
errors, 3 when a budget ran out.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import boundary as bd
from .equality import AB, TRIVIAL, FiniteGroupOracle, abelianize, equal_mod_DRH, explain
from .equations import reduce_to_suv, system_from_json as equation_system_from_json, system_to_json
from .errors import BudgetExceeded, KdrhError, VerificationFailed
from .factorization import alpha, cum, extract, lbf, lbf_seq
from .induction import run_induction
from .ordinals import format_ordinal, parse_ordinal
from .semigroups import from_json as semigroup_from_json, satisfies
from .terms import parse, render

log = logging.getLogger("kdrh")

OK, FALSE, USAGE, BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not JSON: {e}")


def _dump(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _oracle(variety, groups_path=None):
    v = (variety or "R").lower()
    if v == "r":
        return TRIVIAL
    if v == "drab":
        return AB
    if v == "drh":
        if not groups_path:
            raise UsageError("--variety DRH needs --groups FILE (a JSON list of finite groups)")
        data = _load(groups_path)
        if isinstance(data, dict):
            data = [data]
        try:
            return FiniteGroupOracle([semigroup_from_json(g) for g in data], name=os.path.basename(groups_path))
        except ValueError as e:
            raise UsageError(str(e))
    raise UsageError(f"unknown variety {variety!r}")


def _oracle_from_doc(doc, args):
    """The oracle named on the command line, else the one stored in ``doc``."""
    if getattr(args, "variety", None):
        return _oracle(args.variety, args.groups)
    stored = doc.get("oracle", "R")
    if stored not in ("R", "DRAb"):
        raise UsageError(f"{stored!r} oracle: pass --variety DRH --groups FILE")
    return _oracle(stored)


def _oracle_name(h):
    return {TRIVIAL: "R", AB: "DRAb"}.get(h, "DRH")


def _emit(args, data, plain=None):
    if args.format == "plain":
        print(plain(data) if plain else _plain(data))
    else:
        print(json.dumps(data, indent=2))


def _plain(data, indent=""):
    if not isinstance(data, dict):
        return f"{indent}{data}"
    lines = []
    for k, v in data.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_plain(v, indent + "  "))
        else:
            lines.append(f"{indent}{k}: {v}")
    return "\n".join(lines)


def _term(text):
    try:
        return parse(text)
    except KdrhError as e:
        raise UsageError(f"cannot parse {text!r}: {e}")


# ------------------------------------------------------------ commands

def cmd_eq(args):
    h = _oracle(args.variety, args.groups)
    u, v = _term(args.u), _term(args.v)
    verdict = equal_mod_DRH(u, v, h)
    if args.explain:
        data = explain(u, v, h)
        data["variety"] = args.variety
        _emit(args, data)
    elif args.format == "plain":
        print("true" if verdict else "false")
    else:
        print(json.dumps(verdict))
    return OK if verdict else FALSE


def cmd_reduce(args):
    h = _oracle(args.variety, args.groups)
    try:
        sysm = equation_system_from_json(_load(args.system))
    except KdrhError as e:
        raise UsageError(str(e))
    if sysm.solution is None:
        raise UsageError("the system carries no solution")
    os.makedirs(args.out, exist_ok=True)
    try:
        ws, suv = reduce_to_suv(sysm, h)
    except VerificationFailed as e:
        print(f"reduce failed: {e}", file=sys.stderr)
        return FALSE
    S, mdl = bd.build_boundary_system(suv)
    report = bd.verify_model(S, mdl, h)
    _dump(os.path.join(args.out, "word_system.json"), system_to_json(ws))
    _dump(os.path.join(args.out, "s_uv.json"), suv.to_json())
    _dump(os.path.join(args.out, "boundary.json"),
          {"oracle": _oracle_name(h), "system": S.to_json(), "model": mdl.to_json()})
    summary = {"indices": len(S.J), "variables": len(S.variables), "relations": len(S.B),
               "bh_groups": len(bd.bh_groups(S.BH)), "model": report.to_json()["conditions"],
               "out": args.out}
    _emit(args, summary)
    if not report.ok:
        print("boundary stage: " + "; ".join(report.failures()), file=sys.stderr)
        return FALSE
    return OK


def _read_boundary(path):
    doc = _load(path)
    try:
        return doc, bd.system_from_json(doc["system"]), bd.model_from_json(doc["model"])
    except KeyError as e:
        raise UsageError(f"{path}: missing {e}")
    except KdrhError as e:
        raise UsageError(f"{path}: {e}")


def _solve_one(path, out, variety, groups, budget, n_rule):
    """Worker for one boundary file; returns (exit code, summary)."""
    doc, S, mdl = _read_boundary(path)
    h = _oracle_from_doc(doc, argparse.Namespace(variety=variety, groups=groups))
    stem = "" if out.get("single") else os.path.splitext(os.path.basename(path))[0] + "."
    trace_path = os.path.join(out["dir"], stem + "trace.jsonl")
    try:
        res = run_induction(S, mdl, h, budget=budget, n_rule=n_rule)
    except BudgetExceeded as e:
        with open(trace_path, "w") as fh:
            for entry in e.partial or []:
                fh.write(json.dumps(entry) + "\n")
        return BUDGET, {"input": path, "status": "budget exceeded", "budget": e.budget,
                        "steps": len(e.partial or []), "trace": trace_path}
    except VerificationFailed as e:
        return FALSE, {"input": path, "status": "verification failed", "detail": str(e)}
    with open(trace_path, "w") as fh:
        fh.write(res.trace_lines() + "\n")
    data = {"oracle": doc.get("oracle", "R"), "model": res.model.to_json()}
    if S.origin.get("positions"):
        data["solution"] = {x: render(t) for x, t in bd.extract_solution(S, res.model, h).items()}
    model_path = os.path.join(out["dir"], stem + "model.json")
    _dump(model_path, data)
    forward = [t for t in res.trace if t["direction"] == "forward"]
    return OK, {"input": path, "status": "solved", "steps": len(forward),
                "model": model_path, "trace": trace_path}


def cmd_solve(args):
    budget = args.budget
    if budget is not None and budget <= 0:
        raise UsageError("--budget must be positive")
    os.makedirs(args.out, exist_ok=True)
    out = {"dir": args.out, "single": len(args.boundary) == 1}
    jobs = [(p, out, args.variety, args.groups, budget, args.n_rule) for p in args.boundary]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_solve_star, jobs))
    else:
        results = [_solve_star(j) for j in jobs]
    for code, summary in results:
        if isinstance(summary, str):
            raise UsageError(summary)
    for _, summary in results:
        _emit(args, summary)
    return max(code for code, _ in results)


def _solve_star(job):
    try:
        return _solve_one(*job)
    except UsageError as e:
        return USAGE, str(e)


def cmd_model_verify(args):
    doc, S, mdl = _read_boundary(args.boundary)
    if args.model:
        m = _load(args.model)
        try:
            mdl = bd.model_from_json(m.get("model", m))
        except KdrhError as e:
            raise UsageError(str(e))
    h = _oracle_from_doc(doc, args)
    rep = bd.verify_model(S, mdl, h)
    _emit(args, rep.to_json())
    return OK if rep.ok else FALSE


def _scheme_arg(data, S, mdl):
    """Either a full scheme or ``{"cuts": [...]}`` (positions only)."""
    if "cuts" in data:
        cuts = sorted({parse_ordinal(c) for c in data["cuts"]})
        J = [f"c{k}" for k in range(len(cuts))]
        return bd.FactorizationScheme(J, dict(zip(J, cuts)), {}, {})
    return bd.scheme_from_json(data)


def cmd_scheme_refine(args):
    doc, S, mdl = _read_boundary(args.boundary)
    h = _oracle_from_doc(doc, args)
    C1 = bd.scheme_of(S, mdl)
    try:
        C2 = _scheme_arg(_load(args.scheme), S, mdl)
    except (KdrhError, KeyError) as e:
        raise UsageError(f"bad scheme: {e}")
    sg, phi = S.semigroup, S.phi
    rep2 = bd.verify_scheme(C2, mdl.w, sg, phi, h)
    if not rep2.ok:
        _emit(args, {"scheme": rep2.to_json()})
        return FALSE
    C3, lam1, lam2 = bd.common_refinement(C1, C2, mdl.w, sg, phi)
    checks = {
        "scheme": bd.verify_scheme(C3, mdl.w, sg, phi, h).ok,
        "refines_first": bd.verify_refinement(C1, C3, lam1, sg, h).ok,
        "refines_second": bd.verify_refinement(C2, C3, lam2, sg, h).ok,
        "restrict_first": bd.restrict(C3, C1.J, C1.iota, lam1, sg).M == C1.M,
    }
    data = {"refinement": C3.to_json(), "lambda_first": bd.lambda_to_json(lam1),
            "lambda_second": bd.lambda_to_json(lam2), "checks": checks}
    if args.out:
        _dump(args.out, data)
        _emit(args, {"out": args.out, "indices": len(C3.J), "checks": checks})
    else:
        _emit(args, data)
    return OK if all(checks.values()) else FALSE


def cmd_oracle(args):
    try:
        S = semigroup_from_json(args.semigroup)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"bad semigroup {args.semigroup}: {e}")
    u, v = _term(args.u), _term(args.v)
    try:
        verdict = satisfies(S, u, v, empty_is_identity=args.monoid)
    except KdrhError as e:
        raise UsageError(str(e))
    print(json.dumps(verdict) if args.format == "json" else ("true" if verdict else "false"))
    return OK if verdict else FALSE


def cmd_props(args):
    t = _term(args.term)
    op = args.op
    try:
        if op == "lbf":
            value = list(lbf(t).as_strings())
        elif op == "lbfseq":
            value = lbf_seq(t).as_strings()
        elif op == "alpha":
            value = format_ordinal(alpha(t))
        elif op == "extract":
            if len(args.args) != 2:
                raise UsageError("extract needs BETA GAMMA")
            beta, gamma = (parse_ordinal(x) for x in args.args)
            value = render(extract(t, beta, gamma))
        elif op == "abelianize":
            value = dict(sorted(abelianize(t).items()))
        else:
            value = sorted(cum(t))
    except KdrhError as e:
        raise UsageError(str(e))
    if args.format == "plain":
        print(value if isinstance(value, str) else json.dumps(value))
    else:
        print(json.dumps(value))
    return OK


# -------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="kdrh", description="kappa-terms modulo R and DRH")
    p.add_argument("--format", choices=["json", "plain"], default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    # --format and -v are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "plain"], default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    def variety(sp, default=None):
        sp.add_argument("--variety", choices=["R", "DRAb", "DRH"], default=default,
                        type=lambda s: {"r": "R", "drab": "DRAb", "drh": "DRH"}.get(s.lower(), s))
        sp.add_argument("--groups", help="JSON list of finite groups generating H (for DRH)")

    sp = sub.add_parser("eq", parents=[common], help="decide u = v modulo R, DRAb or DRH")
    variety(sp, "R")
    sp.add_argument("--explain", action="store_true")
    sp.add_argument("u")
    sp.add_argument("v")
    sp.set_defaults(func=cmd_eq)

    sp = sub.add_parser("reduce", parents=[common], help="equation system -> word system -> S_uv -> boundary system")
    variety(sp, "R")
    sp.add_argument("system")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("solve", parents=[common], help="run the induction on boundary systems")
    variety(sp)
    sp.add_argument("boundary", nargs="+")
    sp.add_argument("--out", default=".")
    sp.add_argument("--budget", type=int, default=None, help="forward step budget (default KDRH_BUDGET or 10^4)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--cuts", dest="n_rule", choices=["least", "card"], default="least",
                    help="number of cuts in Case 5")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("model-verify", parents=[common], help="check a model against a boundary system")
    variety(sp)
    sp.add_argument("boundary")
    sp.add_argument("--model", help="model JSON (default: the model stored with the system)")
    sp.set_defaults(func=cmd_model_verify)

    sp = sub.add_parser("scheme-refine", parents=[common], help="common refinement with the scheme of a boundary model")
    variety(sp)
    sp.add_argument("boundary")
    sp.add_argument("scheme", help='scheme JSON or {"cuts": [...]}')
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scheme_refine)

    sp = sub.add_parser("oracle", parents=[common], help="brute-force check in a finite semigroup")
    osub = sp.add_subparsers(dest="action", required=True)
    sc = osub.add_parser("check", parents=[common])
    sc.add_argument("semigroup", help="JSON file or catalog name")
    sc.add_argument("u")
    sc.add_argument("v")
    sc.add_argument("--monoid", action="store_true", help="read the empty term as the identity")
    sc.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("props", parents=[common], help="factorization data of a term")
    sp.add_argument("op", choices=["lbf", "lbfseq", "alpha", "extract", "abelianize", "cum"])
    sp.add_argument("term")
    sp.add_argument("args", nargs="*")
    sp.set_defaults(func=cmd_props)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"kdrh: {e}", file=sys.stderr)
        return USAGE
    except BudgetExceeded as e:
        print(f"kdrh: budget exceeded ({e})", file=sys.stderr)
        return BUDGET
    except VerificationFailed as e:
        print(f"kdrh: verification failed: {e}", file=sys.stderr)
        return FALSE
    except KdrhError as e:
        print(f"kdrh: {e}", file=sys.stderr)
        return USAGE
    except ValueError as e:
        # KDRH_BUDGET and similar configuration problems
        print(f"kdrh: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
