"""Command-line interface.

Exit codes: 0 success, 1 the query was answered negatively, 2 usage or
parse error, 3 capacity exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

import numpy as np

from . import cyclo as cy
from . import multiquad as mq
from . import padlocal as pl
from . import soslab as sl
from . import verify as vf
from .numkernel import is_prime
from .parser import ParseError, RingSpec, SemanticError, parse_element, parse_ring

log = logging.getLogger("pythagoras")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# helpers


def adapter_for(spec: RingSpec) -> sl.RingAdapter:
    if spec.kind == "int":
        return sl.integer_ring()
    if spec.kind == "mq":
        return sl.tower_ring(spec.primes)
    if spec.kind == "quad":
        return sl.quadratic_order(spec.d)
    return sl.CycloAdapter(spec.cyclo_ring())


def _json_number(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def payload(command, ring, inp, result, certificate=None, stats=None, anchors=()) -> dict:
    out = {
        "command": command,
        "ring": str(ring) if ring is not None else None,
        "input": inp,
        "result": result,
        "stats": stats or {"nodes": 0, "candidates": 0, "ms": None},
        "anchors": list(anchors),
    }
    if certificate is not None:
        out["certificate"] = certificate
    return out


def sos_payload(ring: sl.RingAdapter, target, res: sl.SosResult, timing: bool = False) -> dict:
    result = {"status": res.status, "length": res.length, "cap": res.cap}
    cert = None
    if res.found:
        cert = [{"root": str(r), "square": str(r * r)} for r in res.certificate]
    stats = {"nodes": res.nodes, "candidates": res.candidates, "ms": round(res.ms, 3) if timing else None}
    return payload(
        "sos",
        ring.name,
        str(target),
        result,
        cert,
        stats,
        ["sums of squares are totally positive", "C0(a_i^2) <= C0(target) bounds every square"],
    )


def _element(args):
    spec = parse_ring(args.ring)
    return spec, parse_element(args.expr, spec)


# --------------------------------------------------------------------------
# commands; each returns (payload, human text, exit code)


def cmd_eval(args):
    spec, x = _element(args)
    return payload("eval", spec, args.expr, str(x)), str(x), EXIT_OK


def cmd_trace(args):
    spec, x = _element(args)
    if spec.kind == "cyc":
        val = Fraction(x.c0)
        label = "C0"
    else:
        val = mq.normalized_trace(x)
        label = "normalized trace"
    return (
        payload("trace", spec, args.expr, {"value": str(val), "kind": label}, anchors=["normalized trace is the rational part"]),
        f"{label}: {val}",
        EXIT_OK,
    )


def cmd_tp(args):
    spec, x = _element(args)
    ok = cy.cyc_is_totally_positive(x) if spec.kind == "cyc" else mq.is_totally_positive(x)
    return (
        payload("tp", spec, args.expr, ok, anchors=["totally positive: positive under every real embedding"]),
        f"totally positive: {ok}",
        EXIT_OK if ok else EXIT_NEGATIVE,
    )


def cmd_coords(args):
    spec, x = _element(args)
    if spec.kind == "cyc":
        coords = x.coeff_list()
        basis = ["1"] + [f"w({k})" for k in range(1, len(coords))]
    else:
        ad = adapter_for(spec)
        coords = [int(v) for v in ad.coords(x)]
        basis = [str(b) for b in ad.basis]
    text = "\n".join(f"{c:>6}  {b}" for c, b in zip(coords, basis) if c) or "0"
    return payload("coords", spec, args.expr, {"coords": coords, "basis": basis}), text, EXIT_OK


def cmd_minpoly(args):
    spec, x = _element(args)
    if spec.kind == "cyc":
        poly = [Fraction(c) for c in cy.cyc_min_poly(x)]
    else:
        poly = mq.min_poly(x)
    text = mq.format_poly(poly)
    integral = all(c.denominator == 1 for c in poly)
    return (
        payload("minpoly", spec, args.expr, {"poly": text, "coeffs": [str(c) for c in poly], "integral": integral}),
        f"{text}\nintegral: {integral}",
        EXIT_OK,
    )


def cmd_sos(args):
    spec, x = _element(args)
    ring = adapter_for(spec)
    log.debug("sos over %s: cap %d, workers %d, limit %d", ring.name, args.cap, args.workers, args.limit)
    res = sl.min_squares(sl.SosQuery(ring, x, args.cap), workers=args.workers, limit=args.limit)
    data = sos_payload(ring, x, res, timing=args.timing)
    if res.found:
        lines = [f"minimal length: {res.length}"] + [f"  ({r})^2 = {r * r}" for r in res.certificate]
    else:
        lines = [f"not a sum of at most {args.cap} squares"]
    lines.append(f"nodes: {res.nodes}, candidates: {res.candidates}" + (f", ms: {res.ms:.1f}" if args.timing else ""))
    return data, "\n".join(lines), EXIT_OK if res.found else EXIT_NEGATIVE


def cmd_profile(args):
    spec = parse_ring(args.ring)
    ring = adapter_for(spec)
    bound = Fraction(args.bound)
    prof = sl.pythagoras_profile(ring, bound, args.cap, limit=args.limit)
    rows = [{"element": str(e), "length": L} for e, L in prof.rows]
    result = {"rows": rows, "max_length": prof.max_length, "argmax": [str(e) for e in prof.argmax]}
    lines = [f"{L}  {e}" for e, L in prof.rows]
    lines.append(f"max length {prof.max_length} at {', '.join(map(str, prof.argmax)) or '-'}")
    stats = {"nodes": len(rows), "candidates": prof.candidates, "ms": None}
    return (
        payload("profile", spec, {"bound": str(bound), "cap": args.cap}, result, stats=stats,
                anchors=["Pythagoras number lower bound on a finite box"]),
        "\n".join(lines),
        EXIT_OK,
    )


def cmd_witness(args):
    kind = args.kind
    if kind == "s":
        primes = tuple(int(v) for v in args.primes.split(","))
        tower = mq.PrimeTower(primes)
        n = args.n if args.n is not None else tower.m
        s = mq.witness_s(tower, n)
        res = {"element": str(s), "normalized_trace": str(mq.normalized_trace(s))}
        return payload("witness s", RingSpec("mq", primes=primes), {"n": n}, res,
                       anchors=["s_n = sum of ((1 + sqrt(p_i))/2)^2"]), f"s_{n} = {s}", EXIT_OK
    if kind == "t":
        if args.p is None or args.n is None or args.m is None:
            raise UsageError("witness t needs --p, --n and --m")
        R = cy.CycloRing(args.p, args.n)
        t = cy.witness_t(R, args.m)
        coeffs = {str(k): v for k, v in t.nonzero().items()}
        return payload("witness t", str(R), {"m": args.m}, {"element": str(t), "coeffs": coeffs},
                       anchors=["C0(t_m) = 2(m-2)", "C_{2p^k}(t_m) = 1"]), f"t_{args.m} = {t}", EXIT_OK
    if kind == "primes":
        seq = mq.greedy_prime_sequence(args.start, args.count)
        bounds = [mq.growth_bound(seq[: i + 1]) for i in range(len(seq) - 1)]
        lines = [", ".join(map(str, seq))] + [f"{seq[i + 1]} > {b}" for i, b in enumerate(bounds)]
        return payload("witness primes", None, {"start": args.start, "count": args.count},
                       {"primes": seq, "bounds": bounds}, anchors=["p_{n+1} > 2 + 2 sum (1 + p_i)"]), "\n".join(lines), EXIT_OK
    if kind == "trace3":
        if len(args.values) != 3:
            raise UsageError("witness trace3 needs three primes")
        rep = mq.three_prime_trace_check(*args.values)
        d = rep.as_dict()
        lines = [f"{k}: {v}" for k, v in d.items()]
        return payload("witness trace3", None, list(args.values), d,
                       anchors=["trace comparison for a three-prime tower"]), "\n".join(lines), (
            EXIT_OK if rep.inequality_holds else EXIT_NEGATIVE
        )
    raise UsageError(f"unknown witness kind {kind}")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        raise UsageError(f"not a rational number: {text!r}") from None


def cmd_padic(args):
    kind = args.kind
    v = args.values
    if kind == "zerosum4":
        if v:
            if len(v) != 7:
                raise UsageError("zerosum4 takes exactly 7 residues (or none for the exhaustive check)")
            sub = pl.four_subset_zero_mod4(v)
            return payload("padic zerosum4", None, v, {"subset": list(sub) if sub else None}), f"indices: {sub}", (
                EXIT_OK if sub else EXIT_NEGATIVE
            )
        ok, detail = vf.check_zero_sum_subsets()
        return payload("padic zerosum4", None, [], {"ok": ok, "detail": detail}), detail, EXIT_OK if ok else EXIT_NEGATIVE
    if args.p is None:
        raise UsageError(f"padic {kind} needs --p")
    p = args.p
    if not is_prime(p):
        raise UsageError(f"{p} is not prime")
    if kind == "sqrt":
        x = _rational(v[0])
        approx = pl.PadicApprox.from_rational(x, p, args.prec)
        if approx.is_zero:
            raise UsageError("sqrt of zero")
        root = pl.padic_sqrt(approx)
        if root is None:
            return payload("padic sqrt", None, {"x": str(x), "p": p}, None), "not a square", EXIT_NEGATIVE
        res = {"valuation": root.valuation, "unit_residue": root.unit_residue, "precision": root.precision}
        text = f"{p}^{root.valuation} * ({root.unit_residue} + O({p}^{root.precision}))"
        return payload("padic sqrt", None, {"x": str(x), "p": p}, res), text, EXIT_OK
    if kind == "issquare":
        x = _rational(v[0])
        ok = pl.is_square_local(x, p)
        return payload("padic issquare", None, {"x": str(x), "p": p}, ok), f"square: {ok}", EXIT_OK if ok else EXIT_NEGATIVE
    if kind == "sumk":
        x = _rational(v[0])
        ok = pl.sum_k_squares_local(x, args.k, p)
        return (
            payload("padic sumk", None, {"x": str(x), "k": args.k, "p": p}, ok),
            f"sum of {args.k} squares in Q_{p}: {ok}",
            EXIT_OK if ok else EXIT_NEGATIVE,
        )
    if kind == "unitobstruction":
        if len(v) != 3:
            raise UsageError("unitobstruction takes A B D")
        a, b, d = (int(t) for t in v)
        ok = pl.unit_sos_obstruction(a, b, d, p)
        return (
            payload("padic unitobstruction", None, {"a": a, "b": b, "d": d, "p": p}, ok,
                    anchors=["totally positive nonsquare units are not sums of squares"]),
            f"obstruction certified: {ok}",
            EXIT_OK if ok else EXIT_NEGATIVE,
        )
    raise UsageError(f"unknown padic kind {kind}")


def cmd_verify(args):
    results = vf.run_checks(args.filter, seed=args.seed)
    if not results:
        raise UsageError(f"no check matches {args.filter!r}")
    ok = all(r.ok for r in results if r.gating)
    data = [
        {"name": r.name, "ok": r.ok, "gating": r.gating, "detail": r.detail, "topic": r.topic}
        for r in results
    ]
    text = "\n".join(r.line() for r in results)
    text += f"\n{sum(r.ok for r in results)}/{len(results)} checks passed"
    return payload("verify", None, {"filter": args.filter}, data, anchors=[r.topic for r in results]), text, (
        EXIT_OK if ok else EXIT_NEGATIVE
    )


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="JSON report on stdout")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized checks")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="pythagoras", description="Exact sums-of-squares laboratory.", parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def with_element(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("--ring", required=True, help="mq:5,17 | cyc:5^4 | quad:7 | int")
        sp.add_argument("expr", help='element, e.g. "3/2 + 1/2*sqrt(5)" or "w(1)^2 + 3"')
        sp.set_defaults(func=fn)
        return sp

    with_element("eval", cmd_eval, "canonical form of an element")
    with_element("trace", cmd_trace, "normalized trace (towers) or constant coefficient (cyc)")
    with_element("tp", cmd_tp, "total positivity")
    with_element("coords", cmd_coords, "integral coordinates")
    with_element("minpoly", cmd_minpoly, "minimal polynomial")
    sp = with_element("sos", cmd_sos, "minimal number of squares")
    sp.add_argument("--cap", type=int, default=4)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="report elapsed time (makes output run dependent)")
    sp.add_argument("--limit", type=int, default=sl.DEFAULT_LIMIT, help="candidate explosion limit")

    sp = sub.add_parser("profile", parents=[common], help="minimal lengths of all small sums of squares")
    sp.add_argument("--ring", required=True)
    sp.add_argument("--bound", required=True, help="bound on C0 (rational)")
    sp.add_argument("--cap", type=int, default=5)
    sp.add_argument("--limit", type=int, default=sl.DEFAULT_LIMIT, help="candidate explosion limit")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("witness", parents=[common], help="witness elements and sequences")
    sp.add_argument("kind", choices=["s", "t", "primes", "trace3"])
    sp.add_argument("values", nargs="*", type=int)
    sp.add_argument("--primes", default="5,17,53")
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--start", type=int, default=5)
    sp.add_argument("--count", type=int, default=4)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("padic", parents=[common], help="local square tests")
    sp.add_argument("kind", choices=["sqrt", "issquare", "sumk", "unitobstruction", "zerosum4"])
    sp.add_argument("values", nargs="*")
    sp.add_argument("--p", type=int)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--prec", type=int)
    sp.set_defaults(func=cmd_padic)

    sp = sub.add_parser("verify", parents=[common], help="run the built-in check suite")
    sp.add_argument("--filter", help="run only checks whose name contains this text")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    # shared parent options use SUPPRESS so either position works
    for name, value in (("json", False), ("seed", vf.DEFAULT_SEED), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, value)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    if args.command == "padic" and args.kind == "zerosum4":
        args.values = [int(t) for t in args.values]
    try:
        data, text, code = args.func(args)
    except sl.CapacityExceeded as e:
        data, text, code = payload(args.command, None, None, {"error": "capacity_exceeded", "message": str(e)}), f"capacity exceeded: {e}", EXIT_CAPACITY
    except (ParseError, SemanticError, UsageError, mq.NotIntegral, mq.NotInTower, pl.NotAUnit,
            pl.NotTotallyPositive, cy.RingMismatch, ValueError, ArithmeticError) as e:
        msg = str(e)
        if args.json:
            print(json.dumps(payload(args.command, None, None, {"error": type(e).__name__, "message": msg}), sort_keys=True))
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(data, sort_keys=True, default=_json_number))
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
