"""phical command line.

Exit codes: 0 every requested check passed, 1 a check failed, 2 usage or
parse error, 3 a computation ran out of its window or precision.
"""

from __future__ import annotations

import argparse
import inspect
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .associates import associate_from_p, injectivity_probe, inverse_flow_check, verify_associate
from .errors import (
    CacheFormatError,
    ExpansionDirectionError,
    NotAnAssociateBase,
    ParseError,
    PhicalError,
    PolicyError,
    PrecisionExhausted,
    VariableMismatch,
    WindowEscape,
)
from .exprs import parse_expr, to_rational
from .fockrep import (
    GEN_NAMES,
    MAGIC,
    BgModule,
    SystemKind,
    TruncPolicy,
    build_module,
    expansion_coeffs,
    parse_word,
    read_cache,
    word_text,
)
from .report import SCHEMA, CheckReport, merge
from .series import LaurentSeries, iota_expand

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_WINDOW = 0, 1, 2, 3


class UsageError(Exception):
    pass


BAD_INPUT = (UsageError, ParseError, CacheFormatError, PolicyError, VariableMismatch,
             ExpansionDirectionError, NotAnAssociateBase, argparse.ArgumentTypeError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- argument helpers


def _laurent_x(text: str) -> LaurentSeries:
    f = to_rational(parse_expr(text))
    extra = set(f.variables()) - {"x"}
    if extra:
        raise UsageError(f"p must be a Laurent polynomial in x, got variables {sorted(extra)}")
    if not f.den.is_monomial():
        raise UsageError(f"p = {text} is not a Laurent polynomial")
    return (f.num * f.den ** -1).to_laurent("x")


def _q_arg(text: str) -> str:
    if text == "symbolic":
        return text
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"--q takes 'symbolic' or a rational, not {text!r}")
    if v == 0:
        raise argparse.ArgumentTypeError("--q must be nonzero")
    return str(v)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _gen(text: str) -> str:
    try:
        return GEN_NAMES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown generator {text!r} (use beta or gamma)")


def _cache_path(arg: Optional[str], args) -> Path:
    if arg:
        return Path(arg)
    base = Path(os.environ.get("PHICAL_CACHE_DIR") or Path.home() / ".cache" / "phical")
    q = args.q.replace("/", "_")
    return base / f"{args.system}-q{q}-d{args.depth}-f{args.floor}.qbg"


def _module(args) -> BgModule:
    return build_module(SystemKind.make(args.system, args.q), TruncPolicy(args.depth, args.floor))


# -- subcommands


def cmd_associate(args):
    a = associate_from_p(_laurent_x(args.p), args.order)
    rep = verify_associate(a, args.order)
    rows = [str(a.row(n)) for n in range(args.order + 1)]
    payload = {"command": "associate", "p": str(a.generator_p), "order": args.order,
               "rows": rows, "pass": rep.passed, "violations": rep.violations}
    text = "\n".join(f"f_{n} = {r}" for n, r in enumerate(rows))
    return rep.passed, payload, text + f"\nassociate axioms: {_word(rep.passed)}"


def cmd_verify(args):
    a = associate_from_p(_laurent_x(args.p), args.order)
    parts = [verify_associate(a, args.order), inverse_flow_check(a, args.order)]
    if args.injective:
        parts.append(injectivity_probe(args.injective, a, sorted({2, 4, args.order})))
    rep = merge("verify", parts)
    return rep.passed, {"command": "verify", **rep.to_json()}, _report_text(rep)


def cmd_iota(args):
    f = to_rational(parse_expr(args.f))
    if args.q != "symbolic":
        f = f.substitute_scalar(Fraction(args.q))
    table = iota_expand(f, args.outer, args.inner, args.order)
    cells = [[list(e), str(c)] for e, c in sorted(table.coeffs.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
    payload = {"command": "iota", "f": args.f, "outer": args.outer, "inner": args.inner,
               "order": args.order, "window": [list(w) for w in table.window], "coefficients": cells}
    text = "\n".join(f"{args.outer}^{e[0]} {args.inner}^{e[1]}: {c}" for e, c in cells)
    return True, payload, text


def cmd_coeffs(args):
    kind = SystemKind.make(args.system, args.q)
    c = expansion_coeffs(kind, args.order)
    payload = {"command": "coeffs", "system": args.system, "q": kind.q_text(), **c.to_json()}
    lines = [f"{k}: {', '.join(v)}" for k, v in c.to_json().items() if k != "order"]
    return True, payload, "\n".join(lines)


def cmd_qbg_build(args):
    m = _module(args).build_table()
    path = _cache_path(args.cache, args)
    path.parent.mkdir(parents=True, exist_ok=True)
    m.save(path)
    payload = {"command": "qbg-build", "cache": str(path), "basis": len(m.basis()),
               "actions": len(m.action_table())}
    return True, payload, f"wrote {path} ({payload['basis']} states, {payload['actions']} actions)"


def _load(path: str) -> BgModule:
    try:
        return BgModule.load(path)
    except OSError as e:
        raise UsageError(f"cannot read cache {path}: {e.strerror}")


def cmd_qbg_verify(args):
    m = _load(args.cache)
    rep = m.verify_relations(window=args.window)
    return rep.passed, {"command": "qbg-verify", "cache": args.cache, **rep.to_json()}, _report_text(rep)


def cmd_cache_info(args):
    try:
        data = Path(args.cache).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read cache {args.cache}: {e.strerror}")
    header, payload = read_cache(data)
    info = {"command": "cache-info", "cache": args.cache, "version": data[len(MAGIC)],
            "bytes": len(data), "header": header, "basis": len(payload["basis"]),
            "actions": len(payload["actions"])}
    text = "\n".join(f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in info.items() if k != "command")
    return True, info, text


def _y(args):
    from .eops import GeneratorField, Multiplier, YPhi

    m = _module(args)
    a, b = GeneratorField(m, args.a), GeneratorField(m, args.b)
    mult = Multiplier.parse(args.multiplier) if args.multiplier else None
    phi = associate_from_p(_laurent_x(args.p), args.order + 8) if args.p else None
    return m, YPhi(a, b, phi, mult, order=args.order, window=args.window, kmax=args.kmax)


def _states(m: BgModule, texts: Optional[List[str]], default_all: bool):
    if not texts:
        return list(m.basis()) if default_all else [()]
    basis = set(m.basis())
    out = []
    for t in texts:
        try:
            w = parse_word(t)
        except (ValueError, IndexError):
            raise UsageError(f"cannot parse state {t!r} (words look like b-1*g-2, vacuum is 1)")
        if w not in basis:
            raise UsageError(f"state {t} is not a basis word of this module")
        out.append(w)
    return out


def cmd_yphi(args):
    m, y = _y(args)
    states = _states(m, args.state, False)
    rows = {word_text(w): y.to_json({w: 1}, args.width)["rows"] for w in states}
    payload = {"command": "yphi", "a": y.a.label, "b": y.b.label, "order": args.order, "states": rows}
    lines = []
    for w, r in rows.items():
        lines.append(f"on {w}:")
        for s, cells in r.items():
            lines.append(f"  z^{s}: " + "  ".join(f"[x^{e}] {v}" for e, v in cells.items()))
    return True, payload, "\n".join(lines)


def cmd_modes(args):
    from .eops import vec_text

    m, y = _y(args)
    states = _states(m, args.state, True)
    out = {}
    for n in args.n:
        f = y.mode(n)
        out[str(n)] = {word_text(w): {str(e): vec_text(v) for e, v in f.expansion({w: 1}, args.width).items()}
                       for w in states}
    payload = {"command": "modes", "a": y.a.label, "b": y.b.label, "modes": out}
    lines = []
    for n, images in out.items():
        lines.append(f"mode {n}:")
        for w, cells in images.items():
            shown = "  ".join(f"[x^{e}] {v}" for e, v in cells.items()) or "0"
            lines.append(f"  on {w}: {shown}")
    return True, payload, "\n".join(lines)


def _run_suite(item):
    from .suites import SUITES

    name, opts = item
    fn = SUITES[name]
    params = inspect.signature(fn).parameters
    return fn(**{k: v for k, v in opts.items() if k in params and v is not None})


def cmd_check_suite(args):
    from .suites import SUITES

    names = list(SUITES) if args.name == "all" else [args.name]
    opts = {"order": args.order, "q": None if args.q == "symbolic" else args.q, "window": args.window}
    items = [(n, opts) for n in names]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(_run_suite, items))
    else:
        reports = [_run_suite(i) for i in items]
    rep = reports[0] if len(reports) == 1 else merge("all", reports)
    payload = {"command": "check-suite", **rep.to_json()}
    text = "\n".join(f"{r.name}: {_word(r.passed)}" for r in reports)
    if not rep.passed:
        text += "\n" + _report_text(rep, head=False)
    return rep.passed, payload, text


# -- output


def _word(ok: bool) -> str:
    return "pass" if ok else "FAIL"


def _report_text(rep: CheckReport, head: bool = True) -> str:
    lines = [f"{rep.name}: {_word(rep.passed)}"] if head else []
    for part, ok in rep.meta.get("parts", {}).items():
        lines.append(f"  {part}: {_word(ok)}")
    for v in rep.violations[:10]:
        lines.append("  " + json.dumps(v, sort_keys=True, default=str))
    if len(rep.violations) > 10:
        lines.append(f"  ... {len(rep.violations) - 10} more")
    return "\n".join(lines)


def _emit(payload: dict, as_json: bool, text: str, stream=None):
    stream = stream or sys.stdout
    if as_json:
        body = {"schema": SCHEMA, **payload}
        stream.write(json.dumps(body, sort_keys=True, default=str, ensure_ascii=False) + "\n")
    else:
        stream.write(text + "\n")


# -- parser


def _system_flags(p, floor=-3):
    p.add_argument("--system", choices=["trig", "rat"], default="trig")
    p.add_argument("--q", type=_q_arg, default="symbolic", help="symbolic, or a nonzero rational")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--floor", type=int, default=floor)


def _field_flags(p):
    _system_flags(p)
    p.add_argument("--a", type=_gen, default="b")
    p.add_argument("--b", type=_gen, default="g")
    p.add_argument("--p", help="generator p(x) of the associate; default x (φ = x e^z)")
    p.add_argument("--multiplier", help="fixed multiplier in x1, x2, e.g. 'x1 - x2'")
    p.add_argument("--order", type=_positive, default=3, help="z-rows computed")
    p.add_argument("--window", type=_positive, default=4)
    p.add_argument("--kmax", type=int, default=6, help="largest (x1-x2)^k tried")
    p.add_argument("--width", type=_positive, default=4, help="x-degrees shown per row")
    p.add_argument("--state", action="append", help="basis word, e.g. b-1*g-1; repeatable")


def build_parser() -> argparse.ArgumentParser:
    from .suites import SUITES

    parser = _Parser(prog="phical", description=__doc__.splitlines()[0])
    parser.add_argument("--json", action="store_true", help="print a JSON report")
    common = _Parser(add_help=False)
    # accepted after the subcommand too; SUPPRESS keeps a leading --json intact
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub_add = sub.add_parser
    sub.add_parser = lambda name, **kw: sub_add(name, parents=[common], **kw)

    p = sub.add_parser("associate", help="rows of φ = e^{z p(x) d/dx} x")
    p.add_argument("--p", required=True)
    p.add_argument("--order", type=_positive, default=6)
    p.set_defaults(run=cmd_associate)

    p = sub.add_parser("verify", help="associate axioms, inverse flow and an optional injectivity probe")
    p.add_argument("--p", required=True)
    p.add_argument("--order", type=_positive, default=6)
    p.add_argument("--injective", metavar="F", help="rational function of x1, x to probe")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("iota", help="expand a rational function in nonnegative powers of --inner")
    p.add_argument("--f", required=True)
    p.add_argument("--outer", default="x1")
    p.add_argument("--inner", default="x2")
    p.add_argument("--order", type=_positive, default=6)
    p.add_argument("--q", type=_q_arg, default="symbolic")
    p.set_defaults(run=cmd_iota)

    p = sub.add_parser("coeffs", help="λ, λ', μ, μ' expansion coefficients")
    p.add_argument("--system", choices=["trig", "rat"], default="trig")
    p.add_argument("--q", type=_q_arg, default="symbolic")
    p.add_argument("--order", type=_positive, default=5)
    p.set_defaults(run=cmd_coeffs)

    p = sub.add_parser("qbg-build", help="build a truncated βγ vacuum module and write its cache")
    _system_flags(p)
    p.add_argument("--cache", help="output file; default under $PHICAL_CACHE_DIR")
    p.set_defaults(run=cmd_qbg_build)

    p = sub.add_parser("qbg-verify", help="reload a module cache and check the exchange relations")
    p.add_argument("--cache", required=True)
    p.add_argument("--window", type=_positive, default=3)
    p.set_defaults(run=cmd_qbg_verify)

    p = sub.add_parser("cache-info", help="describe a module cache file")
    p.add_argument("--cache", required=True)
    p.set_defaults(run=cmd_cache_info)

    p = sub.add_parser("yphi", help="rows of Y_E^φ(a, z)b applied to states")
    _field_flags(p)
    p.set_defaults(run=cmd_yphi)

    p = sub.add_parser("modes", help="the fields a_n b applied to states")
    _field_flags(p)
    p.add_argument("--n", type=int, action="append", required=True)
    p.set_defaults(run=cmd_modes)

    p = sub.add_parser("check-suite", help="run a named identity suite")
    p.add_argument("--name", required=True, choices=sorted(SUITES) + ["all"])
    p.add_argument("--order", type=_positive)
    p.add_argument("--q", type=_q_arg, default="symbolic",
                   help="value of q for the module suites (default -1 there)")
    p.add_argument("--window", type=_positive)
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(run=cmd_check_suite)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    as_json = "--json" in (argv if argv is not None else sys.argv[1:])
    try:
        args = parser.parse_args(argv)
        ok, payload, text = args.run(args)
    except BAD_INPUT as e:
        return _fail(EXIT_USAGE, "usage", e, as_json)
    except (WindowEscape, PrecisionExhausted) as e:
        return _fail(EXIT_WINDOW, "window", e, as_json)
    except PhicalError as e:
        return _fail(EXIT_FAIL, "check", e, as_json)
    except ValueError as e:
        return _fail(EXIT_USAGE, "usage", e, as_json)
    _emit(payload, args.json, text)
    return EXIT_OK if ok else EXIT_FAIL


def _fail(code: int, kind: str, err: Exception, as_json: bool) -> int:
    msg = str(err)
    if as_json:
        _emit({"error": kind, "message": msg, "exit": code}, True, "")
    print(f"phical: {kind} error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
