"""
Command-line front end.

    nlab gen champernowne b=2 -N 16 -o champ.txt
    nlab gen iid uniform b=2 seed=42 -N 1000000 -o - | nlab select - ap:k=1,l=2 -o - | nlab analyze - -k 3
    nlab analyze thm3.txt --block 2 -k 1
    nlab verify thm3 --base 2 -K 2 --sel periodic:m=2,r=1

Exit codes: 0 success / recipe passed, 1 recipe failed, 2 usage error or
recipe hypothesis not met.

``--config FILE`` reads an INI file whose ``[gen]``, ``[select]``,
``[analyze]`` and ``[verify]`` sections override option defaults, e.g.::

    [analyze]
    k = 4
    tau = 0.01
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__, recipes, streamfile
from ._accel import backend
from .analyze import default_schedule, normality_verdict, report_to_dict
from .errors import NlabError, SpecSyntaxError
from .generators import build, output_base, parse_spec
from .selectors import parse_selection, select
from .shiftspace import Alphabet, BernoulliMeasure, DigitSequence, block_recode, theorem3_measure

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TABLE_ROWS = 32


def _limited(seq: DigitSequence, n: int):
    left = n
    while left > 0:
        chunk = seq.take(min(left, 1 << 16))
        if not len(chunk):
            return
        left -= len(chunk)
        yield chunk


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).replace("|", ",").split(",") if x.strip()]


def _run_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config") and not k.startswith("_")}
    cfg["nlab_version"] = __version__
    return cfg


def _write_json(path: str, payload: dict) -> None:
    data = (json.dumps(payload, indent=2) + "\n").encode()
    with streamfile.open_output(path) as fh:
        fh.write(data)


# --- gen ------------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = parse_spec(" ".join(args.spec))
    for key, value in (("seed", args.seed), ("b", args.base), ("K", args.K)):
        if value is not None:
            spec.params[key] = value
    spec = parse_spec(str(spec))
    seq = build(spec)
    header = streamfile.StreamHeader(output_base(spec), args.N, spec=str(spec))
    with streamfile.open_output(args.out) as fh:
        streamfile.write_stream(fh, header, _limited(seq, args.N))
    return EXIT_OK


# --- select ---------------------------------------------------------------------


def cmd_select(args) -> int:
    sel = parse_selection(args.selection)
    header, seq = streamfile.load(args.input)
    n_out = None if header.n is None else sel.count_upto(header.n)
    out_header = streamfile.StreamHeader(header.base, n_out, sel=str(sel), spec=None if header.sel else header.spec)
    picked = select(seq, sel)
    with streamfile.open_output(args.out) as fh:
        written = streamfile.write_stream(fh, out_header, picked.chunks())
    if sel.last is not None:
        missing = sel.count_upto(sel.last) - written
        if missing > 0:
            print(f"warning: {missing} selected indices lie past the end of the input", file=sys.stderr)
    return EXIT_OK


# --- analyze --------------------------------------------------------------------


def parse_measure(text: str, base: int, width: int = 1) -> BernoulliMeasure:
    """``uniform``, ``thm3`` or ``weights:<w_0>|<w_1>|...`` over the (block) alphabet."""
    if text == "uniform":
        return BernoulliMeasure.uniform(base, width)
    if text == "thm3":
        return theorem3_measure(base, width)
    if text.startswith("weights:"):
        raw = text.split(":", 1)[1].split("|")
        try:
            ws = [Fraction(w) if "." not in w and "e" not in w.lower() else float(w) for w in raw]
        except ValueError:
            raise SpecSyntaxError("cannot read weight", text, len("weights:")) from None
        return BernoulliMeasure(Alphabet(base, width), tuple(ws))
    raise SpecSyntaxError("measure must be uniform, thm3 or weights:...", text, 0)


def _table(report, verdict) -> str:
    lines = [f"{'len':>3}  {'pattern':<16} {'count':>10} {'empirical':>10} {'expected':>10} {'deviation':>10}"]
    rows = list(report.rows())
    if len(rows) > TABLE_ROWS:
        rows = sorted(rows, key=lambda r: -abs(r.deviation))[:TABLE_ROWS]
        lines[0] += f"   (top {TABLE_ROWS} by |deviation|)"
    for r in rows:
        pat = ",".join(map(str, r.pattern))
        lines.append(f"{r.length:>3}  {pat:<16} {r.count:>10} {r.empirical:>10.6f} {r.expected:>10.6f} {r.deviation:>+10.6f}")
    lines.append("")
    lines.append("N            discrepancy")
    for n, d in verdict.curve.checkpoints:
        lines.append(f"{n:<12} {d:.6f}")
    lines.append("")
    lines.append(f"summary: N={report.horizon} discrepancy={report.discrepancy():.6f} verdict={verdict} (heuristic)")
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    header, seq = streamfile.load(args.input)
    width = args.block or 1
    if width > 1:
        seq = block_recode(seq, width)
    measure = parse_measure(args.measure, header.base, width)
    if args.N is None:
        if seq.known_length is None:
            parts = list(seq.chunks())
            seq = DigitSequence.from_digits(np.concatenate(parts) if parts else [], seq.alphabet)
        N = seq.known_length - args.k + 1
        if N < 1:
            raise NlabError(f"stream too short for k={args.k}")
    else:
        N = args.N
    schedule = _ints(args.schedule) if args.schedule else default_schedule(N)
    schedule = [n for n in schedule if n < N] + [N]
    verdict = normality_verdict(seq, measure, args.k, schedule, args.tau)
    report = verdict.report
    report.alignment = "unaligned" if width == 1 else f"block K={width}"

    payload = {
        "config": {"command": "analyze", **_run_config(args), "input_header": vars(header)},
        "report": report_to_dict(report),
        "curve": [{"N": n, "discrepancy": d} for n, d in verdict.curve.checkpoints],
        "verdict": {
            "label": verdict.label,
            "heuristic": True,
            "witness": None if verdict.witness is None else list(verdict.witness.pattern),
            "deviation": verdict.deviation,
        },
    }
    table = _table(report, verdict)
    if args.out == "-":
        print(table, file=sys.stderr)
        _write_json("-", payload)
    else:
        print(table)
        if args.out:
            _write_json(args.out, payload)
    return EXIT_OK


# --- verify ---------------------------------------------------------------------


def _recipe_kwargs(args) -> dict:
    kw = {"b": args.base, "N": args.N}
    if args.tau is not None:
        kw["tau"] = args.tau
    if args.recipe == "thm1":
        if args.inner:
            kw["inner"] = args.inner
        if args.steps:
            kw["steps"] = tuple(_ints(args.steps))
        if args.offsets:
            kw["offsets"] = tuple(_ints(args.offsets))
    elif args.recipe == "prop2":
        kw["seed"] = args.seed if args.seed is not None else 0
        if args.sel:
            kw["sel"] = args.sel[0]
    elif args.recipe == "thm2":
        kw["seed"] = args.seed if args.seed is not None else 0
        if args.t:
            kw["ts"] = tuple(_ints(args.t))
    elif args.recipe == "thm3":
        kw["K"] = args.K or 2
        kw["L"] = args.L or 1
        kw["seed"] = args.seed if args.seed is not None else 7
        if args.sel:
            kw["sels"] = tuple(args.sel)
    return kw


def cmd_verify(args) -> int:
    result = recipes.RECIPES[args.recipe](**_recipe_kwargs(args))
    for c in result.checks:
        mark = "PASS" if c.passed else "FAIL"
        extra = "" if c.tolerance is None else f" (+/- {c.tolerance})"
        print(f"[{mark}] {c.name}: measured={c.measured} target={c.target}{extra}")
    status = result.to_dict()["status"]
    if result.note:
        print(f"note: {result.note}")
    print(f"{args.recipe}: {status}")
    if args.out:
        payload = result.to_dict()
        payload["config"] = {"command": "verify", **_run_config(args), "recipe_kwargs": result.config}
        _write_json(args.out, payload)
    return result.exit_code


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlab", description="Digit-stream normality lab.")
    p.add_argument("--version", action="version", version=f"nlab {__version__} ({backend()} kernels)")
    p.add_argument("--config", help="INI file overriding option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write the first N digits of a generator")
    g.add_argument("spec", nargs="+", help="generator spec, e.g. 'iid uniform b=2 seed=42'")
    g.add_argument("-N", type=int, required=True)
    g.add_argument("-o", "--out", default="-")
    g.add_argument("--seed", type=int)
    g.add_argument("--base", type=int)
    g.add_argument("-K", type=int)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("select", help="keep the digits at selected positions")
    s.add_argument("input")
    s.add_argument("selection", help="ap:k=..,l=.. | periodic:m=..,r=.. | evper:pre=..;m=..,r=.. | explicit:n=..")
    s.add_argument("-o", "--out", default="-")
    s.set_defaults(func=cmd_select)

    a = sub.add_parser("analyze", help="pattern frequencies, discrepancy curve and a heuristic verdict")
    a.add_argument("input")
    a.add_argument("-k", type=int, default=3, help="max pattern length")
    a.add_argument("--measure", default="uniform")
    a.add_argument("--block", type=int, help="analyze width-K block digits")
    a.add_argument("-N", type=int, help="horizon (default: whole stream)")
    a.add_argument("--schedule", help="comma-separated checkpoint horizons")
    a.add_argument("--tau", type=float)
    a.add_argument("-o", "--out", help="machine-readable JSON report ('-' for stdout)")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="run an end-to-end recipe")
    v.add_argument("recipe", choices=sorted(recipes.RECIPES))
    v.add_argument("--base", type=int, default=2)
    v.add_argument("-K", type=int)
    v.add_argument("-L", type=int)
    v.add_argument("-N", type=int, default=1_000_000)
    v.add_argument("--seed", type=int)
    v.add_argument("--tau", type=float)
    v.add_argument("--sel", action="append", help="selection spec; repeatable")
    v.add_argument("--t", help="thm2 family periods, comma-separated")
    v.add_argument("--steps", help="thm1 AP steps")
    v.add_argument("--offsets", help="thm1 AP offsets")
    v.add_argument("--inner", help="thm1 inner generator spec")
    v.add_argument("-o", "--out")
    v.set_defaults(func=cmd_verify)
    return p


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise NlabError(f"cannot read config file {path}")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subs.choices.items():
        if not cp.has_section(name):
            continue
        actions = {a.dest: a for a in sp._actions}
        updates = {}
        for key, raw in cp.items(name):
            key = key.replace("-", "_")
            if key not in actions:
                raise NlabError(f"[{name}] has no option {key!r}")
            typ = actions[key].type
            updates[key] = typ(raw) if typ else raw
            actions[key].required = False
        sp.set_defaults(**updates)


def main(argv=None) -> int:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(parser, known.config)
        args = parser.parse_args(argv)
        return args.func(args)
    except (NlabError, ValueError) as exc:
        print(f"nlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
