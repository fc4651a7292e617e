"""Command-line front end: classify, chow, batch and gallery subcommands.

Exit codes for ``classify``: 0 separable, 1 entangled, 2 out of scope,
3 for parse/validation errors.  ``SEP4_TOL_CHOW`` overrides the Chow
tolerance when no explicit flag is given.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chow import (
    builtin_chow,
    eval_chow,
    form_checksum,
    form_to_dict,
    generate_chow_Mx2,
    supported_systems,
)
from .engine import ENTANGLED, OUT_OF_SCOPE, SEPARABLE, classify, report_to_dict
from .errors import Sep4Error
from .gallery import (
    divincenzo_state,
    random_ppt_rank4_33,
    random_separable,
    two_qutrit_ab_state,
)
from .grassmann import SubspaceBasis, pluecker
from .states import (
    DEFAULT_TOLERANCES,
    MultiState,
    ToleranceConfig,
    state_from_dict,
    state_to_dict,
)

_EXIT_BY_VERDICT = {SEPARABLE: 0, ENTANGLED: 1, OUT_OF_SCOPE: 2}
_TOL_FIELDS = [f.name for f in dataclasses.fields(ToleranceConfig)]


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit code 2 reserved for OutOfScope
        raise CliUsageError(message)


def _add_tolerance_flags(parser: argparse.ArgumentParser) -> None:
    for name in _TOL_FIELDS:
        parser.add_argument(
            f"--{name.replace('_', '-')}",
            type=float,
            default=None,
            metavar="X",
            help=f"override {name} (default {getattr(DEFAULT_TOLERANCES, name):g})",
        )


def _tolerances_from_args(args) -> ToleranceConfig:
    values = {}
    for name in _TOL_FIELDS:
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
    if "tol_chow" not in values and os.environ.get("SEP4_TOL_CHOW"):
        values["tol_chow"] = float(os.environ["SEP4_TOL_CHOW"])
    return ToleranceConfig(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sep4", description=__doc__)
    parser.add_argument(
        "--version", action="store_true", help="print version and Chow-table checksums"
    )
    sub = parser.add_subparsers(dest="command")

    p_classify = sub.add_parser("classify", help="classify one state JSON file")
    p_classify.add_argument("--input", required=True, metavar="FILE")
    p_classify.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_classify.add_argument("--seed", type=int, default=0)
    _add_tolerance_flags(p_classify)

    p_chow = sub.add_parser("chow", help="print or evaluate a Chow form")
    p_chow.add_argument(
        "--system", required=True, metavar="SYS", help="2x2, 3x2, 4x2, 2x3, 3x3, 2x2x2 or Mx2:M"
    )
    p_chow.add_argument("--print", action="store_true", dest="print_form")
    p_chow.add_argument("--eval", metavar="BASIS_FILE", dest="eval_file")
    _add_tolerance_flags(p_chow)

    p_batch = sub.add_parser("batch", help="classify every state file in a directory")
    p_batch.add_argument("--input", required=True, metavar="DIR")
    p_batch.add_argument("--out", required=True, metavar="FILE")
    p_batch.add_argument("--parallel", type=int, default=1, metavar="N")
    p_batch.add_argument("--seed", type=int, default=0)
    _add_tolerance_flags(p_batch)

    p_gallery = sub.add_parser("gallery", help="emit a named state as state JSON")
    p_gallery.add_argument(
        "--name",
        required=True,
        choices=["divincenzo", "two-qutrit-ab", "random-separable", "random-ppt-rank4-33"],
    )
    p_gallery.add_argument("--a", default="1", help="complex parameter, e.g. '1+1j'")
    p_gallery.add_argument("--b", default="1", help="complex parameter, e.g. '0.5'")
    p_gallery.add_argument("--dims", default="2,2", help="comma-separated party dimensions")
    p_gallery.add_argument("--terms", type=int, default=2)
    p_gallery.add_argument("--seed", type=int, default=0)
    p_gallery.add_argument("--out", default="-", metavar="FILE")
    return parser


def _load_state(path: str, cfg: ToleranceConfig) -> MultiState:
    with open(path, "r") as fh:
        obj = json.load(fh)
    return state_from_dict(obj, cfg)


def _human_report(report_dict: dict) -> str:
    lines = [
        f"verdict: {report_dict['verdict']}",
        f"rule: {report_dict['rule']}",
        f"rank: {report_dict['rank']}",
        f"dims: {report_dict['dims']}  compressed: {report_dict['compressed_dims']}",
        f"local ranks: {report_dict['local_ranks']}",
    ]
    if report_dict["ppt"] is not None:
        lines.append(f"ppt: {report_dict['ppt']['is_ppt']}")
    if report_dict["chow_abs"] is not None:
        flag = "  (low confidence)" if report_dict["low_confidence"] else ""
        lines.append(f"|F|: {report_dict['chow_abs']:.3e}{flag}")
    if report_dict["length_bounds"] is not None:
        lines.append(f"length bounds: {report_dict['length_bounds']}")
    if report_dict["decomposition"] is not None:
        dec = report_dict["decomposition"]
        lines.append(
            f"decomposition: {dec['length_upper_bound']} terms, residual {dec['residual']:.3e}"
        )
    lines.append("notes: " + "; ".join(report_dict["notes"]))
    return "\n".join(lines)


def _cmd_classify(args) -> int:
    cfg = _tolerances_from_args(args)
    state = _load_state(args.input, cfg)
    report = classify(state, seed=args.seed)
    payload = report_to_dict(report)
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        print(_human_report(payload))
    return _EXIT_BY_VERDICT[report.verdict]


def _parse_system(label: str):
    if label.lower().startswith("mx2:"):
        return generate_chow_Mx2(int(label.split(":", 1)[1]))
    dims = tuple(int(part) for part in label.lower().split("x"))
    return builtin_chow(dims)


def _cmd_chow(args) -> int:
    cfg = _tolerances_from_args(args)
    form = _parse_system(args.system)
    did_something = False
    if args.print_form:
        print(json.dumps(form_to_dict(form), indent=1))
        did_something = True
    if args.eval_file:
        with open(args.eval_file, "r") as fh:
            obj = json.load(fh)
        arr = np.asarray(obj["rows"], dtype=float)
        rows = arr[:, :, 0] + 1j * arr[:, :, 1]
        basis = SubspaceBasis(rows, tuple(obj["dims"]))
        vec = pluecker(basis)
        raw = eval_chow(form, vec, normalized=False)
        scaled = eval_chow(form, vec, normalized=True)
        print(f"F (unnormalized) = {raw.real:+.12e}{raw.imag:+.12e}j")
        print(f"F (normalized)   = {scaled.real:+.12e}{scaled.imag:+.12e}j")
        print(f"|F| normalized   = {abs(scaled):.12e}  (tol_chow = {cfg.tol_chow:g})")
        did_something = True
    if not did_something:
        raise CliUsageError("chow needs --print and/or --eval BASIS_FILE")
    return 0


def _classify_file(path: str, cfg_values: dict, seed: int) -> dict:
    cfg = ToleranceConfig(**cfg_values)
    try:
        state = _load_state(path, cfg)
        report = classify(state, seed=seed)
        return {"file": Path(path).name, "report": report_to_dict(report)}
    except (Sep4Error, json.JSONDecodeError, OSError, ValueError) as exc:
        return {"file": Path(path).name, "error": f"{type(exc).__name__}: {exc}"}


def _cmd_batch(args) -> int:
    cfg = _tolerances_from_args(args)
    cfg_values = dataclasses.asdict(cfg)
    files = sorted(str(p) for p in Path(args.input).glob("*.json"))
    if args.parallel > 1 and len(files) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(_classify_file, files, [cfg_values] * len(files), [args.seed] * len(files)))
    else:
        results = [_classify_file(path, cfg_values, args.seed) for path in files]
    counts: dict[str, int] = {}
    with open(args.out, "w") as fh:
        for line in results:
            fh.write(json.dumps(line) + "\n")
            key = line["report"]["verdict"] if "report" in line else "error"
            counts[key] = counts.get(key, 0) + 1
    total = len(results)
    summary = ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())) or "nothing to do"
    print(f"classified {total} file(s) -> {args.out} ({summary})")
    return 0


def _cmd_gallery(args) -> int:
    cfg = DEFAULT_TOLERANCES
    if args.name == "divincenzo":
        state = divincenzo_state(cfg)
    elif args.name == "two-qutrit-ab":
        state = two_qutrit_ab_state(complex(args.a), complex(args.b), cfg)
    elif args.name == "random-separable":
        dims = tuple(int(x) for x in args.dims.split(","))
        state = random_separable(dims, args.terms, args.seed, cfg)
    else:
        state = random_ppt_rank4_33(args.seed, cfg)
    blob = json.dumps(state_to_dict(state))
    if args.out == "-":
        print(blob)
    else:
        Path(args.out).write_text(blob + "\n")
    return 0


def _print_version() -> None:
    print(f"sep4 {__version__}")
    for dims in supported_systems():
        label = "x".join(str(x) for x in dims)
        print(f"chow table {label}: sha256 {form_checksum(builtin_chow(dims))}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.version:
            _print_version()
            return 0
        if args.command == "classify":
            return _cmd_classify(args)
        if args.command == "chow":
            return _cmd_chow(args)
        if args.command == "batch":
            return _cmd_batch(args)
        if args.command == "gallery":
            return _cmd_gallery(args)
        raise CliUsageError("no subcommand given (try --version or classify/chow/batch/gallery)")
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3
    except (Sep4Error, json.JSONDecodeError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def entry() -> None:  # console-script hook
    sys.exit(main())
