"""``restdiag`` command line.

Exit codes: 0 when every check passes, 1 for usage, parse or validation
errors (and for violated invariants in ``verify``), 2 when a mathematical
obstruction is found, which is a successful computation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..diagseq import arveson_summability_partial, kadison_ab, renormalized_sum, spectrum_set
from ..errors import DomainError, RestdiagError, UsageError
from ..exactcore import DEFAULT_TOL, GaussianRational, format_rational
from ..lattice import build_kmodule
from ..opmodel import make_operator, restricted_diagonalize
from .generate import GENERATOR_ID, KINDS, generate_instance
from .io import (
    dumps_report,
    load_json,
    operator_to_json,
    parse_number,
    parse_operator,
    parse_sequence,
    read_samples_csv,
    sequence_to_json,
    unitary_to_json,
)
from .suites import SUITES, get_suite, replay, run_suite

EXIT_OK, EXIT_ERROR, EXIT_OBSTRUCTION = 0, 1, 2
SEED_LIMIT = 2**64


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...]
    seed: int
    tol: Optional[float]
    trials: int
    fmt: str
    out: Optional[str]
    timing: bool


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(z: GaussianRational) -> dict:
    return z.to_json()


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default 0)")
    p.add_argument("--trials", type=int, default=100, help="number of random trials (default 100)")
    p.add_argument("--tol", type=float, default=None, help="float tolerance (command-specific default)")
    p.add_argument("--format", dest="fmt", choices=("human", "json"), default="human")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="add wall time (json is then not reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="restdiag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-diagonal", help="renormalized sum and Kadison integer of a diagonal sequence")
    p.add_argument("sequence", help="LimSequence JSON file, or CSV of re,im samples")
    p.add_argument("--spectrum", default=None, help='JSON list of points, e.g. \'["0", "1", {"re": "0", "im": "1"}]\'')
    _common(p)

    p = sub.add_parser("diagonalize", help="restricted diagonalization of a finite-spectrum operator")
    p.add_argument("operator", help="operator JSON file")
    p.add_argument("--artifact", default=None, help="write the unitary and diagonal operator to this file")
    _common(p)

    p = sub.add_parser("verify", help="run a randomized invariant suite")
    p.add_argument("suite", nargs="?", default=None, help=f"one of: {', '.join(SUITES)}")
    p.add_argument("--replay", default=None, help="re-run a failing instance saved from a report")
    _common(p)

    p = sub.add_parser("gen", help="emit a seeded random instance")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--m", type=int, default=3, help="number of spectrum points")
    _common(p)
    return parser


def _config(args) -> RunConfig:
    if not 0 <= args.seed < SEED_LIMIT:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if args.trials < 1:
        raise UsageError("trials must be a positive integer")
    if args.tol is not None and not args.tol > 0:
        raise UsageError("tol must be positive")
    inputs = tuple(str(getattr(args, k)) for k in ("sequence", "operator", "replay") if getattr(args, k, None))
    return RunConfig(args.command, inputs, args.seed, args.tol, args.trials, args.fmt, args.out, args.timing)


# ---------------------------------------------------------------- commands


def _parse_spectrum_arg(text: str):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--spectrum is not valid JSON: {exc.msg}") from None
    if not isinstance(raw, list):
        raise UsageError("--spectrum must be a JSON list")
    try:
        return spectrum_set([parse_number(x, f"spectrum[{i}]", "--spectrum") for i, x in enumerate(raw)])
    except RestdiagError as exc:
        raise UsageError(str(exc)) from None


def cmd_check_diagonal(path: str, spectrum: Optional[str], cfg: RunConfig) -> tuple[dict, int]:
    X = None if spectrum is None else _parse_spectrum_arg(spectrum)
    if path.endswith(".csv"):
        if X is None:
            raise UsageError("CSV samples need --spectrum")
        trace = arveson_summability_partial(read_samples_csv(path), X)
        report = {
            "command": "check-diagonal",
            "input": path,
            "spectrum": [_num(z) for z in X],
            "lim_member": None,
            "note": "streamed samples: partial-sum trends only, membership is not decided",
            "trend": trace.trend(),
            "verdict": "pass",
        }
        return report, EXIT_OK

    d = parse_sequence(load_json(path), source=path)
    if X is not None and X.points != d.spectrum.points:
        raise UsageError("--spectrum differs from the spectrum in the sequence file")
    K = build_kmodule(d.spectrum.points)
    s = renormalized_sum(d, K=K)
    obstructions = []
    report = {
        "command": "check-diagonal",
        "input": path,
        "sequence": sequence_to_json(d),
        "lim_member": True,
        "lim_reason": "finite prefix followed by a periodic tail with values in X",
        "renormalized_sum": {
            "value": _num(s.value),
            "reduced": _num(s.reduced),
            "certificate": None if s.certificate is None else s.certificate.to_json(),
            "nearest": list(s.assignment.prefix),
        },
        "lattice": K.to_json(),
    }
    if s.certificate is None:
        obstructions.append(f"s(d) = {s.value} is not in K_X")
    if d.spectrum.as_set() == {GaussianRational(0), GaussianRational(1)}:
        try:
            k = kadison_ab(d)
        except DomainError as exc:
            report["kadison"] = {"applicable": False, "reason": str(exc)}
        else:
            report["kadison"] = {
                "applicable": True,
                "a": format_rational(k.a),
                "b": format_rational(k.b),
                "a_minus_b": format_rational(k.diff),
                "integral": k.integral,
            }
            if not k.integral:
                obstructions.append(f"a - b = {k.diff} is not an integer")
    report["obstructions"] = obstructions
    report["verdict"] = "obstruction" if obstructions else "pass"
    return report, EXIT_OBSTRUCTION if obstructions else EXIT_OK


def cmd_diagonalize(path: str, artifact: Optional[str], cfg: RunConfig) -> tuple[dict, int]:
    raw = parse_operator(load_json(path), source=path)
    N = make_operator(raw.spectrum, raw.corner, raw.tail, raw.finite_spectrum)
    tol = DEFAULT_TOL if cfg.tol is None else cfg.tol
    D = restricted_diagonalize(N, tol)
    out = {"unitary": unitary_to_json(D.unitary), "diagonal": operator_to_json(D.diagonal)}
    report = {
        "command": "diagonalize",
        "input": path,
        "tol": tol,
        "spectrum": [_num(z) for z in N.spectrum],
        "initial_codims": list(D.initial_codims),
        "moves": [{"source": m.source, "target": m.target, "atoms": list(m.atoms)} for m in D.moves],
        "residual": D.residual,
        "offdiag_residual": D.offdiag_residual,
        "unitary_defect": D.unitary.defect,
        "perturbation_hs_norm": D.unitary.perturbation_hs_norm(),
        **out,
        "verdict": "pass",
    }
    if artifact:
        Path(artifact).write_text(dumps_report(out))
        report["artifact"] = artifact
    return report, EXIT_OK


def cmd_verify(tag: Optional[str], replay_path: Optional[str], cfg: RunConfig) -> tuple[dict, int]:
    if replay_path:
        obj = load_json(replay_path)
        if isinstance(obj, dict) and "replay" in obj:
            obj = obj["replay"]
        if not isinstance(obj, dict):
            raise UsageError("replay file must hold a replay record object")
        res = replay(obj)
        report = {
            "command": "verify",
            "replay": replay_path,
            "suite": obj.get("suite"),
            "verdict": "pass" if res.ok else "fail",
            "detail": res.detail,
        }
        return report, EXIT_OK if res.ok else EXIT_ERROR
    if tag is None:
        raise UsageError("verify needs a suite tag or --replay")
    get_suite(tag)
    rep = run_suite(tag, cfg.seed, cfg.trials, cfg.tol)
    return rep.to_json(), EXIT_OK if rep.ok else EXIT_ERROR


def cmd_gen(kind: str, dim: int, m: int, cfg: RunConfig) -> tuple[dict, int]:
    obj = generate_instance(kind, cfg.seed, dim=dim, m=m)
    meta = {"generator": GENERATOR_ID, "kind": kind, "seed": cfg.seed, "dim": dim, "m": m}
    if kind == "projection-pair":
        report = {"meta": meta, "P": operator_to_json(obj.P.projection), "Q": operator_to_json(obj.Q.projection),
                  "codim": obj.codim}
    elif kind == "finite-spectrum-operator":
        report = {"meta": meta, **operator_to_json(obj.operator)}
    else:
        report = {"meta": meta, "unitary": unitary_to_json(obj)}
    return report, EXIT_OK


# ---------------------------------------------------------------- output


def render_human(report, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(report, dict):
        if set(report) == {"re", "im"} and all(isinstance(v, str) for v in report.values()):
            return pad + str(GaussianRational(report["re"], report["im"]))
        for k, v in report.items():
            if isinstance(v, (dict, list)) and v and not _is_scalar_list(v) and not _is_number(v):
                lines.append(f"{pad}{k}:")
                lines.append(render_human(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_inline(v)}")
    elif isinstance(report, list):
        for v in report:
            if isinstance(v, dict) and not _is_number(v):
                lines.append(f"{pad}-")
                lines.append(render_human(v, indent + 1))
            elif isinstance(v, list) and not _is_scalar_list(v):
                lines.append(f"{pad}-")
                lines.append(render_human(v, indent + 1))
            else:
                lines.append(f"{pad}- {_inline(v)}")
    else:
        lines.append(pad + _inline(report))
    return "\n".join(lines)


def _is_number(v) -> bool:
    return isinstance(v, dict) and set(v) == {"re", "im"}


def _is_scalar_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) or _is_number(x) for x in v)


def _inline(v) -> str:
    if _is_number(v):
        return str(GaussianRational(v["re"], v["im"]))
    if isinstance(v, list):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v)


def emit(report: dict, cfg: RunConfig) -> None:
    text = dumps_report(report) if cfg.fmt == "json" else render_human(report) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
        start = time.perf_counter()
        if args.command == "check-diagonal":
            report, code = cmd_check_diagonal(args.sequence, args.spectrum, cfg)
        elif args.command == "diagonalize":
            report, code = cmd_diagonalize(args.operator, args.artifact, cfg)
        elif args.command == "verify":
            report, code = cmd_verify(args.suite, args.replay, cfg)
        else:
            report, code = cmd_gen(args.kind, args.dim, args.m, cfg)
        if cfg.timing:
            report["timing_s"] = time.perf_counter() - start
        emit(report, cfg)
        return code
    except RestdiagError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
