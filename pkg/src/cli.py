"""
Majlab command line.

    majlab check --target A.json --source S.json [--exact|--float]
    majlab birkhoff D.json
    majlab inflate D.json [--eps 1e-2]
    majlab certify arveson3x3 | irrational --a 0.7071 --m 10
    majlab ii1 scalar|schur-horn|carpenter|unitary|orthoproj ...
    majlab bh synth|index|quantize ...
    majlab repro <case>|all

Reports go to stdout (or --out) as sorted-key JSON, diagnostics to stderr.
Exit codes: 0 success, 2 certified negative, 1 usage or input error.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from core import ReportWriter, RunError, dump_json
from core.rationals import parse_scalar
from core.schemas import MatrixPayload, MeasurePayload, PhiPayload, SequencePayload, VerticesPayload
from .cases import get_all_case_ids
from .config import MajlabConfig
from .matrixlab import matrix_to_payload
from .runner import MajlabRunner

logger = logging.getLogger("majlab")

P = TypeVar("P", bound=BaseModel)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1, not argparse's 2 (2 means a certified negative)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _BadInput(Exception):
    pass


def _load(path: Path, model: Type[P]) -> P:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise _BadInput(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise _BadInput(f"{path} is not JSON: {exc}") from exc
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        print(f"{path} does not match {model.__name__}:\n{exc}", file=sys.stderr)
        print(dump_json(model.model_json_schema()), file=sys.stderr, end="")
        raise _BadInput(f"invalid {model.__name__} in {path}") from exc


def _scalar_arg(text: str):
    """``p/q`` stays exact, anything else is read as a float."""
    if "/" in text:
        return parse_scalar(text)
    return float(text)


# ══════════════════════════════════════════════════════════════════════════════
#  PARSER
# ══════════════════════════════════════════════════════════════════════════════

def _run_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    backend = flags.add_mutually_exclusive_group()
    backend.add_argument("--exact", dest="backend", action="store_const", const="exact",
                         help="force the exact rational backend")
    backend.add_argument("--float", dest="backend", action="store_const", const="float",
                         help="force the float backend")
    flags.add_argument("--seed", type=int, default=0, help="seed of the run's PRNG (default: 0)")
    flags.add_argument("--tol", type=float, default=1e-9, help="float feasibility tolerance")
    flags.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    flags.add_argument("--unitary", type=Path, default=None,
                       help="write the synthesized unitary as matrix JSON")
    flags.add_argument("--timing", action="store_true", help="record wall time in the report")
    flags.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    return flags


def _resolution_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--n", dest="resolution", type=int, default=None,
                       help="model resolution N (default: smallest that works)")
    group.add_argument("--auto-n", dest="resolution", action="store_const", const=None,
                       help="choose N automatically")


def build_parser() -> argparse.ArgumentParser:
    flags = _run_flags()
    parser = _Parser(prog="majlab", description="Multivariable Schur-Horn toolkit.")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", parents=[flags], help="decide target ≺ source")
    check.add_argument("--target", type=Path, required=True)
    check.add_argument("--source", type=Path, required=True)

    birkhoff = commands.add_parser("birkhoff", parents=[flags], help="Birkhoff decomposition")
    birkhoff.add_argument("matrix", type=Path)

    inflate = commands.add_parser("inflate", parents=[flags], help="approximate unitary inflation")
    inflate.add_argument("matrix", type=Path)
    inflate.add_argument("--eps", type=float, default=None)

    certify = commands.add_parser("certify", help="obstruction certificates")
    certs = certify.add_subparsers(dest="certificate", required=True)
    certs.add_parser("arveson3x3", parents=[flags])
    irrational = certs.add_parser("irrational", parents=[flags])
    irrational.add_argument("--a", type=_scalar_arg, required=True, help="diagonal entry in (0, 1)")
    irrational.add_argument("--m", type=int, required=True, help="inflation factor")

    ii1 = commands.add_parser("ii1", help="finite II1 model engines")
    engines = ii1.add_subparsers(dest="engine", required=True)
    scalar = engines.add_parser("scalar", parents=[flags])
    scalar.add_argument("--spec", type=Path, required=True, help="source measure")
    scalar.add_argument("--depth", type=int, default=None)
    _resolution_flags(scalar)
    schur_horn = engines.add_parser("schur-horn", parents=[flags])
    schur_horn.add_argument("--target", type=Path, required=True)
    schur_horn.add_argument("--source", type=Path, required=True)
    schur_horn.add_argument("--depth", type=int, default=None,
                            help="scalar-engine levels run inside each block")
    _resolution_flags(schur_horn)
    for name in ("carpenter", "unitary", "orthoproj"):
        engine = engines.add_parser(name, parents=[flags])
        engine.add_argument("--target", type=Path, required=True)
        _resolution_flags(engine)

    bh = commands.add_parser("bh", help="B(H) diagonal synthesis")
    bh_commands = bh.add_subparsers(dest="bh_command", required=True)
    synth = bh_commands.add_parser("synth", parents=[flags])
    synth.add_argument("--vertices", type=Path, required=True)
    synth.add_argument("--target", type=Path, required=True)
    synth.add_argument("--size", type=int, default=None, help="truncation size M")
    synth.add_argument("--eps", type=_scalar_arg, default=None, help="quantize the target first")
    synth.add_argument("--no-floor", action="store_true",
                       help="allow vertices with fewer than ceil(M/(4k)) cells")
    quantize = bh_commands.add_parser("quantize", parents=[flags])
    quantize.add_argument("--vertices", type=Path, required=True)
    quantize.add_argument("--target", type=Path, required=True)
    quantize.add_argument("--eps", type=_scalar_arg, required=True)
    index = bh_commands.add_parser("index", parents=[flags])
    index.add_argument("--vertices", type=Path, required=True)
    index.add_argument("--phi", type=Path, required=True)
    index.add_argument("--prefix", type=Path, required=True)

    repro = commands.add_parser("repro", parents=[flags], help="run bundled cases")
    repro.add_argument("case", choices=get_all_case_ids() + ["all"])
    return parser


# ══════════════════════════════════════════════════════════════════════════════
#  DISPATCH
# ══════════════════════════════════════════════════════════════════════════════

def _dispatch(runner: MajlabRunner, args: argparse.Namespace):
    command = args.command
    if command == "check":
        return runner.check(_load(args.target, MeasurePayload), _load(args.source, MeasurePayload))
    if command == "birkhoff":
        return runner.birkhoff(_load(args.matrix, MatrixPayload))
    if command == "inflate":
        eps = args.eps if args.eps is not None else runner.config.inflate_eps
        return runner.inflate(_load(args.matrix, MatrixPayload), eps)
    if command == "certify":
        if args.certificate == "arveson3x3":
            report = runner.run_case("arveson3x3")
            return report.model_copy(update={"subcommand": "certify arveson3x3"})
        return runner.certify_irrational(args.a, args.m)
    if command == "ii1":
        if args.engine == "scalar":
            depth = args.depth if args.depth is not None else runner.config.depth
            return runner.ii1_scalar(_load(args.spec, MeasurePayload), depth, args.resolution)
        if args.engine == "schur-horn":
            return runner.ii1_schur_horn(_load(args.target, MeasurePayload),
                                         _load(args.source, MeasurePayload), args.resolution,
                                         args.depth)
        handler = getattr(runner, "ii1_" + args.engine)
        return handler(_load(args.target, MeasurePayload), args.resolution)
    if command == "bh":
        vertices = _load(args.vertices, VerticesPayload)
        if args.bh_command == "index":
            return runner.bh_index(vertices, _load(args.phi, PhiPayload),
                                   _load(args.prefix, SequencePayload))
        target = _load(args.target, SequencePayload)
        if args.bh_command == "quantize":
            return runner.bh_quantize(vertices, target, args.eps)
        return runner.bh_synth(vertices, target, args.size, args.eps)
    if args.case == "all":
        return runner.run_suite(get_all_case_ids())
    return runner._timed(args.case)


def _write_unitaries(runner: MajlabRunner, path: Path) -> None:
    if not runner.unitaries:
        logger.warning("no unitary was built; %s not written", path)
        return
    payloads = {name: matrix_to_payload(U).model_dump(mode="json") for name, U in runner.unitaries.items()}
    body = next(iter(payloads.values())) if len(payloads) == 1 else payloads
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(body))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    config = MajlabConfig(seed=args.seed, backend=args.backend or "auto", tol=args.tol,
                          out=args.out, timing=args.timing,
                          enforce_multiplicity_floor=not getattr(args, "no_floor", False))
    runner = MajlabRunner(config)
    start = time.perf_counter()
    try:
        result = _dispatch(runner, args)
    except _BadInput as exc:
        logger.error("%s", exc)
        return 1
    except RunError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except ValueError as exc:
        logger.error("%s", exc)
        return 1

    if args.timing and not isinstance(result, list) and result.wall_time is None:
        result.wall_time = round(time.perf_counter() - start, 6)
    ReportWriter(config.out).write(result)
    if args.unitary is not None:
        _write_unitaries(runner, args.unitary)
    if isinstance(result, list):
        return max((r.exit_code for r in result), default=0)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
