"""Command-line front end.

Every subcommand emits a table (CSV or JSON) preceded by a metadata block
that echoes the invocation, so that ``replay FILE`` can regenerate it.

Usage:
    ring-analyzer moments --n 10 --t 1
    ring-analyzer distribution --n inf --j-max 30 --overlay
    ring-analyzer simulate --n 1000 --trials 100000 --seed 7 --format json
    ring-analyzer replay results.csv
"""

import argparse
import csv
import io
import json
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ring_analyzer import __version__
from ring_analyzer.config import get_settings
from ring_analyzer.core.asymptotics import correction_c1, correction_c2_fit, limit_mean
from ring_analyzer.core.distribution import (
    exact_distribution,
    limit_distribution,
    tail_law,
)
from ring_analyzer.core.errors import (
    EXIT_OK,
    DomainError,
    RingAnalyzerError,
    ValidationFailure,
    exit_code_for,
)
from ring_analyzer.core.exact_engine import moment_table, second_moment_rounds
from ring_analyzer.core.logger import configure_logging, get_logger
from ring_analyzer.core.parametric_optimizer import (
    find_t_star,
    relative_gain,
    scan_segment,
)
from ring_analyzer.core.ring_simulator import simulate
from ring_analyzer.models.manifest import OutputFormat, RunManifest, Subcommand
from ring_analyzer.models.segments import SegmentSpec
from ring_analyzer.models.simulation import SimConfig
from ring_analyzer.services.reports import C2_FIT_RANGE, limits_panel
from ring_analyzer.services.validation import run_validation

logger = get_logger(__name__)

MANIFEST_PREFIX = "# manifest: "
GENERATED_PREFIX = "# generated_at: "
# argparse destinations that are not subcommand parameters
GLOBAL_KEYS = {"command", "handler", "format", "out", "seed"}


@dataclass
class Table:
    """Rows of one emitted table; ``document`` replaces them in JSON output."""

    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    document: dict[str, Any] | None = None


def format_number(value: Any) -> Any:
    """Floats as 12 significant digits, '.' decimal, no grouping."""
    if isinstance(value, bool) or not isinstance(value, float):
        return value
    return format(value, ".12g")


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_json_ready(v) for v in value]
    return format_number(value)


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(format_number(value))


def render(table: Table, manifest: RunManifest, generated_at: str) -> str:
    """Render a table with its metadata block."""
    header = manifest.model_dump(mode="json")
    if manifest.format is OutputFormat.JSON:
        data = table.document
        if data is None:
            data = [dict(zip(table.columns, row, strict=True)) for row in table.rows]
        payload = {
            "manifest": header,
            "generated_at": generated_at,
            "data": _json_ready(data),
        }
        return json.dumps(payload, indent=2) + "\n"

    buffer = io.StringIO()
    buffer.write(MANIFEST_PREFIX + json.dumps(header) + "\n")
    buffer.write(GENERATED_PREFIX + generated_at + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buffer.getvalue()


def _segment_arg(value: str | None) -> SegmentSpec | None:
    """``open02``, ``int2to3`` or an integer xi >= 3 for (xi, xi+1)."""
    if value is None:
        return None
    if value == "open02":
        return SegmentSpec.open02()
    if value == "int2to3":
        return SegmentSpec.int2to3()
    try:
        xi = int(value)
    except ValueError as e:
        raise DomainError(
            f"segment must be open02, int2to3 or an integer xi >= 3, got {value!r}"
        ) from e
    return SegmentSpec.general(xi)


def cmd_moments(args: argparse.Namespace) -> Table:
    """M(n,t), second moment and variance."""
    segment = _segment_arg(args.segment)
    if segment is not None and not segment.contains(args.t):
        raise DomainError(f"t={args.t} outside segment {segment.label}", t=args.t)
    convention_xi = None if segment is None else segment.convention_xi
    result = second_moment_rounds(args.n, args.t, convention_xi)
    return Table(
        columns=["n", "t", "mean", "second_moment", "variance"],
        rows=[[result.n, result.t, result.mean, result.second_moment, result.variance]],
    )


def cmd_limits(args: argparse.Namespace) -> Table:
    """Limit constants with their error bounds."""
    rows = limits_panel(args.nu)
    return Table(
        columns=["name", "value", "error_bound"],
        rows=[[r.name, r.value, r.error_bound] for r in rows],
    )


def cmd_distribution(args: argparse.Namespace) -> Table:
    """P(n,j) or P(inf,j), optionally next to the geometric tail law."""
    if args.n == "inf":
        dist = limit_distribution(args.j_max, args.nu, args.t)
    else:
        try:
            n = int(args.n)
        except ValueError as e:
            raise DomainError(f"n must be an integer or 'inf', got {args.n!r}") from e
        if args.overlay:
            raise DomainError("--overlay is only defined for n = inf")
        dist = exact_distribution(n, args.j_max, args.t)

    if not args.overlay:
        return Table(
            columns=["j", "P"],
            rows=[[j, dist.prob(j)] for j in range(1, dist.j_max + 1)],
        )
    if dist.t != 1.0:
        raise DomainError(f"--overlay needs t = 1, got t={dist.t}")
    law = tail_law()
    return Table(
        columns=["j", "P", "approximation"],
        rows=[[j, dist.prob(j), law.approximation(j)] for j in range(1, dist.j_max + 1)],
    )


def cmd_convergence(args: argparse.Namespace) -> Table:
    """n, M(n) - M(inf) - C1/n and C2/n^2 for n in [n_lo, n_hi]."""
    table = Table(columns=["n", "remainder", "c2_over_n2"])
    if args.n_hi < args.n_lo:
        return table
    if args.n_lo < 2:
        raise DomainError(f"n_lo must be >= 2, got {args.n_lo}", n_lo=args.n_lo)
    report = limit_mean(args.nu)
    assert report.m_inf is not None
    c1 = correction_c1(args.nu)
    c2 = correction_c2_fit(*C2_FIT_RANGE, nu=args.nu)
    moments = moment_table(args.n_hi, 1.0)
    table.rows = [
        [n, moments.mean(n) - report.m_inf - c1 / n, c2 / n**2]
        for n in range(args.n_lo, args.n_hi + 1)
    ]
    return table


def cmd_optimize(args: argparse.Namespace) -> Table:
    """t*, M(inf,t*) and the gain over t = 1 in percent."""
    t_star, m_star = find_t_star(args.tolerance)
    return Table(
        columns=["t_star", "m_star", "gain_percent"],
        rows=[[t_star, m_star, 100.0 * relative_gain(m_star)]],
    )


def cmd_scan(args: argparse.Namespace) -> Table:
    """(t, M(inf,t), M'(inf,t)) over a segment."""
    segment = _segment_arg(args.segment)
    assert segment is not None
    scan = scan_segment(segment, args.step, args.nu)
    if scan.gaps:
        logger.warning("scan_has_gaps", segment=segment.label, gaps=list(scan.gaps))
    return Table(
        columns=["t", "m_inf_t", "m_prime_t"],
        rows=[[s.t, s.m_inf_t, s.m_prime_t] for s in scan.samples],
    )


def cmd_simulate(args: argparse.Namespace) -> Table:
    """Monte Carlo batch; JSON output is the full report."""
    config = SimConfig(
        ring_size=args.n,
        t=args.t,
        trials=args.trials,
        master_seed=args.seed,
        j_max=args.j_max,
        segment=_segment_arg(args.segment),
        per_processor=args.per_processor,
    )
    report = simulate(config)
    document = report.model_dump(mode="python")
    scalars = {k: v for k, v in document.items() if k not in ("config", "round_histogram")}
    rows = [[key, value] for key, value in scalars.items()]
    rows += [[f"p_hat_{j}", v] for j, v in enumerate(report.round_histogram, start=1)]
    return Table(columns=["field", "value"], rows=rows, document=document)


def cmd_validate(args: argparse.Namespace) -> Table:
    """Cross-module acceptance suite."""
    checks = run_validation(
        include_simulation=not args.skip_simulation,
        trials=args.trials,
        seed=args.seed,
    )
    return Table(
        columns=["name", "passed", "observed", "expected", "tolerance", "detail"],
        rows=[
            [c.name, c.passed, c.observed, c.expected, c.tolerance, c.detail]
            for c in checks
        ],
    )


HANDLERS: dict[Subcommand, Callable[[argparse.Namespace], Table]] = {
    Subcommand.MOMENTS: cmd_moments,
    Subcommand.LIMITS: cmd_limits,
    Subcommand.DISTRIBUTION: cmd_distribution,
    Subcommand.CONVERGENCE: cmd_convergence,
    Subcommand.OPTIMIZE: cmd_optimize,
    Subcommand.SCAN: cmd_scan,
    Subcommand.SIMULATE: cmd_simulate,
    Subcommand.VALIDATE: cmd_validate,
}
SEEDED = {Subcommand.SIMULATE, Subcommand.VALIDATE}


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subparser per subcommand plus ``replay``."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value
    )
    common.add_argument("--out", type=Path, default=None, help="Output file (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="Master seed (u64)")
    common.add_argument("--nu", type=int, default=None, help="Poisson truncation")

    parser = argparse.ArgumentParser(
        prog="ring-analyzer",
        description="Exact, asymptotic and Monte Carlo analysis of ring leader election",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(Subcommand.MOMENTS.value, parents=[common], help="M(n,t) and variance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--segment", default=None, help="open02, int2to3 or xi")

    sub.add_parser(Subcommand.LIMITS.value, parents=[common], help="Limit constants")

    p = sub.add_parser(Subcommand.DISTRIBUTION.value, parents=[common], help="P(n,j)")
    p.add_argument("--n", default="inf", help="Ring size or 'inf'")
    p.add_argument("--j-max", type=int, default=None)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--overlay", action="store_true", help="Add the geometric tail law")

    p = sub.add_parser(
        Subcommand.CONVERGENCE.value, parents=[common], help="M(n) - M(inf) against C2/n^2"
    )
    p.add_argument("--n-lo", type=int, required=True)
    p.add_argument("--n-hi", type=int, required=True)

    p = sub.add_parser(Subcommand.OPTIMIZE.value, parents=[common], help="Optimal t on (0,2)")
    p.add_argument("--tolerance", type=float, default=1e-10)

    p = sub.add_parser(Subcommand.SCAN.value, parents=[common], help="M(inf,t) on a segment")
    p.add_argument("--segment", default="open02", help="open02, int2to3 or xi")
    p.add_argument("--step", type=float, default=0.01)

    p = sub.add_parser(Subcommand.SIMULATE.value, parents=[common], help="Monte Carlo run")
    p.add_argument("--n", type=int, default=1000, help="Ring size")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--segment", default=None, help="open02, int2to3 or xi")
    p.add_argument("--j-max", type=int, default=40)
    p.add_argument("--per-processor", action="store_true")

    p = sub.add_parser(Subcommand.VALIDATE.value, parents=[common], help="Acceptance suite")
    p.add_argument("--skip-simulation", action="store_true")
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("replay", help="Re-run the manifest embedded in an output file")
    p.add_argument("file", type=Path)
    p.add_argument("--out", type=Path, default=None, help="Output file (default: stdout)")
    return parser


def read_manifest(path: Path) -> RunManifest:
    """Extract the manifest from a CSV or JSON output file.

    Raises:
        DomainError: If the file carries no manifest
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DomainError(f"cannot read {path}: {e}", path=str(path)) from e
    if text.startswith(MANIFEST_PREFIX):
        first_line = text.split("\n", 1)[0]
        return RunManifest.model_validate_json(first_line[len(MANIFEST_PREFIX) :])
    try:
        return RunManifest.model_validate(json.loads(text)["manifest"])
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise DomainError(f"no manifest found in {path}", path=str(path)) from e


def _run(args: argparse.Namespace) -> int:
    if args.command == "replay":
        manifest = read_manifest(args.file)
        argv = manifest.to_argv()
        if args.out is not None:
            argv += ["--out", str(args.out)]
        logger.info("replaying_manifest", file=str(args.file), argv=argv)
        return _run(build_parser().parse_args(argv))

    command = Subcommand(args.command)
    if command in SEEDED and args.seed is None:
        args.seed = get_settings().simulation.default_seed
    parameters = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}
    manifest = RunManifest(
        subcommand=command,
        parameters=parameters,
        output_path=None if args.out is None else str(args.out),
        format=OutputFormat(args.format),
        seed=args.seed,
        version=__version__,
    )
    logger.info("command_started", command=command.value, parameters=parameters)
    table = HANDLERS[command](args)
    text = render(table, manifest, datetime.now(UTC).isoformat())
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")

    if command is Subcommand.VALIDATE:
        failed = [row[0] for row in table.rows if not row[1]]
        if failed:
            raise ValidationFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``ring-analyzer`` script.

    Returns:
        Exit code: 0 success, 2 domain, 3 singularity, 4 fit or bracket
        failure, 5 failed validation check
    """
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ValidationError as e:
        message = "; ".join(err["msg"] for err in e.errors())
        logger.error("invalid_arguments", command=args.command, error=message)
        print(f"ring-analyzer: error: {message}", file=sys.stderr)
        return exit_code_for(e)
    except RingAnalyzerError as e:
        code = exit_code_for(e)
        logger.error("command_failed", command=args.command, error=e.message, exit_code=code)
        print(f"ring-analyzer: error: {e.message}", file=sys.stderr)
        return code
