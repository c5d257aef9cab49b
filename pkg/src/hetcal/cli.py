"""Command-line interface: fit calibration data and run simulation studies.

Exit codes: 0 success, 1 input error, 2 estimation non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as hio
from .errors import AllReplicatesFailed, CalibrationError
from .hetero import fit_hetero
from .usual import fit_usual

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcal",
        description="Calibration fits and Monte Carlo studies for responses "
        "measured against standards with known preparation-error variances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate an unknown concentration")
    fit.add_argument("--standards", required=True, help="CSV with header X,u,Y")
    fit.add_argument("--sample", required=True, help="CSV with header Y0")
    fit.add_argument(
        "--model", choices=["usual", "proposed", "both"], default="both"
    )
    fit.add_argument("--level", type=float, default=0.95)
    fit.add_argument("--format", choices=["text", "csv", "json"], default="text")
    fit.add_argument("--label", default=None, help="analyte label for reports")

    sim = sub.add_parser("simulate", help="run Monte Carlo scenarios")
    sim.add_argument("--scenarios", required=True, help="scenario CSV file")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--threads", type=int, default=1)
    return parser


def cmd_fit(args) -> int:
    try:
        standards_bytes = Path(args.standards).read_bytes()
        sample_bytes = Path(args.sample).read_bytes()
        first = hio.parse_first_stage(standards_bytes)
        second = hio.parse_second_stage(sample_bytes)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    label = args.label or Path(args.standards).stem
    digest = hio.input_digest(standards_bytes, sample_bytes)
    models = ["usual", "proposed"] if args.model == "both" else [args.model]
    reports = []
    any_unconverged = False
    try:
        for model in models:
            if model == "usual":
                fit = fit_usual(first, second, level=args.level)
            else:
                fit = fit_hetero(first, second, level=args.level)
            any_unconverged = any_unconverged or not fit.converged
            reports.append(
                hio.FitReport(model=model, analyte_label=label, fit=fit,
                              input_digest=digest)
            )
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    renderer = {"text": hio.render_text, "csv": hio.render_csv,
                "json": hio.render_json}[args.format]
    sys.stdout.write(renderer(reports))
    return EXIT_NO_CONVERGENCE if any_unconverged else EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import run_scenario

    try:
        configs = hio.parse_scenarios(Path(args.scenarios).read_bytes())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    rows = []
    for cfg in configs:
        try:
            summary = run_scenario(cfg, threads=max(1, args.threads))
        except AllReplicatesFailed as exc:
            print(f"warning: {exc}; scenario skipped", file=sys.stderr)
            continue
        rows.append(hio.summary_row(cfg, summary))
    try:
        Path(args.out).write_text(hio.format_summary_csv(rows))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "fit":
        return cmd_fit(args)
    return cmd_simulate(args)


if __name__ == "__main__":
    sys.exit(main())
