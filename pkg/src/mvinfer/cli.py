"""Command-line entry point.

Three subcommands mirror the three analysis modes::

    mvinfer rm          --formula "resp ~ group * time" --data file.csv --subject id
    mvinfer manova      --formula "resp ~ sex * diagnosis" --data file.csv --subject id
    mvinfer manova-wide --formula "cbind(y1, y2) ~ group" --data file.csv

Exit codes: 0 on success, 2 for input or validation problems, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import AnalysisRequest, run_analysis
from .errors import DataError, DesignError, MvinferError
from .plotting import emit_plot_data


def _add_common(parser: argparse.ArgumentParser, mode: str) -> None:
    parser.add_argument("--formula", required=True, help="model formula, e.g. 'y ~ A * B'")
    parser.add_argument("--data", required=True, help="path to the delimited data file")
    if mode != "manova-wide":
        parser.add_argument("--subject", required=True, help="subject id column name")
    if mode == "rm":
        parser.add_argument(
            "--no-subf",
            type=int,
            default=1,
            metavar="K",
            help="number of sub-plot factors (the last K factors of the formula)",
        )
    parser.add_argument("--iter", type=int, default=10_000, help="resampling iterations")
    parser.add_argument("--alpha", type=float, default=0.05, help="significance level")
    parser.add_argument(
        "--resampling",
        default=None,
        help="Perm (rm only), paramBS or WildBS; defaults to Perm for rm, paramBS otherwise",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--threads", type=int, default=None, help="resampling worker count")
    parser.add_argument("--dec", type=int, default=3, help="decimal digits in the report")
    if mode == "rm":
        parser.add_argument(
            "--ci-method",
            choices=["t-quantile", "resampling"],
            default="t-quantile",
            help="descriptive confidence-interval method",
        )
        parser.add_argument(
            "--plot-factor",
            default=None,
            metavar="SEL",
            help="factor selection to plot, e.g. 'group' or 'group:time' "
            "(omit for one-factor designs)",
        )
        parser.add_argument(
            "--gap", type=float, default=0.1, help="error-bar offset between plot series"
        )
        parser.add_argument(
            "--plot", action="store_true", help="emit plot CSV and SVG (requires --out)"
        )
    if mode != "rm":
        parser.add_argument(
            "--nested-levels-unique",
            action="store_true",
            help="nested-factor levels are named uniquely across parent levels",
        )
    parser.add_argument("--sep", default=",", help="field separator (default ',')")
    parser.add_argument("--decimal-char", default=".", help="decimal character (default '.')")
    parser.add_argument(
        "--no-header",
        action="store_true",
        help="file has no header row; columns are addressed as V1, V2, ...",
    )
    parser.add_argument(
        "--na-drop",
        action="store_true",
        help="drop subjects with missing responses instead of failing",
    )
    parser.add_argument(
        "--out",
        default=None,
        metavar="DIR",
        help="directory for report.txt, report.json and plot files",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvinfer",
        description="Heteroscedasticity-robust factorial MANOVA and repeated-measures tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, mode in (("rm", "rm"), ("manova", "manova-long"), ("manova-wide", "manova-wide")):
        _add_common(sub.add_parser(command, help=f"{mode} analysis"), mode)
    return parser


def _request_from_args(args: argparse.Namespace) -> AnalysisRequest:
    mode = {"rm": "rm", "manova": "manova-long", "manova-wide": "manova-wide"}[args.command]
    return AnalysisRequest(
        mode=mode,
        formula=args.formula,
        data_path=args.data,
        subject_column=getattr(args, "subject", None),
        n_subplot_factors=getattr(args, "no_subf", 1),
        iterations=args.iter,
        alpha=args.alpha,
        resampling=args.resampling,
        seed=args.seed,
        workers=args.threads,
        ci_method=getattr(args, "ci_method", "t-quantile"),
        decimals=args.dec,
        nested_levels_unique=getattr(args, "nested_levels_unique", False),
        separator=args.sep,
        decimal_char=args.decimal_char,
        header=not args.no_header,
        drop_incomplete=args.na_drop,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        request = _request_from_args(args)
        report = run_analysis(request)
        text = report.to_text()
        sys.stdout.write(text)
        if args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.txt").write_text(text, encoding="utf-8")
            (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        if getattr(args, "plot", False) or getattr(args, "plot_factor", None):
            if args.out is None:
                raise DesignError("--plot/--plot-factor require --out for the output files")
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            selection = args.plot_factor
            stem = (selection or "means").replace(":", "_")
            emit_plot_data(
                report.fit,
                report.layout,
                selection,
                out / f"plot_{stem}.csv",
                out / f"plot_{stem}.svg",
                alpha=args.alpha,
                gap=args.gap,
            )
    except (DataError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except MvinferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
