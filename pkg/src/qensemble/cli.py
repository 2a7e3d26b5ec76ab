"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 ingestion error, 4 capacity
error, 1 any other package error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DomainError,
    IngestionError,
    QEnsembleError,
    TrainingError,
)
from .experiments import DYADIC_GRID, ExperimentConfig, Report, run_experiment

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_INGEST, EXIT_CAPACITY = 0, 1, 2, 3, 4


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimator", default="binary-search",
                   choices=["qsearch", "est-amp", "doubling", "binary-search"])
    p.add_argument("--c", type=float, default=1.2, help="QSearch growth factor, 1 < c < 2")
    p.add_argument("--epsilon", type=float, default=1e-4, help="probability floor")
    p.add_argument("--M", type=int, default=16, help="Fourier register size for est-amp")
    p.add_argument("--max-rounds", type=int, default=None, help="QSearch round cap")
    p.add_argument("--trials-per-check", type=int, default=15, help="majority-voted shots per probe")
    p.add_argument("--strategy", default="threshold", choices=["threshold", "table", "optimal"])
    p.add_argument("--stop-rule", default="midpoint", choices=["midpoint", "endpoints"])
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", default="json", choices=["json", "csv"])


def _add_model_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=None, help="model JSON file")
    p.add_argument("--dataset", default=None, help="CSV dataset; last column is the label (1 or 2)")
    p.add_argument("--probabilities", type=_floats, default=None, help="explicit p_i vector, e.g. 0.9,0.1")
    p.add_argument("--n-stumps", type=int, default=16, help="stumps to train when no model is given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qensemble", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run an estimator on one synthetic oracle")
    _add_common(est)
    est.add_argument("--p", type=float, default=0.5, help="true good probability")
    est.add_argument("--qubits", type=int, default=1)

    sweep = sub.add_parser("sweep", help="run an estimator over a grid of true probabilities")
    _add_common(sweep)
    sweep.add_argument("--grid", type=_floats, default=DYADIC_GRID)
    sweep.add_argument("--qubits", type=int, default=1)

    pred = sub.add_parser("predict", help="predict one input with every method")
    _add_common(pred)
    _add_model_source(pred)
    pred.add_argument("--row", type=int, default=0, help="dataset row to predict")

    cmp_ = sub.add_parser("compare", help="compare predictors across a dataset")
    _add_common(cmp_)
    _add_model_source(cmp_)
    cmp_.add_argument("--rows", type=_ints, default=None, help="restrict to these dataset rows")

    rep = sub.add_parser("report", help="validate and re-export a stored report")
    rep.add_argument("path")
    rep.add_argument("--out", default=None)
    rep.add_argument("--format", default="json", choices=["json", "csv"])
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    common = dict(
        seed=args.seed,
        estimator=args.estimator,
        c=args.c,
        epsilon=args.epsilon,
        M=args.M,
        max_rounds=args.max_rounds,
        trials_per_check=args.trials_per_check,
        strategy=args.strategy,
        stop_rule=args.stop_rule,
        reps=args.reps,
    )
    if args.command == "estimate":
        return ExperimentConfig(kind="sweep", grid=(args.p,), qubits=args.qubits, **common)
    if args.command == "sweep":
        return ExperimentConfig(kind="sweep", grid=args.grid, qubits=args.qubits, **common)
    rows = (args.row,) if args.command == "predict" else args.rows
    return ExperimentConfig(
        kind="compare",
        model=args.model,
        dataset=args.dataset,
        probabilities=args.probabilities,
        n_stumps=args.n_stumps,
        rows=rows if args.dataset else None,
        **common,
    )


def _emit(report: Report, out: str | None, fmt: str) -> None:
    text = report.to_json() if fmt == "json" else report.to_csv()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {len(report.runs)} runs to {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            report = Report.load(args.path)
        else:
            report = run_experiment(config_from_args(args))
        _emit(report, args.out, args.format)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (IngestionError, TrainingError) as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QEnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: cannot write output ({exc})", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
