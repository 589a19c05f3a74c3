import argparse
import json
import logging
import os
import signal
import sys
from typing import List, Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .benchmarks import ExperimentConfig, run_experiment, write_report
from .config import load_config
from .data_io import (read_points_csv, read_samples_csv, save_json_file, write_frame, write_predictions_csv,
                      write_samples_csv)
from .errors import InfeasibleError, InputError
from .function_factory import FUNCTION_NAMES, FunctionFactory
from .gek import SampleSet, Variant, load_model, save_model, train
from .log_config import setup_logging
from .sampling import DomainBox, from_unit, lhs
from .sensitivity import estimate_indices
from .sliced import SliceConfig, make_layout, likelihood_profile
from .tuner import TunerConfig, write_trace_csv

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as InputError so they share exit code 1."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def signal_handler(sig, frame):
    console.print("\n[yellow]Interrupt received. Exiting gracefully...[/yellow]")
    sys.exit(130)


def _box(args, n: int) -> Optional[DomainBox]:
    if args.lower is None and args.upper is None:
        return None
    if args.lower is None or args.upper is None:
        raise InputError("--lower and --upper must be given together")
    if len(args.lower) != n or len(args.upper) != n:
        raise InputError(f"--lower/--upper need {n} values each")
    return DomainBox(args.lower, args.upper)


def _output(args, config, default_name: str) -> str:
    return args.out or os.path.join(config["output_dir"], default_name)


def _tuner_config(args, config) -> TunerConfig:
    lower, upper = config["theta_bounds"]
    tuner = config["tuner"]
    return TunerConfig(starts=args.starts or tuner["starts"], seed=args.seed,
                       evaluation_factor=tuner["evaluation_factor"], initial_step=tuner["initial_step"],
                       shrink=tuner["shrink"], stop_step=tuner["stop_step"],
                       theta_lower=lower, theta_upper=upper, threads=config["threads"],
                       progress=config["progress"])


def _slice_config(args, config) -> SliceConfig:
    m = args.m if args.m is not None else config["slicing"]["m"]
    appendant = args.appendant or config["slicing"]["appendant"]
    return SliceConfig(m=m, appendant=appendant)


def cmd_sample(args, config) -> int:
    if args.function:
        fn = FunctionFactory.create_function(args.function, args.n)
        box, n = fn.box, fn.dimension
    else:
        if args.n is None:
            raise InputError("sample needs -n (or --function)")
        n = args.n
        box = _box(args, n) or DomainBox.unit(n)
    X = from_unit(lhs(n, args.N, args.seed), box)
    out = _output(args, config, "samples.csv")
    if args.function:
        y, G = fn.evaluate(X)
        write_samples_csv(out, X, y, G)
    else:
        write_samples_csv(out, X)
    console.print(f"[green]Wrote {args.N} samples of dimension {n} to {out}[/green]")
    return EXIT_OK


def _load_samples(args, with_gradients: bool) -> SampleSet:
    X, y, G = read_samples_csv(args.data, require_gradients=with_gradients)
    return SampleSet.from_physical(X, y, G if with_gradients else None, _box(args, X.shape[1]))


def cmd_sensitivity(args, config) -> int:
    data = _load_samples(args, with_gradients=True)
    result = estimate_indices(data.G)
    if args.table:
        table = Table(title="Derivative-based sensitivity")
        for column in ("rank", "input", "S", "s_hat"):
            table.add_column(column, justify="right")
        for rank, k in enumerate(result.ranking, 1):
            table.add_row(str(rank), f"x_{k + 1}", f"{result.S[k]:.6g}", f"{result.s_hat[k]:.4f}")
        console.print(table)
    else:
        sys.stdout.write(json.dumps(result.to_dict(), indent=2) + "\n")
    if args.out:
        save_json_file(result.to_dict(), args.out)
    return EXIT_OK


def cmd_train(args, config) -> int:
    variant = Variant.parse(args.variant)
    data = _load_samples(args, with_gradients=variant.uses_gradients)
    model = train(data, variant, _tuner_config(args, config), _slice_config(args, config))
    out = _output(args, config, "model.json")
    save_model(model, out)
    if args.trace:
        write_trace_csv(model.outcome, args.trace)
    theta = ", ".join(f"{t:.4g}" for t in model.params.theta[:10])
    more = " ..." if model.params.theta.size > 10 else ""
    console.print(Panel(f"variant: {variant.value}\ntheta: [{theta}{more}]\n"
                        f"beta0: {model.beta0:.6g}   sigma2: {model.sigma2:.6g}\n"
                        f"objective: {model.outcome.value:.6g}   evaluations: {model.outcome.evaluations}\n"
                        f"model: {out}", title="Training complete", expand=False))
    return EXIT_OK


def cmd_predict(args, config) -> int:
    model = load_model(args.model)
    P = read_points_csv(args.points, model.data.n)
    out = _output(args, config, "predictions.csv")
    if len(P) == 0:
        mu, s2 = np.empty(0), np.empty(0)
    else:
        mu, s2 = model.predict_physical(P)
    write_predictions_csv(out, P.reshape(-1, model.data.n), mu, s2)
    console.print(f"[green]Wrote {len(P)} predictions to {out}[/green]")
    return EXIT_OK


def cmd_bench(args, config) -> int:
    experiment = ExperimentConfig.from_yaml(args.config_file, config["benchmark"])
    experiment.threads = config["threads"]
    experiment.progress = config["progress"]
    output_dir = args.output_dir or experiment.output_dir
    report = run_experiment(experiment)
    report_path, summary_path = write_report(report, output_dir)

    summary = report.summary()
    table = Table(title=f"Benchmark: {experiment.function or experiment.dataset}")
    for column in summary.columns:
        table.add_column(column, justify="right")
    for row in summary.itertuples(index=False):
        table.add_row(row.variant, str(row.N), f"{row.median_rmse:.4g}", f"{row.q25:.4g}",
                      f"{row.q75:.4g}", f"{row.median_train_s:.3f}")
    console.print(table)
    console.print(f"[green]Report: {report_path}\nSummary: {summary_path}[/green]")
    return EXIT_OK


def cmd_likelihood(args, config) -> int:
    data = _load_samples(args, with_gradients=True)
    thetas = np.linspace(args.theta_min, args.theta_max, args.points)
    layout = None
    if not args.full_only:
        layout = make_layout(data, estimate_indices(data.G), _slice_config(args, config))
    values = likelihood_profile(data, thetas, layout, args.appendant or config["slicing"]["appendant"])
    out = _output(args, config, "likelihood.csv")
    write_frame(pd.DataFrame(values, columns=["theta", "full", "sliced"]), out)
    best = int(np.argmin(values[:, 1]))
    console.print(f"[green]Full likelihood minimum on the grid at theta={values[best, 0]:.4g}; "
                  f"wrote {out}[/green]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="sgek", description="Kriging, GE-Kriging and sliced GE-Kriging surrogates")
    parser.add_argument("--config", help="YAML settings file (default: config.yaml)")
    parser.add_argument("--threads", type=int, help="worker threads (default: SGEK_THREADS or all cores)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def with_box(p):
        p.add_argument("--lower", type=float, nargs="+", help="physical lower bounds (default: data range)")
        p.add_argument("--upper", type=float, nargs="+", help="physical upper bounds")

    def with_slicing(p):
        p.add_argument("--m", type=int, help="slice count (default: 10, reduced for small N)")
        p.add_argument("--appendant", type=int, choices=(2, 3))

    p = sub.add_parser("sample", help="write a Latin hypercube design")
    p.add_argument("-n", type=int, help="input dimension")
    p.add_argument("-N", type=int, required=True, help="number of sites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--function", choices=FUNCTION_NAMES, help="also evaluate this test function")
    p.add_argument("--out")
    with_box(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("sensitivity", help="derivative-based sensitivity ranking of a sample CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="also save the JSON here")
    p.add_argument("--table", action="store_true", help="print a table instead of JSON")
    with_box(p)
    p.set_defaults(handler=cmd_sensitivity)

    p = sub.add_parser("train", help="tune and fit a surrogate")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", default="SGEK-1", help=", ".join(v.value for v in Variant))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int)
    p.add_argument("--out")
    p.add_argument("--trace", help="write the tuning trace CSV here")
    with_box(p)
    with_slicing(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="predict mean and variance at points")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("bench", help="run a benchmark sweep from a YAML experiment file")
    p.add_argument("config_file")
    p.add_argument("--output-dir")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("likelihood", help="full and sliced likelihood along isotropic theta")
    p.add_argument("--data", required=True)
    p.add_argument("--theta-min", type=float, default=0.01)
    p.add_argument("--theta-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--full-only", action="store_true")
    p.add_argument("--out")
    with_box(p)
    with_slicing(p)
    p.set_defaults(handler=cmd_likelihood)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    signal.signal(signal.SIGINT, signal_handler)
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise InputError("--threads must be positive")
            config["threads"] = args.threads
        setup_logging(config["log_dir"], args.log_level or config["log_level"])
        return args.handler(args, config)
    except InfeasibleError as e:
        console.print(f"[bold red]Numerically infeasible: {e}[/bold red]")
        logger.error(f"Infeasible: {e}")
        return EXIT_INFEASIBLE
    except InputError as e:
        console.print(f"[bold red]{e}[/bold red]")
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except Exception as e:
        console.print(f"[bold red]An error occurred: {str(e)}[/bold red]")
        logger.error(f"An error occurred: {str(e)}", exc_info=True)
        return EXIT_INPUT
