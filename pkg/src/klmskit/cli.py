"""Command-line front end.

Subcommands: dict, theory, simulate, compare.  Exit codes: 0 success/pass,
1 comparison fail or computed-but-unstable model, 2 configuration error,
3 numerical error (singular, ill-conditioned, diverged).
"""

import argparse
import os
import sys

import numpy as np

from . import dictionary as dict_mod
from .config import RunConfig, apply_overrides, load_config, resolved_text
from .dictionary import Dictionary
from .errors import (
    ConfigError,
    DivergedError,
    HorizonMismatchError,
    IllConditionedError,
    KlmsError,
    NonFiniteError,
    SingularMatrixError,
    UnstableError,
)
from .experiments import (
    Ar1Source,
    ExperimentConfig,
    LearningCurve,
    compare,
    curves_from_csv,
    curves_to_csv,
    monte_carlo,
    theory_pipeline,
)
from .kernels import GaussianKernel
from .theory import (
    PredictedCurve,
    build_theory_model,
    curve_to_csv,
    estimate_optimal,
    model_summary,
    predict_curve,
    write_report,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _experiment_config(cfg: RunConfig) -> ExperimentConfig:
    return ExperimentConfig(
        kind=cfg.kind,
        rho=cfg.rho,
        sigma_x=cfg.sigma_x,
        noise_std=cfg.noise_std,
        bandwidth=cfg.bandwidth,
        step_size=cfg.step_size,
        horizon=cfg.horizon,
        runs=cfg.runs,
    )


def _build_dictionary(cfg: RunConfig):
    """Returns (dictionary, chosen_mu0_or_None)."""
    if cfg.dict_source == "grid":
        return Dictionary.from_grid(cfg.grid_lower, cfg.grid_upper, cfg.grid_points), None
    if cfg.dict_source == "file":
        return Dictionary.load(cfg.dict_path), None
    kernel = GaussianKernel(cfg.bandwidth)
    source = Ar1Source(cfg.rho, cfg.sigma_x, cfg.coherence_stream_seed)
    x = source.sequence(cfg.coherence_stream_length + 1)
    stream = np.stack([x[1:], x[:-1]], axis=1)
    if cfg.coherence_mu0 is not None:
        return Dictionary.from_coherence(stream, kernel, cfg.coherence_mu0), cfg.coherence_mu0
    mu0, d = dict_mod.coherence_threshold_for_size(
        stream, kernel, cfg.coherence_target_size
    )
    return d, mu0


def _prepare_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "config_resolved.ini"), "w", encoding="utf-8") as fh:
        fh.write(resolved_text(cfg))
    return cfg.out_dir


def cmd_dict(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    dic, mu0 = _build_dictionary(cfg)
    diag = dict_mod.validate(dic, GaussianKernel(cfg.bandwidth))
    dict_path = os.path.join(out, "dictionary.txt")
    dic.save(dict_path)
    report = {"size": dic.size, "dimension": dic.dimension}
    if mu0 is not None:
        report["coherence_mu0"] = mu0
    report.update(
        min_pairwise_distance=diag.min_pairwise_distance,
        max_coherence=diag.max_coherence,
        gram_condition_number=diag.gram_condition_number,
        near_duplicates=len(diag.near_duplicates),
    )
    write_report(report, os.path.join(out, "dictionary_report.txt"))
    for key, value in report.items():
        print(f"{key} = {value}")
    if diag.flagged:
        print("warning: near-duplicate centers detected", file=sys.stderr)
    print(f"dictionary written to {dict_path}")
    return EXIT_OK


def cmd_theory(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    dic, _ = _build_dictionary(cfg)
    exp = _experiment_config(cfg)
    optimal = estimate_optimal(
        dic, exp.kernel(), exp.input_model(), exp.sampler(),
        n_samples=cfg.n_samples, rng=cfg.seed,
    )
    model = build_theory_model(dic, exp.kernel(), exp.input_model(), optimal, cfg.step_size)
    summary = model_summary(model)
    write_report(summary, os.path.join(out, "theory_report.txt"))
    for key, value in summary.items():
        print(f"{key} = {value}")
    if summary["mean_stable"] and summary["ms_stable"]:
        c0 = np.outer(optimal.optimal_weights, optimal.optimal_weights)
        curve = predict_curve(model, c0, cfg.horizon - 1)
        curve_to_csv(curve, os.path.join(out, "theory_curve.csv"))
        print(f"predicted curve written to {out}/theory_curve.csv")
        return EXIT_OK
    print("model computed but unstable at this step size", file=sys.stderr)
    return EXIT_FAIL


def cmd_simulate(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    dic, _ = _build_dictionary(cfg)
    exp = _experiment_config(cfg)
    curve = monte_carlo(exp, dic, master_seed=cfg.seed)
    path = os.path.join(out, "empirical_curve.csv")
    curves_to_csv(curve, None, path)
    print(f"simulated {curve.runs} runs over horizon {curve.horizon}")
    print(f"empirical curve written to {path}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    if cfg.empirical_csv or cfg.theory_csv:
        if not (cfg.empirical_csv and cfg.theory_csv):
            raise ConfigError("compare from files needs both empirical_csv and theory_csv")
        emp, _ = curves_from_csv(cfg.empirical_csv)
        import csv as _csv

        theo = []
        with open(cfg.theory_csv, "r", newline="", encoding="utf-8") as fh:
            reader = _csv.reader(fh)
            next(reader)
            for row in reader:
                theo.append(float(row[1]))
        theo = np.asarray(theo)
        ss = cfg.steady_state_mse if cfg.steady_state_mse is not None else float(theo[-1])
        curve = LearningCurve(mse_empirical=emp, runs=cfg.runs, horizon=len(emp))
        predicted = PredictedCurve(
            mse=theo, emse=theo - theo.min(), steady_state_mse=ss, horizon=len(theo) - 1
        )
    else:
        dic, _ = _build_dictionary(cfg)
        exp = _experiment_config(cfg)
        model, predicted, optimal = theory_pipeline(
            exp, dic, n_samples=cfg.n_samples, seed=cfg.seed
        )
        write_report(model_summary(model), os.path.join(out, "theory_report.txt"))
        curve = monte_carlo(exp, dic, master_seed=cfg.seed)
    report = compare(curve, predicted, cfg.tolerances)
    curves_to_csv(curve, predicted, os.path.join(out, "curves.csv"))
    with open(os.path.join(out, "comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text() + "\n")
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klmskit",
        description="Gaussian KLMS filtering with a fixed dictionary: "
        "dictionary tools, convergence model, Monte Carlo simulation, comparison.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("dict", "build and validate a dictionary"),
        ("theory", "compute the convergence model report and predicted curve"),
        ("simulate", "run Monte Carlo filtering and emit the empirical curve"),
        ("compare", "run theory and simulation and score their agreement"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="configuration file path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--runs", type=int, default=None, help="Monte Carlo runs override")
        p.add_argument("--horizon", type=int, default=None, help="iterations override")
        p.add_argument("--eta", type=float, default=None, help="step size override")
        p.add_argument("--sigma", type=float, default=None, help="kernel bandwidth override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(
            cfg, seed=args.seed, out=args.out, runs=args.runs,
            horizon=args.horizon, eta=args.eta, sigma=args.sigma,
        ).validated()
        handler = {
            "dict": cmd_dict,
            "theory": cmd_theory,
            "simulate": cmd_simulate,
            "compare": cmd_compare,
        }[args.command]
        return handler(cfg)
    except (ConfigError, HorizonMismatchError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        SingularMatrixError,
        IllConditionedError,
        DivergedError,
        NonFiniteError,
        UnstableError,
    ) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KlmsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
