"""Run configuration: flat key-value file with sections, plus CLI overrides.

The format is INI: `key = value` lines grouped under [sections].  Every run
echoes its fully-resolved configuration next to its outputs, so results are
reproducible from the echo alone.
"""

import configparser
import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .experiments import Tolerances


@dataclass(frozen=True)
class RunConfig:
    # experiment
    kind: str = "wiener_poly"
    noise_std: float = 0.05
    # input model
    rho: float = 0.5
    sigma_x: float = 0.5
    # kernel / filter
    bandwidth: float = 0.25
    step_size: float = 0.05
    # dictionary
    dict_source: str = "grid"            # grid | coherence | file
    grid_lower: tuple = (-1.0, -1.0)
    grid_upper: tuple = (1.0, 1.0)
    grid_points: tuple = (5, 5)
    coherence_mu0: float | None = None   # swept to target_size when omitted
    coherence_target_size: int = 37
    coherence_stream_length: int = 4000
    coherence_stream_seed: int = 20260810
    dict_path: str | None = None
    # run
    horizon: int = 5000
    runs: int = 100
    seed: int = 1
    out_dir: str = "out"
    n_samples: int = 1_000_000
    # comparison
    tolerances: Tolerances = field(default_factory=Tolerances)
    empirical_csv: str | None = None
    theory_csv: str | None = None
    steady_state_mse: float | None = None

    def validated(self) -> "RunConfig":
        if self.kind not in ("wiener_poly", "fluid_flow"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.bandwidth <= 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.step_size <= 0:
            raise ConfigError(f"step_size must be positive, got {self.step_size}")
        if not -1.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.sigma_x <= 0:
            raise ConfigError(f"sigma_x must be positive, got {self.sigma_x}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_samples < 100_000:
            raise ConfigError(f"n_samples must be >= 1e5, got {self.n_samples}")
        if self.dict_source not in ("grid", "coherence", "file"):
            raise ConfigError(f"unknown dictionary source {self.dict_source!r}")
        if self.dict_source == "file":
            if not self.dict_path:
                raise ConfigError("dictionary source 'file' requires a path")
            if not os.path.exists(self.dict_path):
                raise ConfigError(f"dictionary file not found: {self.dict_path}")
        for path in (self.empirical_csv, self.theory_csv):
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"referenced file not found: {path}")
        return self


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split())


def load_config(path) -> RunConfig:
    """Parse a config file into a RunConfig (no validation yet)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    cfg = RunConfig()
    try:
        updates = {}
        if parser.has_section("experiment"):
            sec = parser["experiment"]
            if "kind" in sec:
                updates["kind"] = sec["kind"].strip()
            if "noise_std" in sec:
                updates["noise_std"] = sec.getfloat("noise_std")
        if parser.has_section("input"):
            sec = parser["input"]
            if "rho" in sec:
                updates["rho"] = sec.getfloat("rho")
            if "sigma_x" in sec:
                updates["sigma_x"] = sec.getfloat("sigma_x")
        if parser.has_section("kernel") and "bandwidth" in parser["kernel"]:
            updates["bandwidth"] = parser["kernel"].getfloat("bandwidth")
        if parser.has_section("filter") and "step_size" in parser["filter"]:
            updates["step_size"] = parser["filter"].getfloat("step_size")
        if parser.has_section("dictionary"):
            sec = parser["dictionary"]
            if "source" in sec:
                updates["dict_source"] = sec["source"].strip()
            if "lower" in sec:
                updates["grid_lower"] = _floats(sec["lower"])
            if "upper" in sec:
                updates["grid_upper"] = _floats(sec["upper"])
            if "points" in sec:
                updates["grid_points"] = _ints(sec["points"])
            if "mu0" in sec:
                updates["coherence_mu0"] = sec.getfloat("mu0")
            if "target_size" in sec:
                updates["coherence_target_size"] = sec.getint("target_size")
            if "stream_length" in sec:
                updates["coherence_stream_length"] = sec.getint("stream_length")
            if "stream_seed" in sec:
                updates["coherence_stream_seed"] = sec.getint("stream_seed")
            if "path" in sec:
                updates["dict_path"] = sec["path"].strip()
        if parser.has_section("run"):
            sec = parser["run"]
            if "horizon" in sec:
                updates["horizon"] = sec.getint("horizon")
            if "runs" in sec:
                updates["runs"] = sec.getint("runs")
            if "seed" in sec:
                updates["seed"] = sec.getint("seed")
            if "out" in sec:
                updates["out_dir"] = sec["out"].strip()
            if "n_samples" in sec:
                updates["n_samples"] = sec.getint("n_samples")
        if parser.has_section("tolerances"):
            sec = parser["tolerances"]
            tol = Tolerances(
                steady_state_rel=sec.getfloat("steady_state_rel", fallback=Tolerances.steady_state_rel),
                transient_rel=sec.getfloat("transient_rel", fallback=Tolerances.transient_rel),
                checkpoints=_ints(sec.get("checkpoints", "200 500 1000 2000")),
                smoothing_window=sec.getint("smoothing_window", fallback=Tolerances.smoothing_window),
                tail_fraction=sec.getfloat("tail_fraction", fallback=Tolerances.tail_fraction),
            )
            updates["tolerances"] = tol
        if parser.has_section("compare"):
            sec = parser["compare"]
            if "empirical_csv" in sec:
                updates["empirical_csv"] = sec["empirical_csv"].strip()
            if "theory_csv" in sec:
                updates["theory_csv"] = sec["theory_csv"].strip()
            if "steady_state_mse" in sec:
                updates["steady_state_mse"] = sec.getfloat("steady_state_mse")
        cfg = replace(cfg, **updates)
    except ValueError as exc:
        raise ConfigError(f"bad value in config {path}: {exc}") from exc
    return cfg


def apply_overrides(cfg: RunConfig, *, seed=None, out=None, runs=None, horizon=None,
                    eta=None, sigma=None) -> RunConfig:
    """Command-line flags win over file values."""
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if out is not None:
        updates["out_dir"] = out
    if runs is not None:
        updates["runs"] = runs
    if horizon is not None:
        updates["horizon"] = horizon
    if eta is not None:
        updates["step_size"] = eta
    if sigma is not None:
        updates["bandwidth"] = sigma
    return replace(cfg, **updates)


def resolved_text(cfg: RunConfig) -> str:
    """Render the fully-resolved configuration back to the file format."""
    tol = cfg.tolerances
    lines = [
        "[experiment]",
        f"kind = {cfg.kind}",
        f"noise_std = {cfg.noise_std!r}",
        "",
        "[input]",
        f"rho = {cfg.rho!r}",
        f"sigma_x = {cfg.sigma_x!r}",
        "",
        "[kernel]",
        f"bandwidth = {cfg.bandwidth!r}",
        "",
        "[filter]",
        f"step_size = {cfg.step_size!r}",
        "",
        "[dictionary]",
        f"source = {cfg.dict_source}",
    ]
    if cfg.dict_source == "grid":
        lines += [
            "lower = " + " ".join(repr(v) for v in cfg.grid_lower),
            "upper = " + " ".join(repr(v) for v in cfg.grid_upper),
            "points = " + " ".join(str(v) for v in cfg.grid_points),
        ]
    elif cfg.dict_source == "coherence":
        if cfg.coherence_mu0 is not None:
            lines.append(f"mu0 = {cfg.coherence_mu0!r}")
        lines += [
            f"target_size = {cfg.coherence_target_size}",
            f"stream_length = {cfg.coherence_stream_length}",
            f"stream_seed = {cfg.coherence_stream_seed}",
        ]
    else:
        lines.append(f"path = {cfg.dict_path}")
    lines += [
        "",
        "[run]",
        f"horizon = {cfg.horizon}",
        f"runs = {cfg.runs}",
        f"seed = {cfg.seed}",
        f"out = {cfg.out_dir}",
        f"n_samples = {cfg.n_samples}",
        "",
        "[tolerances]",
        f"steady_state_rel = {tol.steady_state_rel!r}",
        f"transient_rel = {tol.transient_rel!r}",
        "checkpoints = " + " ".join(str(c) for c in tol.checkpoints),
        f"smoothing_window = {tol.smoothing_window}",
        f"tail_fraction = {tol.tail_fraction!r}",
    ]
    if cfg.empirical_csv or cfg.theory_csv:
        lines += ["", "[compare]"]
        if cfg.empirical_csv:
            lines.append(f"empirical_csv = {cfg.empirical_csv}")
        if cfg.theory_csv:
            lines.append(f"theory_csv = {cfg.theory_csv}")
        if cfg.steady_state_mse is not None:
            lines.append(f"steady_state_mse = {cfg.steady_state_mse!r}")
    return "\n".join(lines) + "\n"
