"""Command line front end.

Subcommands
-----------
``simulate``
    Draw one synthetic path and write it as CSV.
``moments``
    Closed form stationary return moments for one model setting.
``leadlag``
    Analytic lead-lag correlation profile, plus the empirical profile when
    a data file is given.
``fit``
    Posterior sampling on a return series; writes draws, a summary table,
    and convergence diagnostics.
``verify``
    Monte Carlo cross check of every closed form over a parameter grid;
    writes the discrepancy table.
``report``
    Consolidated single dataset pipeline: sample statistics, empirical and
    posterior lead-lag profiles, and the fit summary.

Settings come from an INI style config file (sections ``[run]``,
``[params]``, ``[priors]``, ``[mcmc]``) with command line flags taking
precedence; ``--set section.key=value`` reaches any single setting.  Every
output file starts with a ``# spec=..., seed=..., version=...`` metadata
line, output files are never overwritten without ``--force``, and the
default output directory honours the ``STOCHVOL_OUTPUT_DIR`` environment
variable.  Errors print one ``error: <category>: <message>`` line to
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import os
import sys

import numpy as np

from . import __version__
from .empirical import empirical_leadlag, load_series_csv, summary_stats
from .errors import (
    ConfigError,
    DataError,
    InferenceError,
    MomentExistenceError,
    StochvolError,
    ValidationError,
)
from .inference import McmcConfig, PriorConfig, fit, posterior_leadlag
from .leadlag import leadlag_profile
from .models import ModelSpec
from .moments import moments
from .oracle import run_discrepancy_report, write_discrepancy_csv
from .simulate import RngPolicy, simulate_path

_PARAM_KEYS = ("alpha", "phi", "sigma", "rho", "nu", "lam", "pi1", "pi2")
_PRIOR_KEYS = tuple(PriorConfig.__dataclass_fields__)
_MCMC_INT = ("n_chains", "burn_in", "n_keep", "thin", "seed", "adapt_window", "h_store")
_MCMC_FLOAT = ("target_accept",)
_MCMC_BOOL = ("prior_only",)
_RUN_INT = ("seed", "steps", "max_lag")
_RUN_STR = ("model", "input", "output_dir")
_RUN_BOOL = ("force",)

_EXIT_BY_CATEGORY = {
    "config-error": 2,
    "data-error": 3,
    "model-error": 4,
    "inference-error": 5,
    "io-error": 6,
}


# --------------------------------------------------------------------------
# settings


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _put(settings: dict, section: str, key: str, raw: str) -> None:
    """Type check one assignment and store it."""
    try:
        if section == "params":
            if key not in _PARAM_KEYS:
                raise ConfigError(f"unknown parameter {key!r}")
            settings["params"][key] = float(raw)
        elif section == "priors":
            if key not in _PRIOR_KEYS:
                raise ConfigError(f"unknown prior setting {key!r}")
            settings["priors"][key] = float(raw)
        elif section == "mcmc":
            if key in _MCMC_INT:
                settings["mcmc"][key] = int(raw)
            elif key in _MCMC_FLOAT:
                settings["mcmc"][key] = float(raw)
            elif key in _MCMC_BOOL:
                settings["mcmc"][key] = _parse_bool(raw)
            else:
                raise ConfigError(f"unknown sampler setting {key!r}")
        elif section == "run":
            if key in _RUN_INT:
                settings["run"][key] = int(raw)
            elif key in _RUN_STR:
                settings["run"][key] = raw
            elif key in _RUN_BOOL:
                settings["run"][key] = _parse_bool(raw)
            else:
                raise ConfigError(f"unknown run setting {key!r}")
        else:
            raise ConfigError(f"unknown section {section!r}")
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from None


def _load_config_file(settings: dict, path: str) -> None:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        for key, raw in parser.items(section):
            _put(settings, section.lower(), key.lower(), raw)


def _apply_set_overrides(settings: dict, pairs: list[str]) -> None:
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip().lower()
        if "." in key:
            section, key = key.split(".", 1)
        else:
            section = "params"
        _put(settings, section, key, raw.strip())


def _gather_settings(args: argparse.Namespace) -> dict:
    settings: dict = {"run": {}, "params": {}, "priors": {}, "mcmc": {}}
    if args.config is not None:
        _load_config_file(settings, args.config)
    _apply_set_overrides(settings, args.set or [])
    if args.model is not None:
        settings["run"]["model"] = args.model
    if args.input is not None:
        settings["run"]["input"] = args.input
    if args.output_dir is not None:
        settings["run"]["output_dir"] = args.output_dir
    if args.seed is not None:
        settings["run"]["seed"] = args.seed
    if args.steps is not None:
        settings["run"]["steps"] = args.steps
    if args.max_lag is not None:
        settings["run"]["max_lag"] = args.max_lag
    if args.force:
        settings["run"]["force"] = True
    run = settings["run"]
    run.setdefault("seed", 0)
    run.setdefault("force", False)
    if "output_dir" not in run:
        run["output_dir"] = os.environ.get("STOCHVOL_OUTPUT_DIR", ".")
    return settings


def _build_spec(settings: dict) -> ModelSpec:
    run = settings["run"]
    if "model" not in run:
        raise ConfigError("a model is required (--model, e.g. M2.1)")
    params = settings["params"]
    missing = [k for k in ("alpha", "phi", "sigma") if k not in params]
    if missing:
        raise ConfigError(
            "model parameters required: " + ", ".join(missing)
            + " (pass with --set, e.g. --set alpha=-8)"
        )
    return ModelSpec.create(run["model"], **params)


def _build_mcmc(settings: dict) -> McmcConfig:
    kwargs = dict(settings["mcmc"])
    kwargs.setdefault("seed", settings["run"]["seed"])
    return McmcConfig(**kwargs)


def _build_priors(settings: dict) -> PriorConfig:
    return PriorConfig(**settings["priors"])


# --------------------------------------------------------------------------
# output plumbing


def _fmt(x) -> str:
    """Full precision, round trippable text for one numeric cell."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _spec_text(spec: ModelSpec) -> str:
    p = spec.params
    parts = [f"alpha={_fmt(p.alpha)}", f"phi={_fmt(p.phi)}", f"sigma={_fmt(p.sigma)}",
             f"rho={_fmt(p.rho)}"]
    if spec.model.has_mixing:
        parts += [f"nu={_fmt(p.nu)}", f"lam={_fmt(p.lam)}"]
    if spec.model.has_jumps:
        parts += [f"pi1={_fmt(p.pi1)}", f"pi2={_fmt(p.pi2)}"]
    return f"{spec.model.value}({';'.join(parts)})"


def _open_output(settings: dict, name: str):
    run = settings["run"]
    out_dir = run["output_dir"]
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from None
    path = os.path.join(out_dir, name)
    if os.path.exists(path) and not run["force"]:
        raise ConfigError(f"output exists: {path} (use --force to overwrite)")
    return open(path, "w", newline="")


def _write_header(fh, spec_text: str, seed: int, extra: dict | None = None) -> None:
    line = f"# spec={spec_text}, seed={seed}, version={__version__}"
    for key, value in (extra or {}).items():
        line += f", {key}={value}"
    fh.write(line + "\n")


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()[:12]


def _require_input(settings: dict) -> str:
    path = settings["run"].get("input")
    if path is None:
        raise ConfigError("an input file is required (--input)")
    if not os.path.isfile(path):
        raise ConfigError(f"input file not found: {path}")
    return path


def _load_returns(path: str) -> np.ndarray:
    """Read a return series from a date series file or a simulated path file."""
    with open(path, newline="") as fh:
        for row in fh:
            if not row.startswith("#"):
                first = row.strip().lower()
                break
        else:
            raise DataError(f"{path}: empty file")
    if first.startswith("t,return"):
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(r for r in fh if not r.startswith("#"))
            header = next(reader)
            col = [c.strip().lower() for c in header].index("return")
            for row in reader:
                if row and row[0].strip():
                    rows.append(float(row[col]))
        if not rows:
            raise DataError(f"{path}: no usable rows")
        r = np.asarray(rows, dtype=float)
        if not np.all(np.isfinite(r)):
            raise DataError(f"{path}: returns must be finite")
        return r - r.mean()
    return load_series_csv(path, demean=True).returns


# --------------------------------------------------------------------------
# subcommands


def _cmd_simulate(settings: dict) -> int:
    spec = _build_spec(settings)
    run = settings["run"]
    steps = run.get("steps", 1000)
    if steps < 1:
        raise ConfigError(f"steps must be positive, got {steps}")
    seed = run["seed"]
    path = simulate_path(spec, steps, policy=RngPolicy(seed=seed, stream=0))
    with _open_output(settings, "path.csv") as fh:
        _write_header(fh, _spec_text(spec), seed, {"steps": steps})
        writer = csv.writer(fh, lineterminator="\n")
        jumps = spec.model.has_jumps
        writer.writerow(["t", "return", "logvol"] + (["jump_r", "jump_h"] if jumps else []))
        for t in range(steps):
            row = [t, _fmt(path.returns[t]), _fmt(path.logvol[t])]
            if jumps:
                row += [_fmt(path.jump_r[t]), _fmt(path.jump_h[t])]
            writer.writerow(row)
        name = fh.name
    print(f"wrote {name}")
    return 0


def _cmd_moments(settings: dict) -> int:
    spec = _build_spec(settings)
    mom = moments(spec)
    with _open_output(settings, "moments.csv") as fh:
        _write_header(fh, _spec_text(spec), settings["run"]["seed"])
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "m2", "m3", "m4", "skewness", "kurtosis", "mu"])
        writer.writerow([
            spec.model.value, _fmt(mom.m2), _fmt(mom.m3), _fmt(mom.m4),
            _fmt(mom.skewness), _fmt(mom.kurtosis), _fmt(mom.mu),
        ])
        name = fh.name
    print(f"wrote {name}")
    return 0


def _cmd_leadlag(settings: dict) -> int:
    spec = _build_spec(settings)
    run = settings["run"]
    max_lag = run.get("max_lag", 20)
    prof = leadlag_profile(spec, max_lag)
    extra = {"max_lag": max_lag}
    input_path = run.get("input")
    emp = None
    if input_path is not None:
        if not os.path.isfile(input_path):
            raise ConfigError(f"input file not found: {input_path}")
        emp = empirical_leadlag(_load_returns(input_path), max_lag)
        extra["input_sha256"] = _sha256_file(input_path)
    with _open_output(settings, "leadlag.csv") as fh:
        _write_header(fh, _spec_text(spec), run["seed"], extra)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lag", "value", "source"])
        for lag, rho in zip(prof.lags, prof.rhos):
            writer.writerow([int(lag), _fmt(rho), "analytic"])
        if emp is not None:
            for lag, rho in zip(emp.lags, emp.rhos):
                writer.writerow([int(lag), _fmt(rho), "empirical"])
            for lag in emp.lags:
                writer.writerow([int(lag), _fmt(emp.band), "band_upper"])
                writer.writerow([int(lag), _fmt(-emp.band), "band_lower"])
        name = fh.name
    print(f"wrote {name}")
    return 0


def _write_fit_outputs(settings: dict, spec_text: str, result, extra: dict) -> list[str]:
    run = settings["run"]
    names = list(result.draws)
    written = []

    with _open_output(settings, "fit_summary.csv") as fh:
        _write_header(fh, spec_text, result.config.seed, extra)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "mean", "2.5%", "97.5%"])
        for row in result.summary():
            writer.writerow([row.name, _fmt(row.mean), _fmt(row.q_lo), _fmt(row.q_hi)])
        written.append(fh.name)

    with _open_output(settings, "fit_draws.csv") as fh:
        _write_header(fh, spec_text, result.config.seed, extra)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chain", "draw"] + names)
        n_chains, n_draws = result.draws[names[0]].shape
        cols = [result.draws[name] for name in names]
        for c in range(n_chains):
            for d in range(n_draws):
                writer.writerow([c, d] + [_fmt(col[c, d]) for col in cols])
        written.append(fh.name)

    with _open_output(settings, "fit_diagnostics.csv") as fh:
        _write_header(fh, spec_text, result.config.seed, extra)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["statistic", "name", "value"])
        try:
            for name, value in result.psrf().items():
                writer.writerow(["psrf", name, _fmt(value)])
        except InferenceError as exc:
            writer.writerow(["flag", "psrf_unavailable", str(exc)])
        for block, rate in result.acceptance.items():
            writer.writerow(["acceptance", block, _fmt(rate)])
        written.append(fh.name)
    return written


def _cmd_fit(settings: dict) -> int:
    spec_text, model = _fit_target(settings)
    input_path = _require_input(settings)
    returns = _load_returns(input_path)
    config = _build_mcmc(settings)
    priors = _build_priors(settings)
    result = fit(model, returns, config=config, priors=priors)
    extra = {
        "input_sha256": _sha256_file(input_path),
        "chains": config.n_chains,
        "burn_in": config.burn_in,
        "keep": config.n_keep,
        "thin": config.thin,
    }
    for name in _write_fit_outputs(settings, spec_text, result, extra):
        print(f"wrote {name}")
    return 0


def _fit_target(settings: dict) -> tuple[str, str]:
    """Model name for fitting; parameter values are estimated, not given."""
    run = settings["run"]
    if "model" not in run:
        raise ConfigError("a model is required (--model, e.g. M2.1)")
    spec_text = run["model"]
    if settings["params"]:
        pairs = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(settings["params"].items()))
        spec_text += f"({pairs})"
    return spec_text, run["model"]


def _cmd_verify(settings: dict) -> int:
    run = settings["run"]
    steps = run.get("steps", 200_000)
    if steps < 1000:
        raise ConfigError(f"verify needs at least 1000 steps, got {steps}")
    max_lag = run.get("max_lag", 2)
    seed = run["seed"]
    report = run_discrepancy_report(n=steps, seed=seed, max_lag=max_lag)
    with _open_output(settings, "discrepancy.csv") as fh:
        _write_header(fh, "verify-grid", seed, {"steps": steps, "max_lag": max_lag})
        write_discrepancy_csv(report, fh)
        name = fh.name
    n_flagged = len(report.flagged)
    n_undoc = len(report.undocumented_flags)
    print(f"wrote {name}")
    print(f"{len(report.rows)} checks, {n_flagged} flagged, {n_undoc} undocumented")
    return 0 if n_undoc == 0 else 1


def _cmd_report(settings: dict) -> int:
    spec_text, model = _fit_target(settings)
    input_path = _require_input(settings)
    returns = _load_returns(input_path)
    run = settings["run"]
    max_lag = run.get("max_lag", 20)
    digest = _sha256_file(input_path)
    seed = run["seed"]

    stats = summary_stats(returns)
    with _open_output(settings, "report_stats.csv") as fh:
        _write_header(fh, spec_text, seed, {"input_sha256": digest})
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "mean", "m2", "m3", "m4", "skewness", "kurtosis"])
        writer.writerow([stats.n, _fmt(stats.mean), _fmt(stats.m2), _fmt(stats.m3),
                         _fmt(stats.m4), _fmt(stats.skewness), _fmt(stats.kurtosis)])
        stats_name = fh.name
    print(f"wrote {stats_name}")

    config = _build_mcmc(settings)
    priors = _build_priors(settings)
    result = fit(model, returns, config=config, priors=priors)
    extra = {
        "input_sha256": digest,
        "chains": config.n_chains,
        "burn_in": config.burn_in,
        "keep": config.n_keep,
        "thin": config.thin,
    }
    for name in _write_fit_outputs(settings, spec_text, result, extra):
        print(f"wrote {name}")

    emp = empirical_leadlag(returns, max_lag)
    post = posterior_leadlag(result, returns, max_lag)
    with _open_output(settings, "report_leadlag.csv") as fh:
        _write_header(fh, spec_text, seed, {"input_sha256": digest, "max_lag": max_lag})
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lag", "value", "source"])
        for lag, rho in zip(emp.lags, emp.rhos):
            writer.writerow([int(lag), _fmt(rho), "empirical"])
        for lag, rho in zip(post.lags, post.rhos):
            writer.writerow([int(lag), _fmt(rho), "model"])
        for lag in emp.lags:
            writer.writerow([int(lag), _fmt(emp.band), "band_upper"])
            writer.writerow([int(lag), _fmt(-emp.band), "band_lower"])
        name = fh.name
    print(f"wrote {name}")
    return 0


# --------------------------------------------------------------------------
# entry point


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochvol",
        description="Simulate, analyse, and fit discrete time stochastic "
                    "volatility models with correlated errors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "draw one synthetic path and write it as CSV",
        "moments": "closed form stationary return moments",
        "leadlag": "analytic (and optionally empirical) lead-lag profile",
        "fit": "posterior sampling on a return series",
        "verify": "Monte Carlo cross check of the closed forms",
        "report": "stats, lead-lag profiles, and fit for one dataset",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--model", help="model name, e.g. M2.1 or M3.2")
        p.add_argument("--input", help="input CSV (date,price or date,return, "
                                       "or a simulated path file)")
        p.add_argument("--output-dir", help="output directory (default: "
                                            "$STOCHVOL_OUTPUT_DIR or '.')")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--steps", type=int,
                       help="simulate: path length; verify: sampler steps")
        p.add_argument("--max-lag", type=int, help="half width of the lag window")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing output files")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="set any config value, e.g. alpha=-8 or "
                            "mcmc.n_chains=2 (repeatable)")
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "moments": _cmd_moments,
    "leadlag": _cmd_leadlag,
    "fit": _cmd_fit,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def _categorize(exc: Exception) -> str:
    if isinstance(exc, ConfigError):
        return "config-error"
    if isinstance(exc, DataError):
        return "data-error"
    if isinstance(exc, (ValidationError, MomentExistenceError)):
        return "model-error"
    if isinstance(exc, InferenceError):
        return "inference-error"
    if isinstance(exc, OSError):
        return "io-error"
    return "error"


def main(argv: list[str] | None = None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        settings = _gather_settings(args)
        return _COMMANDS[args.command](settings)
    except (StochvolError, OSError) as exc:
        category = _categorize(exc)
        print(f"error: {category}: {exc}", file=sys.stderr)
        return _EXIT_BY_CATEGORY.get(category, 1)


if __name__ == "__main__":
    sys.exit(main())
