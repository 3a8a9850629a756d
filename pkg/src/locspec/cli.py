"""Command-line front end.

Every run reads one config file (JSON or TOML), writes its artifacts and a
``manifest.json`` under ``--out-dir``, and exits with

* 0 on success,
* 2 for configuration errors,
* 3 for invalid models (stability or positivity),
* 4 when a verification criterion fails (the report is still written).

``locspec replay MANIFEST --out-dir DIR`` re-runs a recorded command from the
resolved config stored in its manifest.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .curves import CurveError
from .io import ConfigFileError, load_config, read_sample_csv, write_csv, write_json
from .kernels import SmoothingKernel
from .process import InvalidModelError, TvArmaModel, check_model, simulate
from .spectral import (
    FrequencyGrid,
    classical_periodogram,
    functional_from_spec,
    norms,
    preperiodogram_matrix,
    spectral_mean_freq,
    spectral_mean_lag,
    taper_from_spec,
    theoretical_functional,
)
from .verify import ConfigError, McConfig, run, worker_hint
from .whittle import (
    BandError,
    IllConditionedError,
    OptimizerConfig,
    ParameterError,
    SpectralFamily,
    default_bandwidth,
    fit_local_whittle,
    fit_whittle,
    local_yule_walker,
)

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_VERIFY = 0, 2, 3, 4

COMMANDS = {
    "simulate": None,
    "spectral": ("preperiodogram", "mean", "norms"),
    "fit": ("whittle", "local-whittle", "yule-walker"),
    "verify": ("clt", "rate", "bias", "maxbound", "tail"),
}


class CliConfigError(ValueError):
    pass


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise CliConfigError(f"config is missing required key {key!r}")
    return cfg[key]


def _model(cfg: dict) -> TvArmaModel:
    return TvArmaModel.from_spec(_require(cfg, "model"))


def _sample(cfg: dict, base: Path) -> np.ndarray:
    """Sample from ``sample = {path}`` or simulated from ``model``, ``n`` and ``seed``."""
    src = cfg.get("sample")
    if src is not None:
        path = Path(src["path"] if isinstance(src, dict) else src)
        return read_sample_csv(path if path.is_absolute() else base / path)
    model = check_model(_model(cfg))
    n = int(_require(cfg, "n"))
    return simulate(model, n, seed=int(cfg.get("seed", 0)), burn_in=cfg.get("burn_in")).values


def _grid(cfg: dict, n: int, phi=None) -> FrequencyGrid:
    spec = cfg.get("grid")
    if spec is None:
        return FrequencyGrid.exact_for(phi, n) if phi is not None else FrequencyGrid.for_lags(n)
    return FrequencyGrid.trapezoid(int(spec["M"]))


# -- commands ---------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path, ctx: dict) -> tuple[int, list[Path]]:
    model = check_model(_model(cfg))
    n = int(_require(cfg, "n"))
    if n < 1:
        raise CliConfigError("n must be >= 1")
    sample = simulate(model, n, seed=int(cfg.get("seed", 0)), burn_in=cfg.get("burn_in"))
    path = write_csv(out / "sample.csv", ["t", "x"], zip(range(1, n + 1), sample.values))
    return EXIT_OK, [path]


def cmd_spectral(sub: str, cfg: dict, out: Path, ctx: dict) -> tuple[int, list[Path]]:
    taper = taper_from_spec(cfg.get("taper"))
    if sub == "norms":
        specs = _require(cfg, "functionals")
        n = cfg.get("n")
        rows = []
        for i, spec in enumerate(specs):
            phi = functional_from_spec(spec)
            rows.append({"name": spec.get("name", f"phi{i}") if isinstance(spec, dict) else str(spec),
                         "functional": phi.to_dict(),
                         "norms": norms(phi, n=None if n is None else int(n), taper=taper)})
        return EXIT_OK, [write_json(out / "norms.json", {"records": rows})]

    x = _sample(cfg, ctx["base"])
    n = len(x)
    paths = []
    if sub == "preperiodogram":
        grid = _grid(cfg, n)
        times = [int(t) for t in cfg.get("times", [1, (n + 1) // 2, n])]
        J = preperiodogram_matrix(x, grid, taper, times=times)
        for t, row in zip(times, J):
            paths.append(write_csv(out / f"preperiodogram_t{t}.csv", ["lambda", "value"], zip(grid.nodes, row)))
        if cfg.get("stationary_check", False):
            full = preperiodogram_matrix(x, grid, None)
            dev = float(np.max(np.abs(full.mean(axis=0) - classical_periodogram(x, grid))))
            paths.append(write_json(out / "periodogram_identity.json",
                                    {"name": "max_abs_time_average_minus_periodogram", "value": dev,
                                     "grid_M": grid.size, "k_max": n - 1, "tolerances": {"max_abs": 1e-10}}))
        return EXIT_OK, paths

    # mean
    specs = cfg.get("functionals")
    if not specs:
        raise CliConfigError("spectral mean needs a nonempty 'functionals' list")
    model = check_model(_model(cfg)) if "model" in cfg else None
    records = []
    for i, spec in enumerate(specs):
        phi = functional_from_spec(spec)
        grid = _grid(cfg, n, phi)
        f_freq = spectral_mean_freq(x, phi, taper, grid)
        f_lag = spectral_mean_lag(x, phi, taper)
        rec = {"name": spec.get("name", f"phi{i}") if isinstance(spec, dict) else str(spec),
               "value": f_lag, "value_frequency_domain": f_freq, "grid_M": grid.size,
               "k_max": n - 1 if phi.max_lag is None else min(n - 1, phi.max_lag),
               "tolerances": {"dual_evaluation": 1e-8}}
        if model is not None:
            F = theoretical_functional(model, phi, taper)
            rec.update(F=F, E_n=math.sqrt(n) * (f_lag - F))
        records.append(rec)
    return EXIT_OK, [write_json(out / "mean.json", {"n": n, "records": records})]


def _u_grid(cfg: dict, b: float) -> np.ndarray:
    spec = cfg.get("u_grid", {"points": 21})
    if isinstance(spec, dict):
        pts = int(spec.get("points", 21))
        lo = float(spec.get("start", b / 2.0))
        hi = float(spec.get("stop", 1.0 - b / 2.0))
        return np.linspace(lo, hi, pts)
    return np.asarray(spec, dtype=float)


def _bandwidth(cfg: dict, n: int) -> float:
    b = cfg.get("bandwidth", "auto")
    return default_bandwidth(n) if b == "auto" else float(b)


def cmd_fit(sub: str, cfg: dict, out: Path, ctx: dict) -> tuple[int, list[Path]]:
    x = _sample(cfg, ctx["base"])
    n = len(x)
    if sub == "whittle":
        family = SpectralFamily.from_spec(_require(cfg, "family"))
        res = fit_whittle(x, family, OptimizerConfig.from_spec(cfg.get("optimizer")), _grid(cfg, n) if "grid" in cfg else None)
        return EXIT_OK, [write_json(out / "fit.json", {"n": n, **res.to_dict()})]

    kernel = SmoothingKernel(cfg.get("kernel", "epanechnikov"))
    b = _bandwidth(cfg, n)
    u = _u_grid(cfg, b)
    if sub == "yule-walker":
        p = int(_require(cfg, "p"))
        rows = []
        for ui in u:
            yw = local_yule_walker(x, p, kernel, b, float(ui))
            flags = "negative-variance" if yw.negative_variance else ""
            rows.append([ui, *yw.alpha.tolist(), yw.sigma2, yw.condition, flags])
        header = ["u"] + [f"alpha_{j}" for j in range(1, p + 1)] + ["sigma2", "condition", "flags"]
        return EXIT_OK, [write_csv(out / "yule_walker.csv", header, rows)]

    family = SpectralFamily.from_spec(_require(cfg, "family"))
    res = fit_local_whittle(x, family, kernel, b, u, OptimizerConfig.from_spec(cfg.get("optimizer")),
                            warm_start=bool(cfg.get("warm_start", True)), workers=ctx["workers"])
    names = ([f"alpha_{j}" for j in range(1, family.p + 1)] + [f"beta_{j}" for j in range(1, family.q + 1)]
             + ["sigma2"])
    p1 = write_csv(out / "local_fit.csv", ["u", *names, "grad_norm", "flags"], res.rows())
    summary = {"n": n, "b": b, "kernel": kernel.kind, "family": family.tag, "points": len(u),
               "flagged": int(sum(1 for f in res.flags if f)),
               "max_grad_norm": float(np.nanmax(res.grad_norm))}
    if res.yule_walker is not None:
        summary["max_abs_diff_yule_walker"] = float(np.nanmax(np.abs(res.theta - res.yule_walker)))
    return EXIT_OK, [p1, write_json(out / "local_fit.json", summary)]


def cmd_verify(sub: str, cfg: dict, out: Path, ctx: dict) -> tuple[int, list[Path]]:
    cfg = dict(cfg)
    exp = cfg.setdefault("experiment", sub)
    if exp != sub:
        raise CliConfigError(f"config experiment {exp!r} does not match subcommand {sub!r}")
    mc = McConfig.from_dict(cfg, workers=ctx["workers"])
    report = run(mc)
    ctx["wall_clock_detail"] = report.wall_clock
    paths = [write_json(out / "report.json", report.to_dict())]
    for name, (header, rows) in sorted(report.tables.items()):
        paths.append(write_csv(out / f"{name}.csv", header, rows))
    if not report.passed:
        print(f"verification failed: {', '.join(report.failed)}", file=sys.stderr)
        return EXIT_VERIFY, paths
    return EXIT_OK, paths


# -- driver -----------------------------------------------------------------


def execute(command: str, sub: str | None, cfg: dict, out: Path, *, config_path: str | None,
            workers: int, base: Path) -> int:
    """Run one command and write its manifest; returns the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    ctx = {"workers": workers, "base": base}
    t0 = time.perf_counter()
    if command == "simulate":
        code, paths = cmd_simulate(cfg, out, ctx)
    elif command == "spectral":
        code, paths = cmd_spectral(sub, cfg, out, ctx)
    elif command == "fit":
        code, paths = cmd_fit(sub, cfg, out, ctx)
    else:
        code, paths = cmd_verify(sub, cfg, out, ctx)
    manifest = {
        "command": command if sub is None else f"{command} {sub}",
        "config_path": config_path,
        "config": cfg,
        "base_dir": str(base),
        "outputs": [p.name for p in paths],
        "seed": cfg.get("seed"),
        "version": __version__,
        "workers": workers,
        "wall_clock_seconds": time.perf_counter() - t0,
        "exit_code": code,
    }
    write_json(out / "manifest.json", manifest)
    return code


def _error_code(exc: BaseException) -> int:
    if isinstance(exc, InvalidModelError):
        return EXIT_MODEL
    if isinstance(exc, (ConfigError, ConfigFileError, CliConfigError, CurveError, BandError, ParameterError,
                        IllConditionedError, ValueError, KeyError, TypeError, IndexError)):
        return EXIT_CONFIG
    raise exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locspec", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"locspec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON or TOML config file")
    common.add_argument("--out-dir", required=True, help="directory for all outputs")
    common.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
    common.add_argument("--threads", type=int, default=None, help="worker-count hint (LOCSPEC_THREADS)")
    cmds = parser.add_subparsers(dest="command", required=True)
    cmds.add_parser("simulate", parents=[common], help="simulate a tvARMA sample")
    for name, subs in COMMANDS.items():
        if subs is None:
            continue
        p = cmds.add_parser(name, help=f"{name} subcommands")
        inner = p.add_subparsers(dest="sub", required=True)
        for s in subs:
            inner.add_parser(s, parents=[common])
    rp = cmds.add_parser("replay", help="re-run a command from its manifest")
    rp.add_argument("manifest")
    rp.add_argument("--out-dir", required=True)
    rp.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    workers = args.threads if args.threads is not None else worker_hint()
    if workers < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "replay":
            man = load_config(args.manifest)
            for key in ("command", "config"):
                if key not in man:
                    raise CliConfigError(f"manifest is missing {key!r}")
            parts = man["command"].split()
            command, sub = parts[0], (parts[1] if len(parts) > 1 else None)
            return execute(command, sub, man["config"], Path(args.out_dir),
                           config_path=man.get("config_path"), workers=workers,
                           base=Path(man.get("base_dir", ".")))
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg["seed"] = int(args.seed_override)
        base = Path(args.config).resolve().parent
        return execute(args.command, getattr(args, "sub", None), cfg, Path(args.out_dir),
                       config_path=str(Path(args.config).resolve()), workers=workers, base=base)
    except Exception as exc:  # mapped to the exit-code contract
        code = _error_code(exc)
        kind = "invalid model" if code == EXIT_MODEL else "config error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
