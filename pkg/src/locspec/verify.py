"""Seeded Monte Carlo experiments for the limit results.

Every replication draws from its own counter-based stream keyed by
``(base seed, n, replication)``.  Replications are simulated in fixed-size
chunks which may run on a thread pool; results are reassembled in
replication order before any reduction, so reports do not depend on the
worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import log_ndtr

from .curves import CoefficientCurve
from .kernels import SmoothingKernel, TimeKernel
from .process import TvArmaModel, check_model, simulate_batch, transfer_matrix
from .spectral import (
    FrequencyKernel,
    Indicator,
    SpectralFunctional,
    Taper,
    clt_covariance,
    expected_spectral_mean,
    functional_from_spec,
    norms,
    spectral_means,
    taper_from_spec,
    theoretical_functional,
    TrigSeries,
)
from .whittle import SpectralFamily, default_bandwidth, local_yule_walker_curve, score_functional

EXPERIMENTS = ("clt", "rate", "bias", "maxbound", "tail")

DEFAULT_R = {"clt": 2000, "rate": 100, "bias": 2, "maxbound": 5000, "tail": 10000}

DEFAULT_TOLERANCES = {
    "clt": {"se_multiple": 3.0},
    "rate": {"slope_low": -0.55, "slope_high": -0.25},
    "bias": {"slack": 0.10, "floor": 1e-9},
    "maxbound": {"slack": 0.10, "se_multiple": 3.0},
    "tail": {"p_at_4sd": 1e-3, "se_multiple": 3.0, "min_count": 50},
}


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def worker_hint(default: int = 1) -> int:
    """Worker count from ``LOCSPEC_THREADS`` (results never depend on it)."""
    raw = os.environ.get("LOCSPEC_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


@dataclass(frozen=True, eq=False)
class McConfig:
    experiment: str
    model: TvArmaModel
    n_list: tuple[int, ...]
    R: int
    seed: int = 0
    functionals: tuple[SpectralFunctional, ...] = ()
    taper: Taper | None = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    chunk: int = 50
    workers: int = 1
    source: dict | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if int(self.R) < 2:
            raise ConfigError(f"R = {self.R}: at least 2 replications are required")
        ns = [int(n) for n in self.n_list]
        if not ns or any(n < 2 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n list must be nonempty, strictly ascending and >= 2")
        object.__setattr__(self, "n_list", tuple(ns))
        tol = {**DEFAULT_TOLERANCES[self.experiment], **dict(self.tolerances)}
        for key, val in tol.items():
            if key in ("slope_low", "slope_high"):
                continue
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key!r} must be positive, got {val!r}")
        if tol.get("slope_low", -1.0) >= tol.get("slope_high", 0.0):
            raise ConfigError("slope_low must be below slope_high")
        object.__setattr__(self, "tolerances", tol)
        if self.chunk < 1:
            raise ConfigError("chunk must be >= 1")
        if self.experiment in ("clt", "bias", "tail") and not self.functionals:
            raise ConfigError(f"{self.experiment} experiment needs at least one functional")
        if self.experiment == "tail" and len(self.functionals) != 1:
            raise ConfigError("tail experiment takes a single functional")

    @classmethod
    def from_dict(cls, spec: dict, workers: int | None = None) -> "McConfig":
        spec = dict(spec)
        exp = spec.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")
        if "model" not in spec:
            raise ConfigError("experiment config needs a 'model'")
        n_list = spec.get("n", spec.get("n_list"))
        if n_list is None:
            raise ConfigError("experiment config needs 'n'")
        if isinstance(n_list, int):
            n_list = [n_list]
        try:
            funcs = tuple(functional_from_spec(f) for f in spec.get("functionals", ()))
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad functional: {exc}") from exc
        return cls(
            experiment=exp,
            model=TvArmaModel.from_spec(spec["model"]),
            n_list=tuple(n_list),
            R=int(spec.get("R", DEFAULT_R[exp])),
            seed=int(spec.get("seed", 0)),
            functionals=funcs,
            taper=taper_from_spec(spec.get("taper")),
            tolerances=dict(spec.get("tolerances", {})),
            options=dict(spec.get("options", {})),
            chunk=int(spec.get("chunk", 50)),
            workers=worker_hint() if workers is None else int(workers),
            source=spec,
        )

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model.to_dict(),
            "n": list(self.n_list),
            "R": self.R,
            "seed": self.seed,
            "functionals": [f.to_dict() for f in self.functionals],
            "taper": None if self.taper is None else self.taper.to_dict(),
            "tolerances": dict(self.tolerances),
            "options": dict(self.options),
            "chunk": self.chunk,
        }


@dataclass
class Criterion:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": _num(self.value),
                "threshold": _num(self.threshold), "detail": self.detail}


def _num(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_num(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    return x


@dataclass
class McReport:
    """Statistics, targets and pass/fail per criterion.

    ``wall_clock`` is kept out of :meth:`to_dict` so that the serialized
    report is bit-reproducible; the CLI records it in the run manifest.
    """

    experiment: str
    config: dict
    per_n: list[dict]
    targets: dict
    criteria: list[Criterion]
    tables: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.criteria if not c.passed]

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "criteria": [c.to_dict() for c in self.criteria],
            "per_n": _num(self.per_n),
            "targets": _num(self.targets),
            "config": self.config,
        }


# -- replication machinery --------------------------------------------------


def replication_seeds(base: int, n: int, start: int, stop: int) -> list[np.random.SeedSequence]:
    return [np.random.SeedSequence(int(base), spawn_key=(int(n), r)) for r in range(start, stop)]


def run_replications(fn: Callable[[int, int], np.ndarray], R: int, chunk: int, workers: int = 1) -> np.ndarray:
    """Evaluate ``fn(start, stop)`` over fixed chunks and stack the results in replication order."""
    bounds = [(s, min(s + chunk, R)) for s in range(0, R, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts, axis=0)


def _simulate(cfg: McConfig, n: int, start: int, stop: int) -> np.ndarray:
    return simulate_batch(cfg.model, n, replication_seeds(cfg.seed, n, start, stop))


def _quantiles(x) -> dict:
    q = np.quantile(x, [0.05, 0.25, 0.5, 0.75, 0.95])
    return dict(zip(["q05", "q25", "median", "q75", "q95"], q.tolist()))


# -- CLT --------------------------------------------------------------------


def clt_targets(cfg: McConfig) -> tuple[np.ndarray, np.ndarray]:
    """``F(phi_j)`` and the limit covariance matrix ``c_E``."""
    phis = cfg.functionals
    F = np.array([theoretical_functional(cfg.model, phi, cfg.taper) for phi in phis])
    C = np.array([[clt_covariance(a, b, cfg.model, cfg.taper) for b in phis] for a in phis])
    return F, (C + C.T) / 2.0


def mc_clt(cfg: McConfig) -> McReport:
    """Empirical mean and covariance of ``E_n(phi_j)`` against the limit Gaussian law."""
    t0 = time.perf_counter()
    check_model(cfg.model)
    F, C = clt_targets(cfg)
    k = cfg.tolerances["se_multiple"]
    per_n, criteria, rows = [], [], []
    for n in cfg.n_list:
        def block(a, b, n=n):
            x = _simulate(cfg, n, a, b)
            return math.sqrt(n) * (spectral_means(x, cfg.functionals, cfg.taper) - F)

        E = run_replications(block, cfg.R, cfg.chunk, cfg.workers)
        R = E.shape[0]
        mean = E.mean(axis=0)
        Z = E - mean
        cov = Z.T @ Z / (R - 1)
        mean_se = E.std(axis=0, ddof=1) / math.sqrt(R)
        prods = Z[:, :, None] * Z[:, None, :]
        cov_se = prods.std(axis=0, ddof=1) / math.sqrt(R)
        e1 = E[:, 0]
        stat = {
            "n": n, "R": R, "mean": mean, "mean_se": mean_se, "cov": cov, "cov_se": cov_se,
            "skewness": float(stats.skew(e1)), "excess_kurtosis": float(stats.kurtosis(e1)),
            "quantiles_phi1": _quantiles(e1),
        }
        per_n.append(stat)
        z_mean = np.abs(mean) / mean_se
        criteria.append(Criterion(f"mean_n{n}", bool(np.all(z_mean <= k)), float(np.max(z_mean)), k,
                                  "max |mean| / SE over functionals (target 0)"))
        z_cov = np.abs(cov - C) / cov_se
        iu = np.triu_indices(len(F))
        worst = int(np.argmax(z_cov[iu]))
        criteria.append(Criterion(f"covariance_n{n}", bool(np.all(z_cov[iu] <= k)), float(z_cov[iu][worst]), k,
                                  f"max |cov - c_E| / SE, worst entry {iu[0][worst]},{iu[1][worst]}"))
        for i, j in zip(*iu):
            rows.append([n, int(i), int(j), cov[i, j], C[i, j], cov_se[i, j]])
    return McReport(
        "clt", cfg.to_dict(), per_n, {"F": F, "c_E": C}, criteria,
        tables={"covariance": (["n", "i", "j", "empirical", "target", "se"], rows)},
        wall_clock=time.perf_counter() - t0,
    )


# -- uniform rate -----------------------------------------------------------


def fit_log_slope(n_values, errors) -> float:
    """Least-squares slope of ``log error`` on ``log n``."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _truth_curve(model: TvArmaModel, u: np.ndarray) -> np.ndarray:
    return np.column_stack([model.alpha_values(u), model.sigma(u) ** 2])


def _bandwidth(option, n: int) -> float:
    if option in (None, "auto"):
        return default_bandwidth(n)
    return float(option)


def _sup_errors(cfg: McConfig, n: int, b: float, u: np.ndarray, kernel: SmoothingKernel, p: int) -> np.ndarray:
    truth = _truth_curve(cfg.model, u)

    def block(a, c):
        x = _simulate(cfg, n, a, c)
        out = np.empty(len(x))
        for i, row in enumerate(x):
            est = local_yule_walker_curve(row, p, kernel, b, u)
            out[i] = np.max(np.linalg.norm(est - truth, axis=1))
        return out

    return run_replications(block, cfg.R, cfg.chunk, cfg.workers)


def _u_grid(b: float, points: int) -> np.ndarray:
    return np.linspace(b / 2.0, 1.0 - b / 2.0, points)


def mc_rate(cfg: McConfig) -> McReport:
    """Sup-over-``u`` error of the local Yule-Walker curve and its log-log slope in ``n``.

    Options: ``bandwidth`` (``"auto"`` = ``n^{-1/5}`` or a number), ``kernel``,
    ``u_points``, ``bootstrap`` (resamples for the slope CI) and an optional
    ``sweep`` ``{"n": n, "b": [...]}`` for the bias-variance trade-off in ``b``.
    """
    t0 = time.perf_counter()
    check_model(cfg.model)
    if cfg.model.q:
        raise ConfigError("rate experiment needs a tvAR model")
    opts = cfg.options
    p = int(opts.get("p", cfg.model.p))
    kernel = SmoothingKernel(opts.get("kernel", "epanechnikov"))
    points = int(opts.get("u_points", 41))
    per_n, rows, errs = [], [], []
    for n in cfg.n_list:
        b = _bandwidth(opts.get("bandwidth"), n)
        e = _sup_errors(cfg, n, b, _u_grid(b, points), kernel, p)
        errs.append(e)
        stat = {"n": n, "b": b, **_quantiles(e), "mean": float(e.mean())}
        per_n.append(stat)
        rows.append([n, b, stat["median"], stat["q25"], stat["q75"]])

    medians = np.array([s["median"] for s in per_n])
    slope = fit_log_slope(cfg.n_list, medians) if len(cfg.n_list) > 1 else math.nan
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0, 2**31)))
    boots = []
    for _ in range(int(opts.get("bootstrap", 1000))):
        meds = [np.median(e[rng.integers(0, len(e), len(e))]) for e in errs]
        boots.append(fit_log_slope(cfg.n_list, meds) if len(meds) > 1 else math.nan)
    ci = np.quantile(boots, [0.025, 0.975]).tolist() if len(cfg.n_list) > 1 else [math.nan, math.nan]
    lo, hi = cfg.tolerances["slope_low"], cfg.tolerances["slope_high"]
    criteria = []
    if len(cfg.n_list) > 1:
        criteria.append(Criterion("slope", lo <= slope <= hi, slope, hi,
                                  f"log-log slope of median sup error must lie in [{lo}, {hi}]"))
    tables = {"rate": (["n", "b", "median_sup_error", "q25", "q75"], rows)}
    targets = {"slope": float(opts.get("target_slope", -0.4)), "slope_ci": ci, "slope_estimate": slope}

    sweep = opts.get("sweep")
    if sweep:
        n = int(sweep["n"])
        bs = sorted(float(b) for b in sweep["b"])
        # a common u set keeps the sup comparable across bandwidths
        u = _u_grid(max(bs), points)
        med = []
        srows = []
        for b in bs:
            e = _sup_errors(cfg, n, b, u, kernel, p)
            med.append(float(np.median(e)))
            srows.append([n, b, med[-1]])
        arg = int(np.argmin(med))
        interior = 0 < arg < len(bs) - 1
        criteria.append(Criterion("bandwidth_u_shape", interior, bs[arg], math.nan,
                                  "median sup error minimized at an interior bandwidth"))
        targets["sweep"] = {"n": n, "b": bs, "median": med}
        tables["bandwidth_sweep"] = (["n", "b", "median_sup_error"], srows)
    return McReport("rate", cfg.to_dict(), per_n, targets, criteria, tables,
                    wall_clock=time.perf_counter() - t0)


# -- bias -------------------------------------------------------------------


def mc_bias(cfg: McConfig) -> McReport:
    """``sqrt(n) |E F_n(phi) - F(phi)|`` from exact expectations; no simulation."""
    t0 = time.perf_counter()
    check_model(cfg.model)
    slack, floor = cfg.tolerances["slack"], cfg.tolerances["floor"]
    per_n, rows, criteria = [], [], []
    targets = {}
    for j, phi in enumerate(cfg.functionals):
        F = theoretical_functional(cfg.model, phi, cfg.taper)
        targets[f"F_{j}"] = F
        d = []
        for n in cfg.n_list:
            ef = expected_spectral_mean(cfg.model, phi, n, cfg.taper)
            nm = norms(phi, n=n, taper=cfg.taper)
            d.append(math.sqrt(n) * abs(ef - F))
            per_n.append({"functional": j, "n": n, "expected_F_n": ef, "F": F, "scaled_bias": d[-1],
                          "rho_2n": nm.get("rho_2n_taper", nm.get("rho_2n"))})
            rows.append([j, n, ef, F, d[-1]])
        ratios = [d[i + 1] - ((1 + slack) * d[i] + floor) for i in range(len(d) - 1)]
        worst = max(ratios) if ratios else -math.inf
        criteria.append(Criterion(f"bounded_phi{j}", worst <= 0.0, worst, 0.0,
                                  f"sqrt(n)|E F_n - F| non-increasing within {slack:.0%} slack: {d}"))
    return McReport("bias", cfg.to_dict(), per_n, targets, criteria,
                    tables={"bias": (["functional", "n", "expected_F_n", "F", "scaled_bias"], rows)},
                    wall_clock=time.perf_counter() - t0)


# -- maximum bound ----------------------------------------------------------


def log_abs_mgf(innovation: str, c):
    """``log E exp(c |eps|)`` for the standardized innovation laws."""
    c = np.asarray(c, dtype=float)
    if innovation == "gaussian":
        return math.log(2.0) + c**2 / 2.0 + log_ndtr(c)
    s = c * math.sqrt(3.0)
    small = s < 1e-8
    safe = np.where(small, 1.0, s)
    return np.where(small, s / 2.0, np.log(np.expm1(safe) / safe))


def max_bound_constant(model: TvArmaModel, n: int) -> float:
    """``sup_t prod_j E exp(|a_{t,n}(j)| |eps|)``, an upper bound for ``n P(max|X| > 2 log n)``."""
    a = transfer_matrix(model, n)
    return float(np.exp(np.max(np.sum(log_abs_mgf(model.innovation, np.abs(a)), axis=1))))


def mc_maxbound(cfg: McConfig) -> McReport:
    """Exceedance frequency of ``max_t |X_t| > 2 log n``, scaled by ``n``."""
    t0 = time.perf_counter()
    check_model(cfg.model)
    slack, k = cfg.tolerances["slack"], cfg.tolerances["se_multiple"]
    per_n, rows, criteria = [], [], []
    scaled, ses = [], []
    for n in cfg.n_list:
        thr = 2.0 * math.log(n)
        m = run_replications(lambda a, b, n=n: np.max(np.abs(_simulate(cfg, n, a, b)), axis=1),
                             cfg.R, cfg.chunk, cfg.workers)
        count = int(np.sum(m > thr))
        phat = count / len(m)
        # binomial SE, floored at one event so zero counts keep a finite band
        se = math.sqrt(max(phat, 1.0 / len(m)) * (1.0 - phat) / len(m))
        bound = max_bound_constant(cfg.model, n)
        scaled.append(n * phat)
        ses.append(n * se)
        per_n.append({"n": n, "threshold": thr, "exceedances": count, "rate": phat, "n_times_rate": n * phat,
                      "se": se, "bound": bound, "max_quantiles": _quantiles(m)})
        rows.append([n, thr, count, phat, n * phat, bound])
        criteria.append(Criterion(f"below_bound_n{n}", n * phat <= bound + k * n * se, n * phat, bound,
                                  "n * rate below sup_t prod_j E exp(|a_j||eps|)"))
    for i in range(len(scaled) - 1):
        lim = (1 + slack) * scaled[i] + k * math.hypot(ses[i], ses[i + 1])
        criteria.append(Criterion(f"non_increasing_{cfg.n_list[i]}_{cfg.n_list[i + 1]}",
                                  scaled[i + 1] <= lim, scaled[i + 1], lim,
                                  f"n * rate non-increasing within {slack:.0%} slack and {k} SE"))
    return McReport("maxbound", cfg.to_dict(), per_n, {}, criteria,
                    tables={"maxbound": (["n", "threshold", "exceedances", "rate", "n_times_rate", "bound"], rows)},
                    wall_clock=time.perf_counter() - t0)


# -- tail -------------------------------------------------------------------


def exceedance_curve(values: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``P_hat(|E| >= eta)`` for each ``eta`` (non-increasing for ascending ``eta``)."""
    s = np.sort(np.abs(values))
    return 1.0 - np.searchsorted(s, eta, side="left") / len(s)


def mc_tail(cfg: McConfig) -> McReport:
    """Empirical tail of the centered process ``sqrt(n)(F_n - E F_n)``.

    Log-exceedance is fitted linearly in ``sqrt(eta)`` over the well-resolved
    body (at least ``min_count`` exceedances); beyond the body the curve
    must stay below the extrapolated line.
    """
    t0 = time.perf_counter()
    check_model(cfg.model)
    phi = cfg.functionals[0]
    tol = cfg.tolerances
    multiples = np.asarray(cfg.options.get("eta_sd_multiples", np.linspace(0.25, 6.0, 24)), dtype=float)
    per_n, rows, criteria = [], [], []
    for n in cfg.n_list:
        ef = expected_spectral_mean(cfg.model, phi, n, cfg.taper)
        E = run_replications(
            lambda a, b, n=n: math.sqrt(n) * (spectral_means(_simulate(cfg, n, a, b), [phi], cfg.taper)[:, 0] - ef),
            cfg.R, cfg.chunk, cfg.workers)
        R = len(E)
        sd = float(E.std(ddof=1))
        eta = multiples * sd
        p = exceedance_curve(E, eta)
        counts = np.rint(p * R).astype(int)
        body = counts >= tol["min_count"]
        tail = (~body) & (eta > (eta[body].max() if body.any() else 0.0))
        slope = icpt = math.nan
        worst = -math.inf
        if body.sum() >= 2:
            slope, icpt = np.polyfit(np.sqrt(eta[body]), np.log(p[body]), 1)
            line = np.exp(icpt + slope * np.sqrt(eta[tail]))
            allowed = line + tol["se_multiple"] * np.sqrt(line / R)
            worst = float(np.max(p[tail] - allowed)) if tail.any() else -math.inf
        p4 = float(exceedance_curve(E, np.array([4.0 * sd]))[0])
        per_n.append({"n": n, "expected_F_n": ef, "sd": sd, "eta": eta, "exceedance": p,
                      "fit_slope": float(slope), "fit_intercept": float(icpt), "p_at_4sd": p4})
        for e, m, pp in zip(eta, multiples, p):
            rows.append([n, m, e, pp])
        criteria.append(Criterion(f"monotone_n{n}", bool(np.all(np.diff(p) <= 0)), float(np.max(np.diff(p), initial=0.0)),
                                  0.0, "exceedance curve non-increasing in eta"))
        criteria.append(Criterion(f"tail_below_line_n{n}", bool(body.sum() >= 2 and worst <= 0.0), worst, 0.0,
                                  "log exceedance beyond the body below the fitted line in sqrt(eta)"))
        criteria.append(Criterion(f"p_at_4sd_n{n}", p4 < tol["p_at_4sd"], p4, tol["p_at_4sd"],
                                  "exceedance at 4 SD"))
    return McReport("tail", cfg.to_dict(), per_n, {}, criteria,
                    tables={"tail": (["n", "sd_multiple", "eta", "exceedance"], rows)},
                    wall_clock=time.perf_counter() - t0)


RUNNERS = {"clt": mc_clt, "rate": mc_rate, "bias": mc_bias, "maxbound": mc_maxbound, "tail": mc_tail}


def run(cfg: McConfig) -> McReport:
    return RUNNERS[cfg.experiment](cfg)


def smooth_ar1_model(innovation: str = "gaussian", degree: int = 14) -> TvArmaModel:
    """tvAR(1) with ``alpha_1(u) = -(0.3 + 0.4 sin(pi u))``, sigma = 1 (polynomial interpolant)."""
    curve = CoefficientCurve.from_function(lambda u: -(0.3 + 0.4 * np.sin(np.pi * u)), degree)
    return TvArmaModel(alpha=(curve,), innovation=innovation)


def functional_menu() -> dict[str, SpectralFunctional]:
    """One representative of each built-in functional kind, plus a sum."""
    return {
        "constant": SpectralFunctional.constant(),
        "cosine_lag3": SpectralFunctional.cosine(3),
        "sine_lag2": SpectralFunctional.of_frequency(TrigSeries.sine(2)),
        "indicator": SpectralFunctional.indicator(1.0),
        "indicator_two_sided": SpectralFunctional.of_frequency(Indicator(-2.0, 0.5)),
        "freq_kernel": SpectralFunctional.of_frequency(FrequencyKernel(1.0, 0.7)),
        "freq_kernel_tri": SpectralFunctional.of_frequency(
            FrequencyKernel(-0.5, 0.4, SmoothingKernel("triangular"))),
        "time_kernel_cosine": SpectralFunctional.separable(TimeKernel(0.4, 0.3), TrigSeries.cosine(1)),
        "jump_indicator": SpectralFunctional.separable(CoefficientCurve.steps([0.5], [1.0, -2.0]),
                                                       Indicator(0.0, 2.0)),
        "score_ar2": score_functional(SpectralFamily.parse("ar(2)"), [-0.3, 0.2, 1.5], 0),
        "score_ma1": score_functional(SpectralFamily.parse("ma(1)"), [0.4, 1.2], 0),
        "sum": SpectralFunctional.cosine(1) + 2.0 * SpectralFunctional.indicator(0.7),
    }
