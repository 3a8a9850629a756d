"""Time-varying ARMA models: construction, stability, simulation and moments.

The model is the system of difference equations

    sum_{j=0}^p alpha_j(t/n) X_{t-j} = sum_{k=0}^q beta_k(t/n) sigma((t-k)/n) eps_{t-k}

with ``alpha_0 = beta_0 = 1`` and i.i.d. standardized innovations.  Curves are
frozen at their ``u = 0`` value for negative rescaled time, which is what the
burn-in period of :func:`simulate` runs on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .curves import CoefficientCurve, curve_breakpoints

# innovation tag -> fourth cumulant of the standardized distribution
INNOVATIONS = {"gaussian": 0.0, "uniform": -1.2}
_ALIASES = {"normal": "gaussian", "standardized-uniform": "uniform"}

SQRT3 = math.sqrt(3.0)


class InvalidModelError(ValueError):
    """The model violates the stability or positivity conditions."""


@dataclass(frozen=True)
class TvArmaModel:
    """Time-varying ARMA(p, q) model with bounded-variation coefficient curves.

    ``alpha`` holds the curves alpha_1..alpha_p in the convention
    ``X_t + alpha_1 X_{t-1} + ... = ...``, so a stationary AR(1) with
    autoregressive coefficient ``phi`` has ``alpha_1 = -phi``.
    ``kappa4`` defaults to the fourth cumulant of the innovation law; an
    explicit value overrides it in theoretical targets only.
    """

    alpha: tuple[CoefficientCurve, ...] = ()
    beta: tuple[CoefficientCurve, ...] = ()
    sigma: CoefficientCurve = field(default_factory=lambda: CoefficientCurve.constant(1.0))
    innovation: str = "gaussian"
    kappa4: float | None = None
    delta: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(CoefficientCurve.from_spec(c) for c in self.alpha))
        object.__setattr__(self, "beta", tuple(CoefficientCurve.from_spec(c) for c in self.beta))
        object.__setattr__(self, "sigma", CoefficientCurve.from_spec(self.sigma))
        tag = _ALIASES.get(self.innovation, self.innovation)
        if tag not in INNOVATIONS:
            raise InvalidModelError(
                f"innovation {self.innovation!r} not supported; only distributions with all "
                f"moments finite are allowed: {sorted(INNOVATIONS)}"
            )
        object.__setattr__(self, "innovation", tag)
        if self.kappa4 is None:
            object.__setattr__(self, "kappa4", INNOVATIONS[tag])
        if not self.delta > 0:
            raise InvalidModelError("stability margin delta must be positive")

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def q(self) -> int:
        return len(self.beta)

    @property
    def breakpoints(self) -> np.ndarray:
        return curve_breakpoints(self.alpha + self.beta + (self.sigma,))

    def alpha_values(self, u) -> np.ndarray:
        """``alpha_1..alpha_p`` at ``u``; shape ``u.shape + (p,)``."""
        u = np.asarray(u, dtype=float)
        if not self.alpha:
            return np.zeros(u.shape + (0,))
        return np.stack([np.broadcast_to(c(u), u.shape) for c in self.alpha], axis=-1)

    def beta_values(self, u) -> np.ndarray:
        """``beta_0..beta_q`` at ``u`` (``beta_0 = 1`` included)."""
        u = np.asarray(u, dtype=float)
        cols = [np.ones(u.shape)] + [np.broadcast_to(c(u), u.shape) for c in self.beta]
        return np.stack(cols, axis=-1)

    def to_dict(self) -> dict:
        return {
            "alpha": [c.to_dict() for c in self.alpha],
            "beta": [c.to_dict() for c in self.beta],
            "sigma": self.sigma.to_dict(),
            "innovation": self.innovation,
            "kappa4": self.kappa4,
            "delta": self.delta,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "TvArmaModel":
        known = {"alpha", "beta", "sigma", "innovation", "kappa4", "delta"}
        unknown = set(spec) - known
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        return cls(
            alpha=tuple(spec.get("alpha", ())),
            beta=tuple(spec.get("beta", ())),
            sigma=spec.get("sigma", 1.0),
            innovation=spec.get("innovation", "gaussian"),
            kappa4=spec.get("kappa4"),
            delta=float(spec.get("delta", 0.05)),
        )

    @classmethod
    def ar1(cls, phi, sigma=1.0, **kw) -> "TvArmaModel":
        """tvAR(1) ``X_t = phi(t/n) X_{t-1} + sigma eps_t``; ``phi`` may be a curve."""
        if isinstance(phi, CoefficientCurve):
            if phi.kind == "polynomial":
                alpha = CoefficientCurve.polynomial([-v for v in phi.values])
            else:
                alpha = CoefficientCurve(phi.kind, phi.breakpoints, tuple(-v for v in phi.values))
        else:
            alpha = CoefficientCurve.constant(-float(phi))
        return cls(alpha=(alpha,), sigma=sigma, **kw)


def companion(alpha_vals: np.ndarray) -> np.ndarray:
    """Companion matrices with first row ``-alpha_1..-alpha_p``; batched over leading axes."""
    alpha_vals = np.asarray(alpha_vals, dtype=float)
    p = alpha_vals.shape[-1]
    mat = np.zeros(alpha_vals.shape[:-1] + (p, p))
    mat[..., 0, :] = -alpha_vals
    if p > 1:
        idx = np.arange(p - 1)
        mat[..., idx + 1, idx] = 1.0
    return mat


def validation_grid(model: TvArmaModel, grid_size: int = 201) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, grid_size)
    return np.unique(np.concatenate((grid, model.breakpoints)))


def validate_model(model: TvArmaModel, grid_size: int = 201) -> list[tuple[float, float]]:
    """Smallest root modulus of ``z -> sum_j alpha_j(u) z^j`` at each grid point.

    The roots are the reciprocals of the companion-matrix eigenvalues, so a
    nilpotent companion (no roots at all) reports ``inf``.  The model is
    stable iff every modulus exceeds ``1 + delta``.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    u = validation_grid(model, grid_size)
    vals = model.alpha_values(u)
    if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(model.sigma(u))):
        raise InvalidModelError("coefficient curves take non-finite values")
    if model.p == 0:
        return [(float(x), math.inf) for x in u]
    radius = np.max(np.abs(np.linalg.eigvals(companion(vals))), axis=-1)
    moduli = np.full(radius.shape, np.inf)
    np.divide(1.0, radius, out=moduli, where=radius > 1e-300)
    return [(float(x), float(m)) for x, m in zip(u, moduli)]


@lru_cache(maxsize=256)
def check_model(model: TvArmaModel, grid_size: int = 201) -> TvArmaModel:
    """Raise :class:`InvalidModelError` unless the model is stable with positive sigma."""
    roots = validate_model(model, grid_size)
    bad = [(u, m) for u, m in roots if not m > 1.0 + model.delta]
    if bad:
        u, m = min(bad, key=lambda r: r[1])
        raise InvalidModelError(
            f"stability check failed: AR polynomial has a root of modulus {m:.6g} "
            f"<= 1 + delta = {1.0 + model.delta:.6g} at u = {u:.6g}"
        )
    u = validation_grid(model, grid_size)
    if model.sigma.inf() <= 0.0 or np.min(model.sigma(u)) <= 0.0:
        raise InvalidModelError("sigma(u) must be strictly positive on [0, 1]")
    return model


# -- random streams ---------------------------------------------------------


def seed_sequence(seed) -> np.random.SeedSequence:
    """Normalize ``int``, ``(base, key, ...)`` or ``SeedSequence`` seeds."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, tuple):
        base, *keys = seed
        return np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    return np.random.SeedSequence(int(seed))


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; replications use keyed sub-streams."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed)))


def draw_innovations(innovation: str, size: int, rng: np.random.Generator) -> np.ndarray:
    if innovation == "gaussian":
        return rng.standard_normal(size)
    return rng.uniform(-SQRT3, SQRT3, size)


# -- simulation -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Sample:
    """Observed stretch ``X_1..X_n`` with the provenance needed to regenerate it."""

    values: np.ndarray
    seed: object = None
    model: TvArmaModel | None = None
    burn_in: int = 0

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(cls, values) -> "Sample":
        return cls(np.asarray(values, dtype=float))


def default_burn_in(model: TvArmaModel) -> int:
    return 500 + 10 * model.p


def simulate_batch(model: TvArmaModel, n: int, seeds: Sequence, burn_in: int | None = None) -> np.ndarray:
    """Simulate one path per seed; returns an array of shape ``(len(seeds), n)``.

    Each row depends only on its own seed, so results are identical whatever
    way replications are grouped into batches.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    check_model(model)
    burn = default_burn_in(model) if burn_in is None else int(burn_in)
    if burn < 0:
        raise ValueError("burn_in must be >= 0")
    p, q = model.p, model.q
    total = n + burn
    t = np.arange(1 - burn, n + 1)
    eps = np.stack(
        [draw_innovations(model.innovation, total + q, make_rng(s)) for s in seeds]
    )
    # eps[:, i] is eps_{t_i - q}; shift so column q + i holds eps at time t_i
    sig = model.sigma((np.arange(1 - burn - q, n + 1)) / n)
    scaled = eps * sig
    beta = model.beta_values(t / n)
    drive = np.zeros((len(seeds), total))
    for k in range(q + 1):
        drive += beta[:, k] * scaled[:, q - k : q - k + total]
    if p == 0:
        return drive[:, burn:]
    alpha = model.alpha_values(t / n)
    x = np.zeros((len(seeds), total + p))
    for i in range(total):
        acc = drive[:, i].copy()
        for j in range(p):
            acc -= alpha[i, j] * x[:, p + i - j - 1]
        x[:, p + i] = acc
    return x[:, p + burn :]


def simulate(model: TvArmaModel, n: int, seed=0, burn_in: int | None = None) -> Sample:
    """One path ``X_1..X_n`` of the recursion, deterministic in ``seed``."""
    burn = default_burn_in(model) if burn_in is None else int(burn_in)
    values = simulate_batch(model, n, [seed], burn)[0]
    return Sample(values, seed=seed, model=model, burn_in=burn)


# -- MA(infinity) representation --------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferCoefficients:
    t: int
    n: int
    j_max: int
    coefficients: np.ndarray


def truncation_lag(model: TvArmaModel, tol: float = 1e-12, cap: int = 20000) -> int:
    """Smallest ``j`` with ``K rho^j < tol`` for ``rho = 1 / (1 + delta/2)``.

    ``K`` bounds ``|a_{t,n}(j)| rho^{-j}``; it is estimated from the frozen
    companion powers on the validation grid together with the sup of sigma
    and of the MA coefficients.
    """
    check_model(model)
    if model.p == 0:
        return model.q
    rho = 1.0 / (1.0 + model.delta / 2.0)
    u = validation_grid(model)
    mats = companion(model.alpha_values(u))
    row = np.zeros((len(u), model.p))
    row[:, 0] = 1.0
    c_max = 1.0
    for m in range(1, 129):
        row = np.einsum("gi,gij->gj", row, mats)
        c_max = max(c_max, float(np.max(np.sum(np.abs(row), axis=1))) * rho ** (-m))
    beta_sum = 1.0 + sum(c.sup_abs() for c in model.beta)
    big_k = model.sigma.sup_abs() * beta_sum * c_max
    j = math.ceil(math.log(tol / big_k) / math.log(rho)) + model.q
    return int(min(max(j, model.q), cap))


def _ar_first_rows(model: TvArmaModel, times: np.ndarray, n: int, j_max: int) -> np.ndarray:
    """``psi[i, m] = (prod_{l<m} alpha((t_i - l)/n))_{11}`` for ``m = 0..j_max``."""
    psi = np.zeros((len(times), j_max + 1))
    psi[:, 0] = 1.0
    if model.p == 0:
        return psi
    row = np.zeros((len(times), model.p))
    row[:, 0] = 1.0
    for m in range(j_max):
        mats = companion(model.alpha_values((times - m) / n))
        row = np.einsum("ti,tij->tj", row, mats)
        psi[:, m + 1] = row[:, 0]
    return psi


def transfer_matrix(model: TvArmaModel, n: int, j_max: int | None = None, times=None) -> np.ndarray:
    """Exact ``a_{t,n}(j)`` for each requested ``t`` (default ``1..n``) and ``j <= j_max``."""
    check_model(model)
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    times = np.arange(1, n + 1) if times is None else np.atleast_1d(np.asarray(times, dtype=float))
    psi = _ar_first_rows(model, times, n, j_max)
    j = np.arange(j_max + 1)
    out = np.zeros_like(psi)
    for k in range(model.q + 1):
        if k > j_max:
            break
        # beta_k evaluated at (t - j + k)/n, the time of the equation carrying eps_{t-j}
        beta_k = model.beta_values((times[:, None] - j[None, k:] + k) / n)[..., k]
        out[:, k:] += psi[:, : j_max + 1 - k] * beta_k
    out *= model.sigma((times[:, None] - j[None, :]) / n)
    return out


def transfer_coefficients(model: TvArmaModel, t: int, n: int, j_max: int | None = None) -> TransferCoefficients:
    """MA(infinity) weights ``a_{t,n}(0..j_max)`` from the companion-matrix products."""
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    coef = transfer_matrix(model, n, j_max, times=[t])[0]
    return TransferCoefficients(t=int(t), n=int(n), j_max=j_max, coefficients=coef)


def limit_coefficients(model: TvArmaModel, u, j_max: int | None = None) -> np.ndarray:
    """Frozen-time weights ``a(u, j)``; shape ``u.shape + (j_max + 1,)``."""
    check_model(model)
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    u = np.asarray(u, dtype=float)
    flat = u.reshape(-1)
    psi = np.zeros((flat.size, j_max + 1))
    psi[:, 0] = 1.0
    if model.p:
        mats = companion(model.alpha_values(flat))
        row = np.zeros((flat.size, model.p))
        row[:, 0] = 1.0
        for m in range(j_max):
            row = np.einsum("ti,tij->tj", row, mats)
            psi[:, m + 1] = row[:, 0]
    beta = model.beta_values(flat)
    out = np.zeros_like(psi)
    for k in range(min(model.q, j_max) + 1):
        out[:, k:] += psi[:, : j_max + 1 - k] * beta[:, k : k + 1]
    out *= model.sigma(flat)[:, None]
    return out.reshape(u.shape + (j_max + 1,))


def transfer_deviation(model: TvArmaModel, n: int, j_max: int | None = None) -> float:
    """``sup_j sum_t |a_{t,n}(j) - a(t/n, j)|``: gap between exact and frozen weights."""
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    exact = transfer_matrix(model, n, j_max)
    frozen = limit_coefficients(model, np.arange(1, n + 1) / n, j_max)
    return float(np.max(np.sum(np.abs(exact - frozen), axis=0)))


# -- second-order structure -------------------------------------------------


def tv_spectral_density(model: TvArmaModel, u, lam) -> np.ndarray:
    """``f(u, lam) = sigma(u)^2 |sum beta_k e^{i lam k}|^2 / (2 pi |sum alpha_j e^{i lam j}|^2)``.

    ``u`` and ``lam`` broadcast against each other.
    """
    u, lam = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(lam, dtype=float))
    ar = np.ones(u.shape, dtype=complex)
    for j, c in enumerate(model.alpha, start=1):
        ar = ar + c(u) * np.exp(1j * lam * j)
    ma = np.ones(u.shape, dtype=complex)
    for k, c in enumerate(model.beta, start=1):
        ma = ma + c(u) * np.exp(1j * lam * k)
    return model.sigma(u) ** 2 * np.abs(ma) ** 2 / (2.0 * np.pi * np.abs(ar) ** 2)


def tv_covariance(model: TvArmaModel, u, k: int, j_max: int | None = None) -> np.ndarray:
    """``c(u, k) = sum_j a(u, k + j) a(u, j)``, symmetric in ``k``."""
    k = abs(int(k))
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    a = limit_coefficients(model, u, j_max + k)
    out = np.sum(a[..., k:] * a[..., : j_max + 1], axis=-1)
    return out if np.ndim(out) else float(out)


def decay_weight(j, kappa: float = 1.0):
    """``l(j) = 1`` for ``|j| <= 1`` and ``|j| log(|j|)^(1 + kappa)`` otherwise (natural log)."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    a = np.abs(np.asarray(j, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a <= 1.0, 1.0, a * np.log(np.maximum(a, 1.0)) ** (1.0 + kappa))
    return float(out) if out.ndim == 0 else out


def covariance_matrix(model: TvArmaModel, n: int, j_max: int | None = None) -> np.ndarray:
    """Exact ``cov(X_s, X_r)`` for ``s, r = 1..n`` up to MA truncation."""
    j_max = truncation_lag(model) if j_max is None else int(j_max)
    a = transfer_matrix(model, n, j_max)
    # loadings[t-1, c] multiplies eps_{c + 1 - j_max - 1}
    loadings = np.zeros((n, n + j_max))
    rows = np.arange(n)[:, None]
    cols = rows + j_max - np.arange(j_max + 1)[None, :]
    loadings[rows, cols] = a
    return loadings @ loadings.T


def abs_coefficient_sum(model: TvArmaModel, n: int, j_max: int | None = None) -> np.ndarray:
    """``sum_j |a_{t,n}(j)|`` for each ``t``; bounds ``|X_t| / sup|eps|``."""
    return np.sum(np.abs(transfer_matrix(model, n, j_max)), axis=1)
