"""Whittle quasi-likelihood: global fits, kernel-localized fits and local Yule-Walker.

Parameter vectors put the ARMA coefficients first and the innovation
variance last, ``theta = (alpha_1..alpha_p, beta_1..beta_q, sigma^2)``, with
the sign convention ``sum_j alpha_j X_{t-j} = sum_k beta_k sigma eps_{t-k}``
so that an AR(1) with autoregressive coefficient ``phi`` has
``alpha_1 = -phi``.

Frequency integrals use a :class:`~locspec.spectral.FrequencyGrid`.  The data
enter only through lag sums ``c(k)``; for autoregressive families ``1/f`` is
a trigonometric polynomial of degree ``p``, so only lags ``0..p`` matter and
the default trapezoid grid integrates the data term exactly.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import comb

from .kernels import SmoothingKernel
from .process import Sample, TvArmaModel, tv_spectral_density
from .spectral import FrequencyGrid, lambda_quadrature

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi
COND_LIMIT = 1e10


class ParameterError(ValueError):
    """Parameter vector outside the admissible box or with a degenerate density."""


class BandError(ValueError):
    """Localization point outside ``[b/2, 1 - b/2]`` or invalid bandwidth."""


class IllConditionedError(ArithmeticError):
    """Local covariance matrix too close to singular for the Yule-Walker solve."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


# -- families ---------------------------------------------------------------


def _poly_parts(coefs: np.ndarray, lam: np.ndarray):
    """``P(lam) = 1 + sum_j c_j e^{i lam j}``, ``|P|^2``, first and second derivatives of ``|P|^2``."""
    m = len(coefs)
    j = np.arange(1, m + 1)
    e = np.exp(1j * np.multiply.outer(lam, j))                  # (..., m)
    poly = 1.0 + e @ coefs.astype(complex) if m else np.ones(np.shape(lam), dtype=complex)
    mod2 = np.abs(poly) ** 2
    d1 = 2.0 * np.real(e * np.conj(poly)[..., None])            # d|P|^2 / dc_j
    diff = j[:, None] - j[None, :]
    d2 = 2.0 * np.cos(np.multiply.outer(lam, diff))             # d2|P|^2 / dc_j dc_l
    return mod2, d1, d2


def _log_mod_derivs(coefs, lam):
    mod2, d1, d2 = _poly_parts(coefs, lam)
    # a root on the unit circle gives non-finite values; callers reject them
    with np.errstate(divide="ignore", invalid="ignore"):
        g = d1 / mod2[..., None]
        h = d2 / mod2[..., None, None] - g[..., :, None] * g[..., None, :]
        return np.log(mod2), g, h


@dataclass(frozen=True)
class SpectralFamily:
    """Parametric spectral density family ``f_theta(u, lam)``.

    Stationary tags are ``white-noise``, ``ar(p)``, ``ma(q)`` and
    ``arma(p,q)``.  The tag ``tvar(p,d)`` is a time-varying autoregression
    whose coefficient curves and log-variance are polynomials of degree
    ``d`` in ``u``; it is accepted by the global likelihood only.
    """

    kind: str
    p: int = 0
    q: int = 0
    degree: int = 0
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("white-noise", "ar", "ma", "arma", "tvar"):
            raise ValueError(f"unknown family {self.kind!r}")
        lo, hi = self.default_box()
        if not self.lower:
            object.__setattr__(self, "lower", lo)
        if not self.upper:
            object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "lower", tuple(float(x) for x in self.lower))
        object.__setattr__(self, "upper", tuple(float(x) for x in self.upper))
        if len(self.lower) != self.d or len(self.upper) != self.d:
            raise ValueError(f"box must have {self.d} entries for {self.tag}")
        if any(a >= b for a, b in zip(self.lower, self.upper)):
            raise ValueError("box lower bounds must be below upper bounds")
        if self.kind != "tvar" and self.lower[-1] <= 0.0:
            raise ValueError("innovation variance lower bound must be positive")

    # -- construction -------------------------------------------------

    @classmethod
    def parse(cls, tag: str, lower=None, upper=None) -> "SpectralFamily":
        """Build a family from tags like ``"ar(2)"`` or ``"arma(1,1)"``."""
        tag = tag.strip().lower().replace(" ", "")
        if tag in ("white-noise", "wn", "white"):
            return cls("white-noise", lower=tuple(lower or ()), upper=tuple(upper or ()))
        m = re.fullmatch(r"(ar|ma|arma|tvar)\((\d+)(?:,(\d+))?\)", tag)
        if not m:
            raise ValueError(f"cannot parse family tag {tag!r}")
        kind, a, b = m.group(1), int(m.group(2)), m.group(3)
        if kind in ("arma", "tvar") and b is None:
            raise ValueError(f"{kind} needs two integers, e.g. {kind}(1,1)")
        if kind in ("ar", "ma") and b is not None:
            raise ValueError(f"{kind} takes one order")
        kw = {"ar": dict(p=a), "ma": dict(q=a), "arma": dict(p=a, q=int(b or 0)),
              "tvar": dict(p=a, degree=int(b or 0))}[kind]
        return cls(kind, lower=tuple(lower or ()), upper=tuple(upper or ()), **kw)

    @classmethod
    def from_spec(cls, spec) -> "SpectralFamily":
        if isinstance(spec, SpectralFamily):
            return spec
        if isinstance(spec, str):
            return cls.parse(spec)
        if not isinstance(spec, dict) or "tag" not in spec:
            raise ValueError("family spec needs a 'tag'")
        box = spec.get("box", {})
        return cls.parse(spec["tag"], box.get("lower"), box.get("upper"))

    def default_box(self):
        if self.kind == "tvar":
            k = (self.p + 1) * (self.degree + 1)
            return (-10.0,) * k, (10.0,) * k
        ar = [float(comb(self.p, j)) for j in range(1, self.p + 1)]
        ma = [float(comb(self.q, j)) for j in range(1, self.q + 1)]
        lim = ar + ma
        return tuple(-x for x in lim) + (1e-8,), tuple(lim) + (1e8,)

    @property
    def tag(self) -> str:
        if self.kind == "white-noise":
            return "white-noise"
        if self.kind == "ar":
            return f"ar({self.p})"
        if self.kind == "ma":
            return f"ma({self.q})"
        if self.kind == "arma":
            return f"arma({self.p},{self.q})"
        return f"tvar({self.p},{self.degree})"

    @property
    def d(self) -> int:
        if self.kind == "tvar":
            return (self.p + 1) * (self.degree + 1)
        return self.p + self.q + 1

    @property
    def time_varying(self) -> bool:
        return self.kind == "tvar"

    @property
    def inverse_lag(self):
        """Degree of ``1/f`` as a trigonometric polynomial, ``None`` if unbounded."""
        return None if self.q > 0 else self.p

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def to_dict(self) -> dict:
        return {"tag": self.tag, "box": {"lower": list(self.lower), "upper": list(self.upper)}}

    # -- evaluation ---------------------------------------------------

    def check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise ParameterError(f"{self.tag} expects {self.d} parameters, got shape {theta.shape}")
        lo, hi = np.array(self.lower), np.array(self.upper)
        tol = 1e-12 * np.maximum(1.0, np.abs(theta))
        if np.any(theta < lo - tol) or np.any(theta > hi + tol) or not np.all(np.isfinite(theta)):
            raise ParameterError(f"theta {theta.tolist()} outside the box of {self.tag}")
        return theta

    def _split(self, theta):
        return theta[: self.p], theta[self.p : self.p + self.q], theta[-1]

    def log_f(self, theta, lam, u=None):
        """``log f_theta(u, lam)``; ``u`` is ignored by stationary families."""
        return self.derivatives(theta, lam, u)[0]

    def f(self, theta, lam, u=None):
        return np.exp(self.log_f(theta, lam, u))

    def derivatives(self, theta, lam, u=None):
        """``(log f, grad log f, hess log f)`` with trailing parameter axes."""
        lam = np.asarray(lam, dtype=float)
        if self.kind == "tvar":
            return self._tv_derivatives(theta, lam, u)
        theta = np.asarray(theta, dtype=float)
        a, b, s2 = self._split(theta)
        d = self.d
        logf = np.full(lam.shape, math.log(s2) - math.log(TWO_PI))
        grad = np.zeros(lam.shape + (d,))
        hess = np.zeros(lam.shape + (d, d))
        if self.p:
            lm, g, h = _log_mod_derivs(a, lam)
            logf = logf - lm
            grad[..., : self.p] = -g
            hess[..., : self.p, : self.p] = -h
        if self.q:
            lm, g, h = _log_mod_derivs(b, lam)
            sl = slice(self.p, self.p + self.q)
            logf = logf + lm
            grad[..., sl] = g
            hess[..., sl, sl] = h
        grad[..., -1] = 1.0 / s2
        hess[..., -1, -1] = -1.0 / s2**2
        return logf, grad, hess

    # time-varying autoregression: theta = (a_{1,0..d}, ..., a_{p,0..d}, s_0..s_d)

    def local_derivatives(self, theta, lam, u):
        """``tvar`` derivatives in the pointwise parameters ``eta(u) = (alpha(u), log sigma^2(u))``.

        Returns ``(log f, d log f / d eta, d2 log f / d eta2, basis)`` where
        ``theta`` enters through ``eta_e(u) = sum_i theta[e, i] * basis[u, i]``.
        """
        if u is None:
            raise ValueError("time-varying family needs u")
        theta = np.asarray(theta, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        k = self.degree + 1
        pw = u[:, None] ** np.arange(k)                          # (U, k)
        coefs = theta.reshape(self.p + 1, k)
        alpha = pw @ coefs[: self.p].T                           # (U, p)
        s = pw @ coefs[self.p]
        lm, g, h = _log_mod_derivs_tv(alpha, lam)                # (U, M), (U, M, p), (U, M, p, p)
        logf = s[:, None] - math.log(TWO_PI) - lm
        ge = np.concatenate([-g, np.ones(lm.shape + (1,))], axis=-1)
        he = np.zeros(lm.shape + (self.p + 1, self.p + 1))
        he[..., : self.p, : self.p] = -h
        return logf, ge, he, pw

    def _tv_derivatives(self, theta, lam, u):
        """Derivatives on the ``(U, M)`` product of ``u`` (1-d) and ``lam`` nodes."""
        logf, ge, he, pw = self.local_derivatives(theta, lam, u)
        grad = np.einsum("ume,ui->umei", ge, pw).reshape(logf.shape + (self.d,))
        hess = np.einsum("umef,ui,uj->umeifj", he, pw, pw).reshape(logf.shape + (self.d, self.d))
        return logf, grad, hess


def _log_mod_derivs_tv(alpha, lam):
    """:func:`_log_mod_derivs` for coefficient rows ``alpha`` of shape ``(U, p)``."""
    lam = np.asarray(lam, dtype=float)
    n_u, p = alpha.shape
    if p == 0:
        z = np.zeros((n_u, len(lam)))
        return z, z[..., None][..., :0], np.zeros((n_u, len(lam), 0, 0))
    j = np.arange(1, p + 1)
    e = np.exp(1j * np.multiply.outer(lam, j))                  # (M, p)
    poly = 1.0 + alpha.astype(complex) @ e.T                    # (U, M)
    mod2 = np.abs(poly) ** 2
    d1 = 2.0 * np.real(e[None] * np.conj(poly)[..., None])
    d2 = 2.0 * np.cos(np.multiply.outer(lam, j[:, None] - j[None, :]))[None]
    g = d1 / mod2[..., None]
    h = d2 / mod2[..., None, None] - g[..., :, None] * g[..., None, :]
    return np.log(mod2), g, h


# -- data on the frequency grid ---------------------------------------------


def _values(sample) -> np.ndarray:
    x = np.asarray(sample.values if isinstance(sample, Sample) else sample, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("sample must be a nonempty 1-d series")
    return x


def weighted_lag_sums(x: np.ndarray, k_max: int, weights=None) -> np.ndarray:
    """``(1/n) sum_t w(t) X_{t+} X_{t-}`` for ``k = 0..k_max`` (bracket pairs, edge pairs dropped).

    ``weights`` is an array of ``w(t)`` for ``t = 1..n`` or ``None`` for 1.
    """
    n = len(x)
    k_max = min(int(k_max), n - 1)
    out = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        prod = x[k:] * x[: n - k]
        if weights is None:
            out[k] = np.sum(prod) / n
        else:
            lo = k // 2
            out[k] = np.dot(weights[lo : lo + n - k], prod) / n
    return out


def lag_series_on_grid(c: np.ndarray, nodes: np.ndarray, chunk: int = 256) -> np.ndarray:
    """``(1/2pi) sum_{|k| <= K} c(|k|) e^{-i lam k}`` for symmetric lag sums ``c``."""
    c = np.asarray(c, dtype=float)
    k = np.arange(1, len(c))
    out = np.empty(len(nodes))
    for i in range(0, len(nodes), chunk):
        lam = nodes[i : i + chunk]
        out[i : i + chunk] = (c[0] + 2.0 * np.cos(np.outer(lam, k)) @ c[1:]) / TWO_PI
    return out


def _data_lag(family: SpectralFamily, n: int) -> int:
    lag = family.inverse_lag
    return n - 1 if lag is None else min(lag, n - 1)


TV_GRID_NODES = 1026


def _default_grid(n: int, family: SpectralFamily | None = None) -> FrequencyGrid:
    if family is not None and family.time_varying:
        # data term has degree 2p in lam, exact once M >= 2p + 2; the smooth
        # log term needs a fixed resolution, not one growing with n
        return FrequencyGrid.trapezoid(min(2 * n + 2, max(TV_GRID_NODES, 2 * family.p + 4)))
    return FrequencyGrid.for_lags(n)


@dataclass
class _Design:
    """Integrand data: ``L = (1/4pi) sum_i sum_m w_m [a_i log(4pi^2 f) + D_im / f]``."""

    u: np.ndarray | None
    log_weight: np.ndarray
    data: np.ndarray          # (U, M)
    grid: FrequencyGrid


def _evaluate(family: SpectralFamily, theta, design: _Design, order: int = 0):
    theta = family.check(theta)
    w = design.grid.weights
    lam = design.grid.nodes
    d = family.d
    value = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    chunk = 256 if family.time_varying else len(design.log_weight)
    for i in range(0, len(design.log_weight), chunk):
        sl = slice(i, i + chunk)
        a = design.log_weight[sl]
        data = design.data[sl]
        if family.time_varying:
            # work in the pointwise parameters and map back through the u basis
            logf, ge, he, pw = family.local_derivatives(theta, lam, design.u[sl])
            if not np.all(np.isfinite(logf)):
                raise ParameterError(f"density degenerate at theta {theta.tolist()}")
            ratio = data * np.exp(-logf)
            value += float(np.sum((a[:, None] * (logf + math.log(4.0 * np.pi**2)) + ratio) @ w))
            if order >= 1:
                coef = (a[:, None] - ratio) * w
                G = np.einsum("um,ume->ue", coef, ge)
                grad += np.einsum("ue,ui->ei", G, pw).reshape(d)
            if order >= 2:
                H = np.einsum("um,umef->uef", coef, he) + np.einsum("um,ume,umf->uef", ratio * w, ge, ge)
                hess += np.einsum("uef,ui,uj->eifj", H, pw, pw).reshape(d, d)
            continue
        else:
            logf, g, h = family.derivatives(theta, lam)
            logf, g, h = logf[None], g[None], h[None]
        if not np.all(np.isfinite(logf)):
            raise ParameterError(f"density degenerate at theta {theta.tolist()}")
        ratio = data * np.exp(-logf)                             # D / f
        log4 = logf + math.log(4.0 * np.pi**2)
        value += float(np.sum((a[:, None] * log4 + ratio) @ w))
        if order >= 1:
            # d/dtheta [a log f + D/f] = (a - D/f) grad log f
            coef = (a[:, None] - ratio) * w
            grad += np.einsum("um,umd->d", coef, g)
        if order >= 2:
            hess += np.einsum("um,umde->de", coef, h)
            hess += np.einsum("um,umd,ume->de", ratio * w, g, g)
    scale = 1.0 / FOUR_PI
    return value * scale, grad * scale, hess * scale


def _global_design(x: np.ndarray, family: SpectralFamily, grid: FrequencyGrid | None) -> _Design:
    n = len(x)
    grid = _default_grid(n, family) if grid is None else grid
    k_max = _data_lag(family, n)
    if not family.time_varying:
        # (1/n) sum_t J_n(t/n, .) is the classical periodogram
        c = weighted_lag_sums(x, k_max)
        return _Design(None, np.ones(1), lag_series_on_grid(c, grid.nodes)[None], grid)
    from .spectral import lag_products

    p = lag_products(x, k_max)
    k = np.arange(1, k_max + 1)
    cosm = np.cos(np.outer(k, grid.nodes))
    j = (p[:, :1] + 2.0 * p[:, 1:] @ cosm) / TWO_PI / n
    return _Design(np.arange(1, n + 1) / n, np.full(n, 1.0 / n), j, grid)


def whittle_likelihood(sample, family: SpectralFamily, theta, grid: FrequencyGrid | None = None) -> float:
    """``L_n(theta) = (1/4pi)(1/n) sum_t int {log 4pi^2 f_theta + J_n / f_theta} dlam``."""
    x = _values(sample)
    return _evaluate(family, theta, _global_design(x, family, grid))[0]


def whittle_score(sample, family: SpectralFamily, theta, grid: FrequencyGrid | None = None) -> np.ndarray:
    """Gradient of :func:`whittle_likelihood` by differentiation under the integral."""
    x = _values(sample)
    return _evaluate(family, theta, _global_design(x, family, grid), order=1)[1]


def whittle_hessian(sample, family: SpectralFamily, theta, grid: FrequencyGrid | None = None) -> np.ndarray:
    x = _values(sample)
    return _evaluate(family, theta, _global_design(x, family, grid), order=2)[2]


def fisher_information(family: SpectralFamily, theta, nodes_per_panel: int = 48, n_u: int = 64) -> np.ndarray:
    """``I(theta) = (1/4pi) int grad log f grad log f' dlam`` (averaged over ``u`` for ``tvar``)."""
    theta = family.check(theta)
    lam, wl = lambda_quadrature((), nodes_per_panel)
    if family.time_varying:
        x, w = np.polynomial.legendre.leggauss(n_u)
        u, wu = (x + 1.0) / 2.0, w / 2.0
        _, g, _ = family.derivatives(theta, lam, u)
        info = np.einsum("u,m,umd,ume->de", wu, wl, g, g)
    else:
        _, g, _ = family.derivatives(theta, lam)
        info = np.einsum("m,md,me->de", wl, g, g)
    info = info / FOUR_PI
    return (info + info.T) / 2.0


def asymptotic_kl(truth, family: SpectralFamily, theta, n_u: int = 201, nodes_per_panel: int = 48) -> float:
    """``L(theta) = (1/4pi) int int {log 4pi^2 f_theta(u,lam) + f(u,lam)/f_theta(u,lam)} dlam du``.

    ``truth`` is a :class:`TvArmaModel` or a callable ``f(u, lam)``.
    """
    theta = family.check(theta)
    lam, wl = lambda_quadrature((), nodes_per_panel)
    if isinstance(truth, TvArmaModel):
        from .spectral import u_quadrature

        u, wu = u_quadrature(truth.breakpoints, n_u)
        f_true = tv_spectral_density(truth, u[:, None], lam[None, :])
    else:
        x, w = np.polynomial.legendre.leggauss(n_u)
        u, wu = (x + 1.0) / 2.0, w / 2.0
        f_true = np.asarray(truth(u[:, None], lam[None, :]), dtype=float) * np.ones((len(u), len(lam)))
    if family.time_varying:
        logf = family.derivatives(theta, lam, u)[0]
    else:
        logf = np.broadcast_to(family.log_f(theta, lam), f_true.shape)
    integrand = logf + math.log(4.0 * np.pi**2) + f_true * np.exp(-logf)
    return float(wu @ (integrand @ wl) / FOUR_PI)


def r_log_term(family: SpectralFamily, theta, n: int, nodes_per_panel: int = 48, n_u: int = 64) -> float:
    """``(1/4pi) int [(1/n) sum_t log f_theta(t/n, lam) - int log f_theta(u, lam) du] dlam``."""
    theta = family.check(theta)
    if not family.time_varying:
        return 0.0
    lam, wl = lambda_quadrature((), nodes_per_panel)
    t = np.arange(1, n + 1) / n
    riemann = np.mean(family.derivatives(theta, lam, t)[0], axis=0)
    x, w = np.polynomial.legendre.leggauss(n_u)
    exact = (w / 2.0) @ family.derivatives(theta, lam, (x + 1.0) / 2.0)[0]
    return float((riemann - exact) @ wl / FOUR_PI)


# -- optimizer --------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    """Box-constrained quasi-Newton with deterministic multistart and a Newton polish."""

    tol: float = 1e-10
    max_iter: int = 500
    starts: int = 3
    seed: int = 0
    polish: bool = True
    spread: float = 0.1

    @classmethod
    def from_spec(cls, spec) -> "OptimizerConfig":
        if spec is None:
            return cls()
        if isinstance(spec, OptimizerConfig):
            return spec
        return cls(**spec)


@dataclass
class FitResult:
    theta: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    at_boundary: bool
    message: str = ""
    family: str = ""

    def to_dict(self) -> dict:
        return {"theta": self.theta.tolist(), "value": self.value, "grad_norm": self.grad_norm,
                "iterations": self.iterations, "converged": self.converged,
                "at_boundary": self.at_boundary, "message": self.message, "family": self.family}


def _projected_grad(theta, grad, lo, hi, tol=1e-12):
    g = grad.copy()
    at_lo = theta <= lo + tol * np.maximum(1.0, np.abs(lo))
    at_hi = theta >= hi - tol * np.maximum(1.0, np.abs(hi))
    g[at_lo & (g > 0)] = 0.0
    g[at_hi & (g < 0)] = 0.0
    return g, bool(np.any(at_lo | at_hi))


def _safe_value(family, design, theta):
    try:
        return _evaluate(family, theta, design, order=1)[:2]
    except ParameterError:
        return math.inf, np.zeros(family.d)


def _newton_polish(family, design, theta, lo, hi, tol, max_steps=50):
    value = _evaluate(family, theta, design)[0]
    steps = 0
    for steps in range(1, max_steps + 1):
        _, g, h = _evaluate(family, theta, design, order=2)
        pg, _ = _projected_grad(theta, g, lo, hi)
        if np.linalg.norm(pg) < 1e-3 * tol:
            break
        free = pg != 0.0
        try:
            step = np.zeros_like(theta)
            step[free] = np.linalg.solve(h[np.ix_(free, free)], -g[free])
        except np.linalg.LinAlgError:
            break
        t = 1.0
        improved = False
        gnorm = np.linalg.norm(pg)
        while t > 1e-8:
            cand = np.clip(theta + t * step, lo, hi)
            try:
                cv, cg = _evaluate(family, cand, design, order=1)[:2]
            except ParameterError:
                cv, cg = math.inf, None
            scale = max(1.0, abs(value))
            # near the optimum the decrease drops below the rounding of the value,
            # so a flat value with a smaller gradient also counts as progress
            ok = cv <= value + 8.0 * np.finfo(float).eps * scale
            if not ok and cg is not None and cv <= value + 1e-12 * scale:
                ok = np.linalg.norm(_projected_grad(cand, cg, lo, hi)[0]) < 0.5 * gnorm
            if ok:
                improved = not np.array_equal(cand, theta)
                theta, value = cand, min(cv, value)
                break
            t /= 2.0
        if not improved or np.max(np.abs(t * step)) <= 1e-15 * (1.0 + np.max(np.abs(theta))):
            break
    return theta, value, steps


def _minimize(family: SpectralFamily, design: _Design, x0: np.ndarray, cfg: OptimizerConfig,
              extra_starts=()) -> FitResult:
    lo, hi = np.array(family.lower), np.array(family.upper)
    rng = np.random.default_rng(cfg.seed)
    starts = [np.clip(np.asarray(x0, dtype=float), lo, hi)]
    starts += [np.clip(np.asarray(s, dtype=float), lo, hi) for s in extra_starts]
    width = np.minimum(hi - lo, 2.0 * np.maximum(1.0, np.abs(starts[0])))
    while len(starts) < max(1, cfg.starts):
        jitter = rng.uniform(-1.0, 1.0, size=family.d) * cfg.spread * width
        starts.append(np.clip(starts[0] + jitter, lo, hi))

    best = None
    total_iter = 0
    for s in starts:
        res = minimize(lambda th: _safe_value(family, design, th), s, jac=True, method="L-BFGS-B",
                       bounds=family.bounds,
                       options={"maxiter": cfg.max_iter, "ftol": 1e-15, "gtol": cfg.tol * 1e-2})
        total_iter += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    theta = np.clip(best.x, lo, hi)
    msg = str(best.message)
    if cfg.polish:
        theta, _, steps = _newton_polish(family, design, theta, lo, hi, cfg.tol)
        total_iter += steps
    value, grad = _evaluate(family, theta, design, order=1)[:2]
    pg, boundary = _projected_grad(theta, grad, lo, hi)
    gnorm = float(np.linalg.norm(pg))
    return FitResult(theta, float(value), gnorm, total_iter, gnorm < cfg.tol or boundary, boundary,
                     msg, family.tag)


def _initial_theta(x: np.ndarray, family: SpectralFamily, c: np.ndarray | None = None, mass: float = 1.0):
    c = weighted_lag_sums(x, max(family.p, 1)) if c is None else c
    if family.kind == "tvar":
        theta = np.zeros(family.d)
        theta[family.p * (family.degree + 1)] = math.log(max(c[0], 1e-12))
        return theta
    theta = np.zeros(family.d)
    theta[-1] = c[0] / mass
    if family.p:
        try:
            alpha, s2 = _yule_walker_solve(c[: family.p + 1])
            theta[: family.p] = alpha
            if family.q == 0:
                theta[-1] = s2 / mass
        except (IllConditionedError, np.linalg.LinAlgError):
            pass
    lo, hi = np.array(family.lower), np.array(family.upper)
    return np.clip(theta, lo, hi)


def fit_whittle(sample, family: SpectralFamily, optimizer_cfg: OptimizerConfig | None = None,
                grid: FrequencyGrid | None = None) -> FitResult:
    """``theta_hat = argmin_theta L_n(theta)`` over the family box."""
    x = _values(sample)
    cfg = OptimizerConfig.from_spec(optimizer_cfg)
    design = _global_design(x, family, grid)
    return _minimize(family, design, _initial_theta(x, family), cfg)


# -- localized estimation ---------------------------------------------------


def _check_band(u, b: float) -> np.ndarray:
    if not 0.0 < b <= 1.0:
        raise BandError(f"bandwidth b = {b} must lie in (0, 1]")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    eps = 1e-12
    bad = (u < b / 2.0 - eps) | (u > 1.0 - b / 2.0 + eps)
    if np.any(bad):
        raise BandError(f"u = {u[bad].tolist()} outside the admissible band [{b / 2}, {1 - b / 2}]")
    return u


def kernel_weights(n: int, kernel: SmoothingKernel, b: float, u: float) -> np.ndarray:
    """``(1/b) K((u - t/n)/b)`` for ``t = 1..n``."""
    t = np.arange(1, n + 1) / n
    return kernel((u - t) / b) / b


def kernel_mass(n: int, kernel: SmoothingKernel, b: float, u: float) -> float:
    """Discrete kernel mass ``(1/n) sum_t (1/b) K((u - t/n)/b)``; tends to 1 as ``n b`` grows."""
    return float(np.sum(kernel_weights(n, kernel, b, u)) / n)


def local_covariances(sample, kernel: SmoothingKernel, b: float, u: float, k_max: int) -> np.ndarray:
    """``c_hat_n(u, k)`` for ``k = 0..k_max``."""
    x = _values(sample)
    _check_band(u, b)
    return weighted_lag_sums(x, k_max, kernel_weights(len(x), kernel, b, float(u)))


def local_covariance(sample, kernel: SmoothingKernel, b: float, u: float, k: int) -> float:
    """``c_hat_n(u, k) = (1/n) sum_t (1/b) K((u - t/n)/b) X_{t+} X_{t-}``."""
    k = abs(int(k))
    return float(local_covariances(sample, kernel, b, u, k)[k])


def _yule_walker_solve(c: np.ndarray):
    p = len(c) - 1
    if p == 0:
        return np.zeros(0), float(c[0])
    sigma = c[np.abs(np.subtract.outer(np.arange(p), np.arange(p)))]
    cond = float(np.linalg.cond(sigma))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(f"local covariance matrix is ill-conditioned (cond = {cond:.3e})", cond)
    alpha = -np.linalg.solve(sigma, c[1:])
    return alpha, float(c[0] + alpha @ c[1:])


@dataclass
class YuleWalkerResult:
    alpha: np.ndarray
    sigma2: float
    condition: float
    negative_variance: bool

    @property
    def theta(self) -> np.ndarray:
        return np.append(self.alpha, self.sigma2)


def local_yule_walker(sample, p: int, kernel: SmoothingKernel, b: float, u: float) -> YuleWalkerResult:
    """Closed-form local Yule-Walker estimate ``alpha_hat = -Sigma^{-1} C``, ``sigma2_hat = c0 + alpha_hat . C``."""
    c = local_covariances(sample, kernel, b, u, p)
    if p:
        sigma = c[np.abs(np.subtract.outer(np.arange(p), np.arange(p)))]
        cond = float(np.linalg.cond(sigma))
    else:
        cond = 1.0
    alpha, s2 = _yule_walker_solve(c)
    return YuleWalkerResult(alpha, s2, cond, s2 < 0.0)


def local_yule_walker_curve(values: np.ndarray, p: int, kernel: SmoothingKernel, b: float,
                            u_grid) -> np.ndarray:
    """Stack of local Yule-Walker ``theta`` rows over ``u_grid``; shape ``(len(u), p + 1)``."""
    return np.stack([local_yule_walker(values, p, kernel, b, u).theta for u in _check_band(u_grid, b)])


def _local_design(x, family, kernel, b, u, grid) -> tuple[_Design, np.ndarray, float]:
    if family.time_varying:
        raise ValueError("local fitting uses stationary families")
    n = len(x)
    grid = _default_grid(n) if grid is None else grid
    w = kernel_weights(n, kernel, b, u)
    c = weighted_lag_sums(x, _data_lag(family, n), w)
    mass = float(np.sum(w) / n)
    return _Design(None, np.array([mass]), lag_series_on_grid(c, grid.nodes)[None], grid), c, mass


def local_whittle_likelihood(sample, family: SpectralFamily, kernel: SmoothingKernel, b: float, u: float,
                             theta, grid: FrequencyGrid | None = None) -> float:
    """Kernel-weighted Whittle likelihood ``L_n(u, theta)``."""
    x = _values(sample)
    _check_band(u, b)
    return _evaluate(family, theta, _local_design(x, family, kernel, b, float(u), grid)[0])[0]


@dataclass
class LocalFitResult:
    u: np.ndarray
    theta: np.ndarray
    grad_norm: np.ndarray
    iterations: np.ndarray
    at_boundary: np.ndarray
    flags: list
    b: float
    kernel: str
    family: str
    yule_walker: np.ndarray | None = None

    def rows(self):
        for i, u in enumerate(self.u):
            yield [float(u), *self.theta[i].tolist(), float(self.grad_norm[i]), ";".join(self.flags[i])]


def fit_local_whittle(sample, family: SpectralFamily, kernel: SmoothingKernel, b: float, u_grid,
                      optimizer_cfg: OptimizerConfig | None = None, grid: FrequencyGrid | None = None,
                      warm_start: bool = True, workers: int = 1) -> LocalFitResult:
    """Per-``u`` minimizers of :func:`local_whittle_likelihood`.

    Autoregressive families start from the local Yule-Walker solution,
    which is also stored for cross-checking.  Otherwise each point starts
    from the previous solution when ``warm_start`` is set.  Failures at
    single points are flagged rather than raised.
    """
    x = _values(sample)
    u_grid = _check_band(u_grid, b)
    cfg = OptimizerConfig.from_spec(optimizer_cfg)
    n = len(x)
    grid = _default_grid(n) if grid is None else grid
    is_ar = family.kind in ("ar", "white-noise")

    def solve(u, prev):
        flags = []
        design, c, mass = _local_design(x, family, kernel, b, u, grid)
        yw = None
        if is_ar:
            try:
                alpha, s2 = _yule_walker_solve(c[: family.p + 1])
                yw = np.append(alpha, s2)
                if s2 < 0:
                    flags.append("negative-variance")
            except IllConditionedError as exc:
                flags.append(f"ill-conditioned:{exc.condition:.3e}")
        x0 = _initial_theta(x, family, c, mass)
        extra = [prev] if (prev is not None and not is_ar) else []
        try:
            res = _minimize(family, design, x0, cfg, extra)
        except (ParameterError, ValueError) as exc:
            flags.append(f"failed:{exc}")
            res = FitResult(np.full(family.d, np.nan), math.nan, math.nan, 0, False, False, str(exc))
        if not res.converged:
            flags.append("not-converged")
        if res.at_boundary:
            flags.append("boundary")
        return res, yw, flags

    results = []
    if warm_start and not is_ar:
        prev = None
        for u in u_grid:
            out = solve(float(u), prev)
            prev = out[0].theta if np.all(np.isfinite(out[0].theta)) else prev
            results.append(out)
    else:
        with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
            results = list(pool.map(lambda u: solve(float(u), None), u_grid))

    theta = np.stack([r[0].theta for r in results])
    yw = np.stack([r[1] if r[1] is not None else np.full(family.d, np.nan) for r in results]) if is_ar else None
    return LocalFitResult(
        u=u_grid, theta=theta,
        grad_norm=np.array([r[0].grad_norm for r in results]),
        iterations=np.array([r[0].iterations for r in results]),
        at_boundary=np.array([r[0].at_boundary for r in results]),
        flags=[r[2] for r in results], b=float(b), kernel=kernel.kind, family=family.tag,
        yule_walker=yw,
    )


def default_bandwidth(n: int) -> float:
    """``b = n^{-1/5}``."""
    return float(n) ** -0.2


def score_functional(family: SpectralFamily, theta, index: int, weight=None):
    """Frequency part ``(1/4pi) d f_theta^{-1} / d theta_index`` as a spectral functional.

    ``sqrt(n)`` times the Whittle score is the empirical process at these
    functionals.  For autoregressive families ``1/f`` is a trigonometric
    polynomial and the result is an exact :class:`TrigSeries`; otherwise the
    frequency part is sampled (approximate Fourier coefficients).  ``weight``
    is an optional time part, e.g. a :class:`~locspec.kernels.TimeKernel`.
    """
    from .spectral import ONE, SampledFrequency, SpectralFunctional, TrigSeries

    theta = family.check(theta)
    if not 0 <= index < family.d:
        raise IndexError(f"parameter index {index} out of range for {family.tag}")
    if family.time_varying:
        raise ValueError("score functionals are defined for stationary families")
    weight = ONE if weight is None else weight
    if family.q == 0:
        p = family.p
        a = np.concatenate(([1.0], theta[:p]))
        s2 = theta[-1]
        if index == family.d - 1:
            # d/d sigma^2 of (2 pi / sigma^2)|A|^2
            r = np.array([a[: p + 1 - m] @ a[m:] for m in range(p + 1)])
            coef = -TWO_PI / s2**2 * r
        else:
            i = index + 1
            dr = np.zeros(p + 1)
            for m in range(p + 1):
                if i - m >= 0:
                    dr[m] += a[i - m]
                if i + m <= p:
                    dr[m] += a[i + m]
            coef = TWO_PI / s2 * dr
        # sum_m r_m e^{i lam m} over m = -p..p as a cosine series
        cos = np.concatenate(([coef[0]], 2.0 * coef[1:])) / FOUR_PI
        return SpectralFunctional.separable(weight, TrigSeries(tuple(cos)))

    def psi(lam, theta=theta, index=index):
        _, g, _ = family.derivatives(theta, lam)
        return -np.exp(-family.log_f(theta, lam)) * g[..., index] / FOUR_PI

    return SpectralFunctional.separable(weight, SampledFrequency(psi, name=f"score[{family.tag},{index}]"))
