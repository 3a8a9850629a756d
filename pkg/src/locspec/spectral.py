"""Pre-periodogram, spectral-mean functionals and their limits.

Functionals ``phi(u, lam)`` are finite sums of separable terms
``scale * w(u) * psi(lam)``.  The time part ``w`` is a
:class:`~locspec.curves.CoefficientCurve` or a
:class:`~locspec.kernels.TimeKernel`; the frequency part is one of the
classes below, each with a closed-form Fourier transform where one exists.

Lag products follow the bracket rule ``[x] = floor(x)``: at time ``t`` and
lag ``k`` the pair is ``X_{t+ceil(k/2)} X_{t-floor(k/2)}``, and pairs with an
index outside ``1..n`` are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .curves import CoefficientCurve
from .kernels import SmoothingKernel, TimeKernel
from .process import Sample, TvArmaModel, covariance_matrix, tv_spectral_density

TWO_PI = 2.0 * np.pi
IMAG_TOL = 1e-10
SAMPLED_LAG_ROOM = 1024


class ComplexResidualError(ArithmeticError):
    """A quantity that must be real came out with a non-negligible imaginary part."""


# -- frequency parts --------------------------------------------------------


def _variation_1d(fn, dfn, a: float, b: float, breakpoints=(), samples: int = 4096) -> tuple[float, float]:
    """Total variation and sup norm of a piecewise-smooth function on [a, b].

    Critical points are located from sign changes of the derivative on a
    fine grid and refined with Brent's method.
    """
    edges = sorted({a, b, *[x for x in breakpoints if a < x < b]})
    pts = []
    for lo, hi in zip(edges, edges[1:]):
        xs = np.linspace(lo, hi, samples)
        d = dfn(xs)
        pts.append(lo)
        for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
            pts.append(brentq(dfn, xs[i], xs[i + 1], xtol=1e-14))
        pts.append(hi)
    pts = np.array(pts)
    vals = fn(pts)
    return float(np.sum(np.abs(np.diff(vals)))), float(np.max(np.abs(vals)))


@dataclass(frozen=True)
class Indicator:
    """``psi(lam) = 1`` on ``[lo, hi]``, 0 elsewhere in ``[-pi, pi]``."""

    lo: float = 0.0
    hi: float = np.pi

    def __post_init__(self):
        if not -np.pi <= self.lo < self.hi <= np.pi:
            raise ValueError("indicator interval must satisfy -pi <= lo < hi <= pi")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return ((lam >= self.lo) & (lam <= self.hi)).astype(float)

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        safe = np.where(k == 0, 1.0, k)
        val = (np.exp(1j * safe * self.hi) - np.exp(1j * safe * self.lo)) / (1j * safe)
        return np.where(k == 0, self.hi - self.lo, val)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(x for x in (self.lo, self.hi) if -np.pi < x < np.pi)

    max_lag = None

    def total_variation(self) -> float:
        return float(len(self.breakpoints))

    def sup_abs(self) -> float:
        return 1.0

    def to_dict(self) -> dict:
        return {"kind": "indicator", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class TrigSeries:
    """``psi(lam) = sum_k cos_k cos(k lam) + sin_k sin(k lam)``; ``sin[0]`` is ignored."""

    cos: tuple[float, ...] = (1.0,)
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))

    @classmethod
    def cosine(cls, lag: int, amplitude: float = 1.0) -> "TrigSeries":
        lag = abs(int(lag))
        coefs = [0.0] * (lag + 1)
        coefs[lag] = amplitude
        return cls(cos=tuple(coefs))

    @classmethod
    def sine(cls, lag: int, amplitude: float = 1.0) -> "TrigSeries":
        coefs = [0.0] * (int(lag) + 1)
        coefs[int(lag)] = amplitude
        return cls(cos=(0.0,), sin=tuple(coefs))

    @property
    def max_lag(self) -> int:
        return max(len(self.cos), len(self.sin)) - 1

    def _coefs(self):
        m = self.max_lag + 1
        c = np.zeros(m)
        s = np.zeros(m)
        c[: len(self.cos)] = self.cos
        s[: len(self.sin)] = self.sin
        s[0] = 0.0
        return c, s

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        c, s = self._coefs()
        k = np.arange(len(c))
        arg = lam[..., None] * k
        return np.sum(c * np.cos(arg) + s * np.sin(arg), axis=-1)

    def derivative(self, lam):
        lam = np.asarray(lam, dtype=float)
        c, s = self._coefs()
        k = np.arange(len(c))
        arg = lam[..., None] * k
        return np.sum(k * (s * np.cos(arg) - c * np.sin(arg)), axis=-1)

    def fourier(self, k):
        k = np.asarray(k)
        c, s = self._coefs()
        a = np.abs(k)
        inside = a <= self.max_lag
        idx = np.where(inside, a, 0)
        val = np.pi * (c[idx] + 1j * np.sign(k) * s[idx])
        val = np.where(k == 0, TWO_PI * c[0], val)
        return np.where(inside, val, 0.0 + 0.0j)

    breakpoints: tuple = ()

    def total_variation(self) -> float:
        return _variation_1d(self, self.derivative, -np.pi, np.pi)[0]

    def sup_abs(self) -> float:
        return _variation_1d(self, self.derivative, -np.pi, np.pi)[1]

    def to_dict(self) -> dict:
        return {"kind": "trig", "cos": list(self.cos), "sin": list(self.sin)}


@dataclass(frozen=True)
class FrequencyKernel:
    """``psi(lam) = K((lam - center) / bandwidth) / bandwidth`` with support inside [-pi, pi]."""

    center: float = 0.0
    bandwidth: float = 0.5
    kernel: SmoothingKernel = SmoothingKernel()

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if abs(self.center) + self.bandwidth / 2.0 > np.pi + 1e-12:
            raise ValueError("frequency kernel support must lie inside [-pi, pi]")

    def __call__(self, lam):
        return self.kernel((np.asarray(lam, dtype=float) - self.center) / self.bandwidth) / self.bandwidth

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        return np.exp(1j * k * self.center) * self.kernel.fourier(self.bandwidth * k)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = [self.center - self.bandwidth / 2.0, self.center + self.bandwidth / 2.0]
        if self.kernel.kind == "triangular":
            pts.append(self.center)
        return tuple(sorted(p for p in pts if -np.pi < p < np.pi))

    max_lag = None

    def total_variation(self) -> float:
        return self.kernel.total_variation() / self.bandwidth

    def sup_abs(self) -> float:
        return self.kernel.sup_abs() / self.bandwidth

    def to_dict(self) -> dict:
        return {"kind": "kernel", "center": self.center, "bandwidth": self.bandwidth,
                "kernel": self.kernel.kind}


@dataclass(frozen=True, eq=False)
class SampledFrequency:
    """A smooth 2pi-periodic frequency function known only through evaluation.

    Fourier coefficients come from the periodic trapezoid rule on
    ``resolution`` nodes; variation and sup are taken from dense samples and
    are therefore approximate.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "sampled"
    resolution: int = 8192

    def __call__(self, lam):
        return np.asarray(self.fn(np.asarray(lam, dtype=float)), dtype=float)

    def _coefficients(self) -> np.ndarray:
        m = self.resolution
        lam = -np.pi + TWO_PI * np.arange(m) / m
        # c[j] ~ int psi(lam) e^{i lam j} for j = -m/2 .. m/2 - 1
        vals = self(lam)
        spec = np.fft.fft(vals) * (TWO_PI / m)
        j = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        # e^{i lam_m j} with lam_m = -pi + 2 pi m / M gives a (-1)^j factor and conjugation
        coef = np.conj(spec) * np.where(j % 2 == 0, 1.0, -1.0)
        return j, coef

    def fourier(self, k):
        k = np.asarray(k)
        j, coef = self._coefficients()
        lookup = dict(zip(j.tolist(), coef))
        flat = np.array([lookup.get(int(x), 0.0) for x in k.reshape(-1)], dtype=complex)
        return flat.reshape(k.shape)

    breakpoints: tuple = ()
    max_lag = None

    def total_variation(self) -> float:
        lam = np.linspace(-np.pi, np.pi, 20001)
        return float(np.sum(np.abs(np.diff(self(lam)))))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self(np.linspace(-np.pi, np.pi, 20001)))))

    def to_dict(self) -> dict:
        return {"kind": "sampled", "name": self.name}


# -- functionals ------------------------------------------------------------


ONE = CoefficientCurve.constant(1.0)


@dataclass(frozen=True, eq=False)
class Term:
    weight: object
    freq: object
    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class SpectralFunctional:
    """``phi(u, lam) = sum_i scale_i w_i(u) psi_i(lam)``, zero outside [0,1] x [-pi,pi]."""

    terms: tuple[Term, ...]

    @classmethod
    def separable(cls, weight, freq, scale: float = 1.0) -> "SpectralFunctional":
        return cls((Term(weight, freq, float(scale)),))

    @classmethod
    def of_frequency(cls, freq, scale: float = 1.0) -> "SpectralFunctional":
        return cls.separable(ONE, freq, scale)

    @classmethod
    def constant(cls, value: float = 1.0) -> "SpectralFunctional":
        return cls.of_frequency(TrigSeries((1.0,)), value)

    @classmethod
    def cosine(cls, lag: int) -> "SpectralFunctional":
        return cls.of_frequency(TrigSeries.cosine(lag))

    @classmethod
    def indicator(cls, mu: float, lo: float = 0.0) -> "SpectralFunctional":
        return cls.of_frequency(Indicator(lo, mu))

    def __add__(self, other: "SpectralFunctional") -> "SpectralFunctional":
        return SpectralFunctional(self.terms + other.terms)

    def __mul__(self, c: float) -> "SpectralFunctional":
        return SpectralFunctional(tuple(Term(t.weight, t.freq, t.scale * float(c)) for t in self.terms))

    __rmul__ = __mul__

    def __call__(self, u, lam):
        u = np.asarray(u, dtype=float)
        lam = np.asarray(lam, dtype=float)
        inside = (u >= 0.0) & (u <= 1.0) & (np.abs(lam) <= np.pi)
        total = sum(t.scale * t.weight(u) * t.freq(lam) for t in self.terms)
        return np.where(inside, total, 0.0)

    def fourier(self, u, k):
        """``phi_hat(u, k) = int phi(u, lam) e^{i lam k} dlam``; shape ``u.shape + k.shape``."""
        u = np.asarray(u, dtype=float)
        k = np.asarray(k)
        out = np.zeros(u.shape + k.shape, dtype=complex)
        for t in self.terms:
            w = np.where((u >= 0.0) & (u <= 1.0), t.weight(u), 0.0)
            out += t.scale * np.multiply.outer(w, t.freq.fourier(k))
        return out

    @property
    def time_breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for t in self.terms for b in t.weight.breakpoints if 0.0 < b < 1.0}))

    @property
    def freq_breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for t in self.terms for b in t.freq.breakpoints}))

    @property
    def max_lag(self):
        """Largest lag with a nonzero coefficient, or ``None`` if unbounded."""
        lags = [t.freq.max_lag for t in self.terms]
        return None if any(m is None for m in lags) else max(lags)

    @property
    def is_time_invariant(self) -> bool:
        return all(isinstance(t.weight, CoefficientCurve) and t.weight.is_constant for t in self.terms)

    def to_dict(self) -> dict:
        return {"terms": [{"time": t.weight.to_dict(), "freq": t.freq.to_dict(), "scale": t.scale}
                          for t in self.terms]}


def fourier_coefficients(phi: SpectralFunctional, u, k_range) -> np.ndarray:
    """``phi_hat(u, k)`` for each ``u`` and ``k``; conjugate symmetric in ``k`` for real phi."""
    return phi.fourier(u, np.asarray(k_range))


# -- tapers -----------------------------------------------------------------


@dataclass(frozen=True)
class Taper:
    """Data taper ``h: (0, 1] -> [0, C]`` with log-concave shape.

    Kinds: ``none``; ``cosine`` (split-cosine bell with ``ramp`` fraction of
    the span in the two tapered ends, ``ramp = 1`` is the Hann taper);
    ``segment`` (indicator of ``[a, b]``); ``custom`` (sampled values for a
    fixed length).
    """

    kind: str = "none"
    ramp: float = 0.5
    a: float = 0.0
    b: float = 1.0
    samples: tuple[float, ...] = ()
    bound: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "cosine", "segment", "custom"):
            raise ValueError(f"unknown taper kind {self.kind!r}")
        if self.kind == "cosine" and not 0.0 < self.ramp <= 1.0:
            raise ValueError("cosine taper ramp must lie in (0, 1]")
        if self.kind == "segment" and not 0.0 <= self.a < self.b <= 1.0:
            raise ValueError("segment taper needs 0 <= a < b <= 1")
        if self.kind == "custom":
            object.__setattr__(self, "samples", tuple(float(v) for v in self.samples))
            check_taper_values(np.asarray(self.samples), self.bound)

    @property
    def is_identity(self) -> bool:
        return self.kind == "none"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > 0.0) & (u <= 1.0)
        if self.kind == "none":
            val = np.ones_like(u)
        elif self.kind == "cosine":
            r = self.ramp
            left = 0.5 * (1.0 - np.cos(TWO_PI * u / r))
            right = 0.5 * (1.0 - np.cos(TWO_PI * (1.0 - u) / r))
            val = np.where(u < r / 2.0, left, np.where(u > 1.0 - r / 2.0, right, 1.0))
        elif self.kind == "segment":
            val = ((u >= self.a) & (u <= self.b)).astype(float)
        else:
            m = len(self.samples)
            idx = np.clip(np.ceil(u * m).astype(int) - 1, 0, m - 1)
            val = np.asarray(self.samples)[idx]
        return np.where(inside, val, 0.0)

    def values(self, n: int) -> np.ndarray:
        """``h(t/n)`` for ``t = 1..n``, checked against the taper invariants."""
        if self.kind == "custom" and len(self.samples) != n:
            raise ValueError(f"custom taper has {len(self.samples)} samples, sample has n = {n}")
        vals = self(np.arange(1, n + 1) / n)
        check_taper_values(vals, self.bound)
        return vals

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "segment":
            return tuple(x for x in (self.a, self.b) if 0.0 < x < 1.0)
        if self.kind == "cosine":
            return tuple(x for x in (self.ramp / 2.0, 1.0 - self.ramp / 2.0) if 0.0 < x < 1.0)
        if self.kind == "custom":
            m = len(self.samples)
            return tuple(np.arange(1, m) / m)
        return ()

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "cosine":
            out["ramp"] = self.ramp
        elif self.kind == "segment":
            out.update(a=self.a, b=self.b)
        elif self.kind == "custom":
            out["samples"] = list(self.samples)
        return out


def check_taper_values(h: np.ndarray, bound: float = 1.0) -> None:
    """Boundedness, bounded variation and discrete log-concavity of a sampled taper."""
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        raise ValueError("taper has no values")
    if not np.all(np.isfinite(h)) or np.any(h < 0.0) or np.any(h > bound * (1 + 1e-12)):
        raise ValueError(f"taper values must lie in [0, {bound}]")
    if np.sum(np.abs(np.diff(h))) > 2.0 * bound * (1 + 1e-9):
        raise ValueError("taper variation exceeds 2 * bound")
    pos = np.nonzero(h > 0)[0]
    if pos.size and pos[-1] - pos[0] + 1 != pos.size:
        raise ValueError("taper support must be contiguous (log-concavity)")
    if h.size >= 3:
        lhs = h[:-2] * h[2:]
        rhs = h[1:-1] ** 2
        mask = (h[:-2] > 0) & (h[1:-1] > 0) & (h[2:] > 0)
        if np.any(lhs[mask] > rhs[mask] * (1 + 1e-12) + 1e-15):
            raise ValueError("taper is not log-concave")


NO_TAPER = Taper()


def _taper_values(taper: Taper | None, n: int) -> np.ndarray | None:
    if taper is None or taper.is_identity:
        return None
    return taper.values(n)


# -- frequency grids --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Quadrature nodes and weights on [-pi, pi]."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "trapezoid"

    @property
    def size(self) -> int:
        return len(self.nodes)

    @classmethod
    def trapezoid(cls, m: int) -> "FrequencyGrid":
        """``m`` equispaced nodes including both ends; exact for ``e^{i lam k}``, ``0 < |k| < m - 1``."""
        if m < 2:
            raise ValueError("trapezoid grid needs at least 2 nodes")
        nodes = np.linspace(-np.pi, np.pi, m)
        w = np.full(m, TWO_PI / (m - 1))
        w[0] = w[-1] = np.pi / (m - 1)
        return cls(nodes, w, "trapezoid")

    @classmethod
    def for_lags(cls, n: int, extra_lag: int = 0) -> "FrequencyGrid":
        """Default exactness grid ``M = max(2n + 2, n + extra_lag + 2)``."""
        return cls.trapezoid(max(2 * n + 2, n + extra_lag + 2))

    @classmethod
    def panels(cls, breakpoints: Sequence[float], max_lag: int, min_nodes: int = 16) -> "FrequencyGrid":
        """Composite Gauss-Legendre panels split at ``breakpoints``.

        Each panel of half-width ``a`` gets ``ceil(1.5 * max_lag * a) + 30``
        nodes, enough to integrate ``e^{i lam k}`` for ``|k| <= max_lag`` times a
        low-degree polynomial to rounding accuracy.
        """
        edges = sorted({-np.pi, np.pi, *[b for b in breakpoints if -np.pi < b < np.pi]})
        nodes, weights = [], []
        for lo, hi in zip(edges, edges[1:]):
            half = (hi - lo) / 2.0
            m = max(min_nodes, int(math.ceil(1.5 * max_lag * half)) + 30)
            x, w = np.polynomial.legendre.leggauss(m)
            nodes.append(lo + half * (x + 1.0))
            weights.append(half * w)
        return cls(np.concatenate(nodes), np.concatenate(weights), "gauss-panels")

    @classmethod
    def exact_for(cls, phi: SpectralFunctional, n: int) -> "FrequencyGrid":
        """Grid on which ``int phi J_n dlam`` is computed to rounding accuracy."""
        if phi.freq_breakpoints or any(isinstance(t.freq, FrequencyKernel) for t in phi.terms):
            return cls.panels(phi.freq_breakpoints, n + 2)
        lag = phi.max_lag
        # sampled parts have unbounded but fast-decaying coefficients: leave room against aliasing
        return cls.for_lags(n, SAMPLED_LAG_ROOM if lag is None else lag)


def lambda_quadrature(breakpoints: Sequence[float] = (), nodes_per_panel: int = 48,
                      max_width: float = np.pi / 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on [-pi, pi] for smooth-times-piecewise integrands."""
    edges = sorted({-np.pi, np.pi, *[b for b in breakpoints if -np.pi < b < np.pi]})
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes, weights = [], []
    for lo, hi in zip(edges, edges[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / max_width)))
        sub = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(sub, sub[1:]):
            half = (b - a) / 2.0
            nodes.append(a + half * (x + 1.0))
            weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def u_quadrature(breakpoints: Sequence[float] = (), n_points: int = 401) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint rule on [0, 1] with panels split at ``breakpoints`` (never evaluates at a jump)."""
    edges = sorted({0.0, 1.0, *[b for b in breakpoints if 0.0 < b < 1.0]})
    nodes, weights = [], []
    for lo, hi in zip(edges, edges[1:]):
        m = max(1, int(round(n_points * (hi - lo))))
        h = (hi - lo) / m
        nodes.append(lo + h * (np.arange(m) + 0.5))
        weights.append(np.full(m, h))
    return np.concatenate(nodes), np.concatenate(weights)


# -- lag products and pre-periodogram ---------------------------------------


def bracket_pair(t, k):
    """Indices ``([t + 1/2 + k/2], [t + 1/2 - k/2])`` with ``[x] = floor(x)``."""
    t = np.asarray(t)
    k = np.asarray(k)
    return t + (k + 1) // 2, t - k // 2


def lag_products(values: np.ndarray, k_max: int | None = None, taper_values: np.ndarray | None = None) -> np.ndarray:
    """``P[..., t-1, k] = X_{t+}X_{t-}`` for ``k = 0..k_max`` (zero when an index leaves ``1..n``).

    Leading axes of ``values`` are treated as independent samples.
    Negative lags are not stored: ``P(t, -k) = P(t, k)``.
    """
    y = np.asarray(values, dtype=float)
    if taper_values is not None:
        y = y * taper_values
    n = y.shape[-1]
    k_max = n - 1 if k_max is None else min(int(k_max), n - 1)
    out = np.zeros(y.shape[:-1] + (n, k_max + 1))
    for k in range(k_max + 1):
        lo = k // 2
        length = n - k
        # s = t - lo runs over 1..n-k; the pair is (s + k, s)
        out[..., lo : lo + length, k] = y[..., k:] * y[..., :length]
    return out


def _lag_matrix_from_cov(cov: np.ndarray, k_max: int) -> np.ndarray:
    n = cov.shape[0]
    out = np.zeros((n, k_max + 1))
    for k in range(k_max + 1):
        lo = k // 2
        s = np.arange(n - k)
        out[lo : lo + n - k, k] = cov[s + k, s]
    return out


def _full_lag_exponentials(k_max: int, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ks = np.arange(-k_max, k_max + 1)
    return ks, np.exp(-1j * np.outer(ks, nodes)) / TWO_PI


def _assert_real(z: np.ndarray, scale: float) -> np.ndarray:
    resid = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if resid > IMAG_TOL * max(1.0, scale):
        raise ComplexResidualError(f"imaginary residual {resid:.3e} exceeds tolerance")
    return z.real


def preperiodogram_matrix(sample, grid: FrequencyGrid, taper: Taper | None = None,
                          times: Sequence[int] | None = None) -> np.ndarray:
    """``J_n(t/n, lam_m)`` for the requested ``t`` (default all) on every grid node."""
    x = _values(sample)
    n = len(x)
    p = lag_products(x, n - 1, _taper_values(taper, n))
    if times is not None:
        idx = np.asarray(times) - 1
        if np.any(idx < 0) or np.any(idx >= n):
            raise IndexError(f"t must lie in 1..{n}")
        p = p[idx]
    full = np.concatenate((p[:, :0:-1], p), axis=1)   # lags -(n-1)..(n-1)
    _, expo = _full_lag_exponentials(n - 1, grid.nodes)
    z = full @ expo
    return _assert_real(z, float(np.max(np.sum(np.abs(full), axis=1), initial=0.0)) / TWO_PI)


def pre_periodogram(sample, t: int, grid: FrequencyGrid, taper: Taper | None = None) -> np.ndarray:
    """Pre-periodogram ``J_n(t/n, .)`` on the grid nodes."""
    return preperiodogram_matrix(sample, grid, taper, times=[t])[0]


def classical_periodogram(sample, grid: FrequencyGrid) -> np.ndarray:
    """``I_n(lam) = |sum_s X_s e^{-i lam s}|^2 / (2 pi n)``."""
    x = _values(sample)
    n = len(x)
    if n < 1:
        raise ValueError("periodogram needs n >= 1")
    dft = np.exp(-1j * np.outer(grid.nodes, np.arange(1, n + 1))) @ x
    return np.abs(dft) ** 2 / (TWO_PI * n)


def _values(sample) -> np.ndarray:
    return np.asarray(sample.values if isinstance(sample, Sample) else sample, dtype=float)


# -- spectral means ---------------------------------------------------------


def spectral_mean_freq(sample, phi: SpectralFunctional, taper: Taper | None = None,
                       grid: FrequencyGrid | None = None) -> float:
    """``F_n(phi) = (1/n) sum_t int phi(t/n, lam) J_n(t/n, lam) dlam`` by quadrature over ``grid``."""
    x = _values(sample)
    n = len(x)
    grid = FrequencyGrid.exact_for(phi, n) if grid is None else grid
    j = preperiodogram_matrix(x, grid, taper)
    u = np.arange(1, n + 1) / n
    vals = phi(u[:, None], grid.nodes[None, :])
    return float(np.sum((vals * j) @ grid.weights) / n)


def _lag_mean(phi: SpectralFunctional, lagmat: np.ndarray, n: int) -> np.ndarray:
    """``(1/2 pi n) sum_t sum_k phi_hat(t/n, -k) L[t, k]`` for lag matrices symmetric in ``k``.

    ``lagmat`` has shape ``(..., n, K + 1)``; real phi lets the ``+-k`` pair
    collapse to ``2 Re phi_hat(t/n, k)``.
    """
    k_max = lagmat.shape[-1] - 1
    k = np.arange(k_max + 1)
    u = np.arange(1, n + 1) / n
    total = np.zeros(lagmat.shape[:-2])
    for term in phi.terms:
        w = term.weight(u)
        coef = term.freq.fourier(k).real * 2.0
        coef[0] /= 2.0
        weighted = np.einsum("...tk,t->...k", lagmat, w)
        total = total + term.scale * np.sum(weighted * coef, axis=-1)
    return total / (TWO_PI * n)


def spectral_mean_lag(sample, phi: SpectralFunctional, taper: Taper | None = None,
                      k_max: int | None = None) -> float:
    """Time-domain evaluation of ``F_n(phi)`` through the Fourier coefficients of ``phi``."""
    x = _values(sample)
    n = len(x)
    lag = phi.max_lag
    k_max = (n - 1) if k_max is None else int(k_max)
    if lag is not None:
        k_max = min(k_max, lag)
    p = lag_products(x, k_max, _taper_values(taper, n))
    return float(_lag_mean(phi, p, n))


def spectral_means(values: np.ndarray, phis: Sequence[SpectralFunctional], taper: Taper | None = None) -> np.ndarray:
    """``F_n(phi_j)`` for a batch of samples (rows of ``values``); shape ``(R, len(phis))``."""
    values = np.atleast_2d(values)
    n = values.shape[-1]
    lags = [phi.max_lag for phi in phis]
    k_max = n - 1 if any(l is None for l in lags) else min(n - 1, max(lags))
    p = lag_products(values, k_max, _taper_values(taper, n))
    return np.stack([_lag_mean(phi, p, n) for phi in phis], axis=-1)


def _taper_limit(taper: Taper | None):
    if taper is None or taper.is_identity:
        return lambda u: np.ones_like(np.asarray(u, dtype=float)), ()
    return taper, taper.breakpoints


def _u_nodes(model: TvArmaModel, phis, taper, n_u: int):
    h, hb = _taper_limit(taper)
    bps = set(model.breakpoints.tolist()) | set(hb)
    for phi in phis:
        bps |= set(phi.time_breakpoints)
    u, wu = u_quadrature(sorted(bps), n_u)
    return u, wu, h(u)


def theoretical_functional(model: TvArmaModel, phi: SpectralFunctional, taper: Taper | None = None,
                           n_u: int = 401, nodes_per_panel: int = 48, return_error: bool = False):
    """``F(phi) = int h(u)^2 int phi(u, lam) f(u, lam) dlam du`` by nested quadrature.

    With ``return_error`` the result is ``(value, estimate)`` where the
    estimate is the change when both rules are refined.
    """
    if return_error:
        coarse = theoretical_functional(model, phi, taper, n_u, nodes_per_panel)
        fine = theoretical_functional(model, phi, taper, 2 * n_u + 1, 2 * nodes_per_panel)
        return fine, abs(fine - coarse)
    u, wu, h = _u_nodes(model, [phi], taper, n_u)
    lam, wl = lambda_quadrature(phi.freq_breakpoints, nodes_per_panel)
    f = tv_spectral_density(model, u[:, None], lam[None, :])
    inner = (phi(u[:, None], lam[None, :]) * f) @ wl
    return float(np.sum(wu * h**2 * inner))


def clt_covariance(phi_j: SpectralFunctional, phi_k: SpectralFunctional, model: TvArmaModel,
                   taper: Taper | None = None, n_u: int = 401, nodes_per_panel: int = 48) -> float:
    """Limit covariance of ``(E_n(phi_j), E_n(phi_k))`` including the fourth-cumulant term."""
    u, wu, h = _u_nodes(model, [phi_j, phi_k], taper, n_u)
    bps = set(phi_j.freq_breakpoints) | set(phi_k.freq_breakpoints) | {-b for b in phi_k.freq_breakpoints}
    lam, wl = lambda_quadrature(sorted(bps), nodes_per_panel)
    uu, ll = u[:, None], lam[None, :]
    f = tv_spectral_density(model, uu, ll)
    pj = phi_j(uu, ll)
    pk = phi_k(uu, ll) + phi_k(uu, -ll)
    gauss = TWO_PI * np.sum(wu * h**4 * ((pj * pk * f**2) @ wl))
    cum = model.kappa4 * np.sum(wu * h**4 * ((pj * f) @ wl) * ((phi_k(uu, ll) * f) @ wl))
    return float(gauss + cum)


def expected_spectral_mean(model: TvArmaModel, phi: SpectralFunctional, n: int,
                           taper: Taper | None = None, j_max: int | None = None) -> float:
    """Exact finite-``n`` expectation of ``F_n(phi)`` from the true covariances of the process."""
    cov = covariance_matrix(model, n, j_max)
    h = _taper_values(taper, n)
    if h is not None:
        cov = cov * np.outer(h, h)
    lag = phi.max_lag
    k_max = n - 1 if lag is None else min(n - 1, lag)
    return float(_lag_mean(phi, _lag_matrix_from_cov(cov, k_max), n))


def empirical_process(sample, phi: SpectralFunctional, model: TvArmaModel | None = None,
                      taper: Taper | None = None, target: float | None = None) -> float:
    """``E_n(phi) = sqrt(n) (F_n(phi) - F(phi))``; ``target`` overrides the model-based ``F``."""
    if target is None:
        if model is None:
            raise ValueError("need a model or an explicit target F(phi)")
        target = theoretical_functional(model, phi, taper)
    x = _values(sample)
    return math.sqrt(len(x)) * (spectral_mean_lag(x, phi, taper) - target)


# -- norms ------------------------------------------------------------------


def _dense_u(phi: SpectralFunctional, m: int = 801) -> np.ndarray:
    bps = np.array(phi.time_breakpoints)
    extra = np.concatenate((bps, bps - 1e-9)) if bps.size else np.empty(0)
    return np.unique(np.clip(np.concatenate((np.linspace(0.0, 1.0, m), extra)), 0.0, 1.0))


def _dense_lam(phi: SpectralFunctional, m: int = 1601) -> np.ndarray:
    bps = np.array(phi.freq_breakpoints)
    extra = np.concatenate((bps, bps - 1e-9, bps + 1e-9)) if bps.size else np.empty(0)
    return np.unique(np.clip(np.concatenate((np.linspace(-np.pi, np.pi, m), extra)), -np.pi, np.pi))


def norms(phi: SpectralFunctional, n: int | None = None, taper: Taper | None = None,
          n_u: int = 401, nodes_per_panel: int = 48) -> dict[str, float]:
    """Size measures of ``phi`` used by the bias and exponential bounds.

    Separable single-term functionals use exact products of the factor
    norms; sums of terms are evaluated on dense grids (approximate).
    ``rho_inf`` and ``v_sigma`` are ``inf`` unless every frequency part is a
    finite trigonometric series.
    """
    lam, wl = lambda_quadrature(phi.freq_breakpoints, nodes_per_panel)
    u, wu = u_quadrature(phi.time_breakpoints, n_u)
    out = {"rho_2": math.sqrt(float(np.sum(wu * ((phi(u[:, None], lam[None, :]) ** 2) @ wl))))}
    if n is not None:
        t = np.arange(1, n + 1) / n
        sq = (phi(t[:, None], lam[None, :]) ** 2) @ wl
        out["rho_2n"] = math.sqrt(float(np.mean(sq)))
        h, _ = _taper_limit(taper)
        out["rho_2n_taper"] = math.sqrt(float(np.mean(h(t) ** 4 * sq)))

    lag = phi.max_lag
    if len(phi.terms) == 1:
        term = phi.terms[0]
        s = abs(term.scale)
        vw, sw = term.weight.total_variation(), term.weight.sup_abs()
        vp, sp = term.freq.total_variation(), term.freq.sup_abs()
        out.update(inf_V=s * sw * vp, V_inf=s * vw * sp, V_V=s * vw * vp, inf_inf=s * sw * sp)
        if lag is not None:
            coef = np.abs(term.freq.fourier(np.arange(-lag, lag + 1)))
            out["rho_inf"] = float(s * sw * np.sum(coef))
            out["v_sigma"] = float(s * vw * np.sum(coef))
    else:
        ud, ld = _dense_u(phi), _dense_lam(phi)
        grid = phi(ud[:, None], ld[None, :])
        out["inf_V"] = float(np.max(np.sum(np.abs(np.diff(grid, axis=1)), axis=1)))
        out["V_inf"] = float(np.max(np.sum(np.abs(np.diff(grid, axis=0)), axis=0)))
        out["V_V"] = float(np.sum(np.abs(np.diff(np.diff(grid, axis=0), axis=1))))
        out["inf_inf"] = float(np.max(np.abs(grid)))
        if lag is not None:
            coef = phi.fourier(ud, np.arange(-lag, lag + 1))
            out["rho_inf"] = float(np.sum(np.max(np.abs(coef), axis=0)))
            out["v_sigma"] = float(np.sum(np.sum(np.abs(np.diff(coef, axis=0)), axis=0)))
    if lag is None:
        out["rho_inf"] = math.inf
        out["v_sigma"] = math.inf
    return out


# -- config parsing ---------------------------------------------------------


def _freq_from_spec(spec):
    kind = spec.get("kind")
    if kind == "constant":
        return TrigSeries((1.0,)), float(spec.get("value", 1.0))
    if kind == "cosine":
        return TrigSeries.cosine(int(spec.get("lag", 1))), float(spec.get("amplitude", 1.0))
    if kind == "sine":
        return TrigSeries.sine(int(spec.get("lag", 1))), float(spec.get("amplitude", 1.0))
    if kind == "trig":
        return TrigSeries(tuple(spec.get("cos", (0.0,))), tuple(spec.get("sin", ()))), 1.0
    if kind == "indicator":
        return Indicator(float(spec.get("lo", 0.0)), float(spec.get("hi", spec.get("mu", np.pi)))), 1.0
    if kind == "kernel":
        return FrequencyKernel(float(spec.get("center", 0.0)), float(spec["bandwidth"]),
                               SmoothingKernel(spec.get("kernel", "epanechnikov"))), 1.0
    raise ValueError(f"unknown frequency function kind {kind!r}")


def _time_from_spec(spec):
    if spec is None:
        return ONE
    if isinstance(spec, dict) and spec.get("kind") == "kernel":
        return TimeKernel(float(spec["center"]), float(spec["bandwidth"]),
                          SmoothingKernel(spec.get("kernel", "epanechnikov")))
    return CoefficientCurve.from_spec(spec)


def functional_from_spec(spec) -> SpectralFunctional:
    """Build a functional from a config mapping.

    A term is ``{"kind": ..., "time": <curve or time kernel>, "scale": c}``
    with frequency kinds ``constant``, ``cosine``, ``sine``, ``trig``,
    ``indicator`` and ``kernel`` (the frequency part may also sit under a
    ``"freq"`` key, as written by ``to_dict``); ``{"terms": [...]}`` sums
    several terms.
    The shorthand strings ``"constant"`` and ``"cos"`` are accepted.
    """
    if isinstance(spec, SpectralFunctional):
        return spec
    if isinstance(spec, str):
        spec = {"constant": {"kind": "constant"}, "cos": {"kind": "cosine", "lag": 1}}.get(spec)
        if spec is None:
            raise ValueError("unknown functional shorthand")
    if not isinstance(spec, dict):
        raise ValueError(f"cannot build a functional from {spec!r}")
    if "terms" in spec:
        if not spec["terms"]:
            raise ValueError("functional needs at least one term")
        out = functional_from_spec(spec["terms"][0])
        for term in spec["terms"][1:]:
            out = out + functional_from_spec(term)
        return out
    freq, scale = _freq_from_spec(spec.get("freq", spec))
    return SpectralFunctional.separable(_time_from_spec(spec.get("time")), freq,
                                        scale * float(spec.get("scale", 1.0)))


def taper_from_spec(spec) -> Taper | None:
    if spec is None or isinstance(spec, Taper):
        return spec
    if isinstance(spec, str):
        return Taper(spec)
    spec = dict(spec)
    if "samples" in spec:
        spec["samples"] = tuple(spec["samples"])
    return Taper(**spec)
