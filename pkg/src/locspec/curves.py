"""Bounded-variation coefficient curves on the unit interval.

A curve is one of three kinds whose total variation can be computed
exactly: piecewise constant (right-continuous steps), piecewise linear
(interpolation between knots) and polynomial in ``u``.  Outside ``[0, 1]``
a curve is frozen at its boundary value, so ``curve(u) == curve(0)`` for
``u < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

KINDS = ("piecewise-constant", "piecewise-linear", "polynomial")


class CurveError(ValueError):
    """Raised for malformed curve specifications."""


@dataclass(frozen=True)
class CoefficientCurve:
    """A function ``g: [0, 1] -> R`` of bounded variation.

    Parameters
    ----------
    kind : str
        ``"piecewise-constant"``, ``"piecewise-linear"`` or ``"polynomial"``.
    breakpoints : tuple of float
        Jump locations in ``(0, 1]`` for piecewise-constant curves (the
        curve takes ``values[i]`` on ``[b_{i-1}, b_i)``); knots in ``[0, 1]``
        for piecewise-linear curves; empty for polynomials.
    values : tuple of float
        Step heights, knot values, or power-basis coefficients
        ``c_0 + c_1 u + ... + c_d u^d``.
    """

    kind: str
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        bp, vals = self.breakpoints, self.values
        if self.kind not in KINDS:
            raise CurveError(f"unknown curve kind {self.kind!r}; expected one of {KINDS}")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise CurveError("breakpoints must be strictly increasing")
        if bp and (bp[0] < 0.0 or bp[-1] > 1.0):
            raise CurveError("breakpoints must lie in [0, 1]")
        if self.kind == "piecewise-constant":
            if bp and bp[0] <= 0.0:
                raise CurveError("step locations must lie in (0, 1]")
            if len(vals) != len(bp) + 1:
                raise CurveError("piecewise-constant curve needs len(values) == len(breakpoints) + 1")
        elif self.kind == "piecewise-linear":
            if len(bp) < 2 or len(vals) != len(bp):
                raise CurveError("piecewise-linear curve needs >= 2 knots and one value per knot")
        else:
            if bp:
                raise CurveError("polynomial curves take no breakpoints")
            if not vals:
                raise CurveError("polynomial curve needs at least one coefficient")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "CoefficientCurve":
        return cls("polynomial", (), (value,))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "CoefficientCurve":
        return cls("polynomial", (), tuple(coefficients))

    @classmethod
    def steps(cls, jumps: Sequence[float], values: Sequence[float]) -> "CoefficientCurve":
        return cls("piecewise-constant", tuple(jumps), tuple(values))

    @classmethod
    def linear(cls, knots: Sequence[float], values: Sequence[float]) -> "CoefficientCurve":
        return cls("piecewise-linear", tuple(knots), tuple(values))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], degree: int = 14) -> "CoefficientCurve":
        """Polynomial interpolant of a smooth function at Chebyshev points on [0, 1]."""
        cheb = Chebyshev.interpolate(fn, degree, domain=[0.0, 1.0])
        poly = cheb.convert(kind=Polynomial, domain=[-1.0, 1.0], window=[-1.0, 1.0])
        return cls.polynomial(poly.coef)

    # -- evaluation -------------------------------------------------------

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(u, self.values)
        if self.kind == "piecewise-linear":
            return np.interp(u, self.breakpoints, self.values)
        idx = np.searchsorted(np.asarray(self.breakpoints), u, side="right")
        return np.asarray(self.values)[idx]

    def _critical_points(self) -> np.ndarray:
        if len(self.values) < 3:
            return np.empty(0)
        deriv = Polynomial(self.values).deriv()
        roots = deriv.roots()
        real = roots[np.abs(roots.imag) < 1e-12].real
        return np.sort(real[(real > 0.0) & (real < 1.0)])

    def total_variation(self) -> float:
        """Exact total variation over [0, 1]."""
        if self.kind == "polynomial":
            pts = np.concatenate(([0.0], self._critical_points(), [1.0]))
            return float(np.sum(np.abs(np.diff(self(pts)))))
        return float(np.sum(np.abs(np.diff(self.values))))

    def sup_abs(self) -> float:
        if self.kind == "polynomial":
            pts = np.concatenate(([0.0], self._critical_points(), [1.0]))
            return float(np.max(np.abs(self(pts))))
        return float(np.max(np.abs(self.values)))

    def inf(self) -> float:
        if self.kind == "polynomial":
            pts = np.concatenate(([0.0], self._critical_points(), [1.0]))
            return float(np.min(self(pts)))
        return float(np.min(self.values))

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1 if self.kind != "polynomial" else all(
            v == 0.0 for v in self.values[1:]
        )

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "values": list(self.values)}
        if self.kind != "polynomial":
            out["breakpoints"] = list(self.breakpoints)
        return out

    @classmethod
    def from_spec(cls, spec) -> "CoefficientCurve":
        """Build a curve from a number or a ``{"kind", "breakpoints", "values"}`` mapping."""
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return cls.constant(float(spec))
        if isinstance(spec, CoefficientCurve):
            return spec
        if not isinstance(spec, dict) or "kind" not in spec:
            raise CurveError(f"cannot build a curve from {spec!r}")
        values = spec.get("values", spec.get("coefficients"))
        if values is None:
            raise CurveError("curve spec needs 'values' (or 'coefficients' for polynomials)")
        return cls(spec["kind"], tuple(spec.get("breakpoints", ())), tuple(values))


def curve_breakpoints(curves) -> np.ndarray:
    """Sorted union of interior breakpoints of several curves."""
    pts = {b for c in curves for b in getattr(c, "breakpoints", ()) if 0.0 < b < 1.0}
    return np.array(sorted(pts))
