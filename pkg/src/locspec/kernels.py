"""Compactly supported smoothing kernels on [-1/2, 1/2]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# kind -> (int x^2 K, int K^2, total variation, sup K)
_MOMENTS = {
    "epanechnikov": (1.0 / 20.0, 1.2, 3.0, 1.5),
    "triangular": (1.0 / 24.0, 4.0 / 3.0, 4.0, 2.0),
    "uniform": (1.0 / 12.0, 1.0, 2.0, 1.0),
}


@dataclass(frozen=True)
class SmoothingKernel:
    """Symmetric kernel with ``int K = 1`` and ``int x K = 0``.

    ``epanechnikov`` is ``1.5 (1 - 4x^2)``, ``triangular`` is
    ``2 (1 - 2|x|)`` and ``uniform`` is the indicator of the closed support.
    """

    kind: str = "epanechnikov"

    def __post_init__(self):
        if self.kind not in _MOMENTS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {sorted(_MOMENTS)}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= 0.5
        if self.kind == "epanechnikov":
            val = 1.5 * (1.0 - 4.0 * x * x)
        elif self.kind == "triangular":
            val = 2.0 * (1.0 - 2.0 * np.abs(x))
        else:
            val = np.ones_like(x)
        return np.where(inside, val, 0.0)

    @property
    def second_moment(self) -> float:
        return _MOMENTS[self.kind][0]

    @property
    def l2_norm_sq(self) -> float:
        return _MOMENTS[self.kind][1]

    def total_variation(self) -> float:
        return _MOMENTS[self.kind][2]

    def sup_abs(self) -> float:
        return _MOMENTS[self.kind][3]

    def fourier(self, omega):
        """``int K(x) e^{i omega x} dx`` (real, since K is even)."""
        s = np.asarray(omega, dtype=float) / 2.0
        a = np.abs(s)
        small = a < 1e-3
        safe = np.where(small, 1.0, s)
        if self.kind == "uniform":
            return np.where(small, 1.0 - s**2 / 6.0 + s**4 / 120.0, np.sin(safe) / safe)
        if self.kind == "triangular":
            half = np.where(small, 1.0, safe / 2.0)
            return np.where(small, 1.0 - s**2 / 12.0 + s**4 / 360.0, (np.sin(half) / half) ** 2)
        val = 3.0 * (np.sin(safe) - safe * np.cos(safe)) / safe**3
        return np.where(small, 1.0 - s**2 / 10.0 + s**4 / 280.0, val)


@dataclass(frozen=True)
class TimeKernel:
    """Localizing weight ``u -> K((u - center) / bandwidth) / bandwidth`` on [0, 1]."""

    center: float
    bandwidth: float
    kernel: SmoothingKernel = SmoothingKernel()

    def __post_init__(self):
        if not 0.0 < self.bandwidth:
            raise ValueError("bandwidth must be positive")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        val = self.kernel((u - self.center) / self.bandwidth) / self.bandwidth
        return np.where((u >= 0.0) & (u <= 1.0), val, 0.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        lo = self.center - self.bandwidth / 2.0
        hi = self.center + self.bandwidth / 2.0
        pts = [lo, hi] + ([self.center] if self.kernel.kind == "triangular" else [])
        return tuple(sorted(p for p in pts if 0.0 < p < 1.0))

    def _inside(self) -> bool:
        return self.center - self.bandwidth / 2.0 >= 0.0 and self.center + self.bandwidth / 2.0 <= 1.0

    def total_variation(self) -> float:
        if self._inside():
            return self.kernel.total_variation() / self.bandwidth
        u = np.unique(np.concatenate((np.linspace(0.0, 1.0, 20001), self.breakpoints)))
        return float(np.sum(np.abs(np.diff(self(u)))))

    def sup_abs(self) -> float:
        if self._inside() or 0.0 <= self.center <= 1.0:
            return self.kernel.sup_abs() / self.bandwidth
        edge = 0.0 if self.center < 0.0 else 1.0
        return float(self(edge))

    def to_dict(self) -> dict:
        return {"kind": "kernel", "center": self.center, "bandwidth": self.bandwidth,
                "kernel": self.kernel.kind}
