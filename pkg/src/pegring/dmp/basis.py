"""Compact-support mollifier basis for forcing-term approximation."""

from __future__ import annotations

import numpy as np


class MollifierBasis:
    """Bump functions psi_i = exp(-1 / (1 - r^2)) for r = |p - c_i| / h < 1.

    The bumps live on the time-like coordinate p = -ln(s) / phase_span, so
    equispaced centers cover the gesture uniformly in time even though the
    phase s decays exponentially (`phase_span` is alpha times the nominal
    gesture duration).  The half-width h is `width_factor` times the center
    spacing so neighbouring bumps overlap.
    """

    def __init__(self, n: int = 15, width_factor: float = 1.2,
                 phase_span: float = 8.0):
        if n < 2:
            raise ValueError("need at least 2 basis functions")
        if phase_span <= 0:
            raise ValueError("phase_span must be positive")
        self.n = int(n)
        self.width_factor = float(width_factor)
        self.phase_span = float(phase_span)
        self.centers = np.linspace(0.0, 1.0, self.n)
        self.h = self.width_factor / (self.n - 1)

    def _coord(self, s: np.ndarray) -> np.ndarray:
        s_safe = np.maximum(s, 1e-300)
        return -np.log(s_safe) / self.phase_span

    def evaluate(self, s) -> np.ndarray:
        """Basis activations, shape (len(s), n) (or (n,) for scalar s)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        p = self._coord(s_arr)
        r = np.abs(p[:, None] - self.centers[None, :]) / self.h
        out = np.zeros_like(r)
        inside = r < 1.0
        ri = r[inside]
        out[inside] = np.exp(-1.0 / (1.0 - ri * ri))
        if np.isscalar(s) or np.asarray(s).ndim == 0:
            return out[0]
        return out

    def design(self, s) -> np.ndarray:
        """Rows phi(s) = s * psi(s) / sum(psi(s)) of the forcing expansion."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        psi = self.evaluate(s_arr)
        norm = psi.sum(axis=1, keepdims=True)
        norm[norm <= 0.0] = 1.0
        phi = psi / norm * s_arr[:, None]
        if np.isscalar(s) or np.asarray(s).ndim == 0:
            return phi[0]
        return phi

    def forcing(self, s: float, weights: np.ndarray) -> np.ndarray:
        """f(s) = (sum_i w_i psi_i / sum_i psi_i) * s per dimension.

        `weights` has shape (d, n); returns shape (d,).
        """
        return weights @ self.design(float(s))

    def to_dict(self) -> dict:
        return {"n": self.n, "width_factor": self.width_factor,
                "phase_span": self.phase_span}

    @classmethod
    def from_dict(cls, d: dict) -> "MollifierBasis":
        return cls(n=d["n"], width_factor=d["width_factor"],
                   phase_span=d.get("phase_span", 8.0))
