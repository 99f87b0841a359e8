"""Linear exosystems for the amplitude and frequency, and the measured signal.

The frequency and amplitude are outputs ``h @ x(t)`` of autonomous linear
systems ``x' = Gamma @ x`` with known ``(h, Gamma)`` and unknown ``x(0)``.
Everything here is a pure function of time, so it doubles as ground truth for
the estimation pipeline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

__all__ = [
    "GeneratorSpec",
    "HarmonicFrequencySpec",
    "SimTruth",
    "IntegrationError",
    "fundamental_matrix_step",
    "closed_form_phi_harmonic",
    "truth_at",
]


class IntegrationError(FloatingPointError):
    """Raised when a fixed-step integration produces non-finite values."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Autonomous linear generator ``x' = Gamma x``, output ``h^T x``.

    Parameters
    ----------
    h : array_like, shape (n,)
        Output vector.
    Gamma : array_like, shape (n, n)
        System matrix (1/s).
    x0 : array_like, shape (n,)
        Initial condition.
    """

    h: np.ndarray
    Gamma: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        G = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        n = h.shape[0]
        if h.ndim != 1 or n < 1:
            raise ValueError("h must be a non-empty vector")
        if G.shape != (n, n) or x0.shape != (n,):
            raise ValueError(f"shape mismatch: h {h.shape}, Gamma {G.shape}, x0 {x0.shape}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(G)) and np.all(np.isfinite(x0))):
            raise ValueError("generator entries must be finite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "x0", x0)

    @property
    def order(self) -> int:
        return self.h.shape[0]

    def phi(self, t):
        """Fundamental matrix ``expm(Gamma t)``; stacked along axis 0 for array ``t``."""
        t = np.asarray(t, dtype=float)
        return expm(t[..., None, None] * self.Gamma)

    def derivatives(self, t, order: int = 3, phi=None):
        """Output and its first ``order`` derivatives, shape ``(order + 1,) + t.shape``."""
        if phi is None:
            phi = self.phi(t)
        state = phi @ self.x0
        out = []
        row = self.h
        for _ in range(order + 1):
            out.append(state @ row)
            row = row @ self.Gamma
        return np.array(out)


@dataclass(frozen=True)
class HarmonicFrequencySpec:
    """Frequency generator ``Gamma = [[0, 1], [-gamma, 0]]``, ``h = [1, 0]``.

    ``(theta1, theta2)`` is the unknown initial state, so ``omega(0) = theta1``.
    """

    gamma: float
    theta1: float
    theta2: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.theta1 == 0:
            raise ValueError(
                "theta1 = omega(0) must be nonzero: the monomial regression divides by theta1"
            )

    @property
    def Gamma(self) -> np.ndarray:
        return np.array([[0.0, 1.0], [-self.gamma, 0.0]])

    @property
    def h(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    @property
    def x0(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2], dtype=float)

    @property
    def order(self) -> int:
        return 2

    def phi(self, t):
        return closed_form_phi_harmonic(self.gamma, t)

    def derivatives(self, t, order: int = 3, phi=None):
        return GeneratorSpec.derivatives(self, t, order=order, phi=phi)

    def as_generator(self) -> GeneratorSpec:
        return GeneratorSpec(self.h, self.Gamma, self.x0)


@dataclass
class SimTruth:
    """Ground-truth signals; every field is a scalar or an array shaped like ``t``."""

    t: np.ndarray
    omega: np.ndarray
    omega_d1: np.ndarray
    omega_d2: np.ndarray
    omega_d3: np.ndarray
    alpha: np.ndarray
    alpha_d1: np.ndarray
    alpha_d2: np.ndarray
    y: np.ndarray
    y_d1: np.ndarray
    y_d2: np.ndarray
    phi_mat: np.ndarray = field(repr=False)


def fundamental_matrix_step(Phi, Gamma, dt):
    """One classical RK4 step of ``Phi' = Gamma Phi``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    Phi = np.asarray(Phi, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    k1 = Gamma @ Phi
    k2 = Gamma @ (Phi + 0.5 * dt * k1)
    k3 = Gamma @ (Phi + 0.5 * dt * k2)
    k4 = Gamma @ (Phi + dt * k3)
    out = Phi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("fundamental matrix step produced non-finite values")
    return out


def closed_form_phi_harmonic(gamma, t):
    """``expm([[0, 1], [-gamma, 0]] t)`` in closed form.

    Returns shape ``(2, 2)`` for scalar ``t`` and ``t.shape + (2, 2)`` otherwise.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    w = np.sqrt(gamma)
    t = np.asarray(t, dtype=float)
    c = np.cos(w * t)
    s = np.sin(w * t)
    return np.stack([np.stack([c, s / w], -1), np.stack([-w * s, c], -1)], -2)


def _alpha_derivatives(alpha_spec, t):
    t = np.asarray(t, dtype=float)
    if isinstance(alpha_spec, (GeneratorSpec, HarmonicFrequencySpec)):
        return alpha_spec.derivatives(t, order=2)
    a = float(alpha_spec)
    zero = np.zeros_like(t)
    return np.array([zero + a, zero, zero])


def truth_at(spec_omega, alpha_spec, phase, t) -> SimTruth:
    """Evaluate frequency, amplitude, measurement and their derivatives at ``t``.

    Parameters
    ----------
    spec_omega : HarmonicFrequencySpec or GeneratorSpec
        Frequency generator.
    alpha_spec : float or GeneratorSpec
        Constant amplitude or amplitude generator.
    phase : float
        Constant phase offset (rad).
    t : float or array_like
        Time(s), ``t >= 0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    phi = spec_omega.phi(t)
    w0, w1, w2, w3 = spec_omega.derivatives(t, order=3, phi=phi)
    a0, a1, a2 = _alpha_derivatives(alpha_spec, t)
    arg = w0 + phase
    s, c = np.sin(arg), np.cos(arg)
    y = a0 * s
    y1 = a1 * s + a0 * w1 * c
    y2 = a2 * s + 2.0 * a1 * w1 * c - a0 * w1**2 * s + a0 * w2 * c
    return SimTruth(t, w0, w1, w2, w3, a0, a1, a2, y, y1, y2, phi)
