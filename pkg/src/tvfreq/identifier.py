"""Gradient identifier over the mixed scalar regressions and frequency recovery."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "FrequencyEstimate",
    "ValidityTracker",
    "NotConvergedError",
    "gradient_step",
    "recover_theta",
    "reconstruct_omega",
    "GUARD_RATIO",
    "MAX_SUBSTEPS",
]

# beta * Delta^2 * dt above this splits the step
GUARD_RATIO = 0.1
# beyond this many sub-steps the frozen-coefficient step is taken in closed form
MAX_SUBSTEPS = 1000


class NotConvergedError(ValueError):
    """The squared-frequency monomial is clearly negative; keep the previous estimate."""


@njit(cache=True)
def gradient_core(theta, cY, Delta, beta, dt, max_substeps):
    """Advance ``theta' = -beta Delta (Delta theta - cY)`` in place, inputs held.

    Returns the number of RK4 sub-steps taken, or 0 if the closed-form
    solution of the frozen linear ODE was used.
    """
    a = beta * Delta * Delta
    ratio = a * dt
    if ratio == 0.0:
        return 1
    nsub = 1
    if ratio > GUARD_RATIO:
        nsub = int(math.ceil(ratio / GUARD_RATIO))
    if nsub > max_substeps:
        decay = math.exp(-ratio)
        for i in range(theta.shape[0]):
            target = cY[i] / Delta
            theta[i] = target + decay * (theta[i] - target)
        return 0
    h = dt / nsub
    for i in range(theta.shape[0]):
        b = beta * Delta * cY[i]
        x = theta[i]
        for _ in range(nsub):
            k1 = b - a * x
            k2 = b - a * (x + 0.5 * h * k1)
            k3 = b - a * (x + 0.5 * h * k2)
            k4 = b - a * (x + h * k3)
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        theta[i] = x
    return nsub


@njit(cache=True)
def recover_core(theta, epsilon):
    """Return ``(ok, theta1, theta2)`` under the ``theta1 >= 0`` convention."""
    if theta[1] < -epsilon:
        return False, 0.0, 0.0
    t1 = math.sqrt(max(theta[1], 0.0))
    return True, t1, theta[0] * t1


@njit(cache=True)
def validity_update(state, Delta, dt, ratio, hold):
    """``state = [running max |Delta|, time held, valid]``; returns the valid flag."""
    d = abs(Delta)
    if d > state[0]:
        state[0] = d
    if d > ratio * state[0]:
        state[1] += dt
    else:
        state[1] = 0.0
    if state[1] >= hold - 1e-9 * dt:
        state[2] = 1.0
    return state[2] > 0.0


def gradient_step(theta_hat, mixed, beta, dt, max_substeps=MAX_SUBSTEPS):
    """One step of the gradient law with the stability guard.

    Parameters
    ----------
    theta_hat : array_like, shape (5,)
        Current monomial estimate.
    mixed : MixedRegression
        ``(curly_Y, Delta)`` held over the step.
    beta : float
        Adaptation gain.
    dt : float
        Step (s).

    Returns
    -------
    theta : ndarray
        Updated estimate.
    n_substeps : int
        RK4 sub-steps used; 1 for a plain step, 0 when the step was so stiff
        that the closed-form solution replaced sub-stepping.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    theta = np.array(theta_hat, dtype=float)
    cY = np.ascontiguousarray(mixed.curly_Y, dtype=float)
    n = gradient_core(theta, cY, float(mixed.Delta), float(beta), float(dt), int(max_substeps))
    return theta, n


def recover_theta(theta_hat, epsilon=1e-9):
    """Invert the monomial map: ``theta1 = sqrt(T2)``, ``theta2 = T1 * theta1``.

    The regression cannot tell ``(theta1, theta2)`` from ``(-theta1, -theta2)``;
    the positive root is taken.

    Raises
    ------
    NotConvergedError
        If ``T2 < -epsilon``.
    """
    ok, t1, t2 = recover_core(np.asarray(theta_hat, dtype=float), float(epsilon))
    if not ok:
        raise NotConvergedError(f"squared-frequency estimate {theta_hat[1]:.3g} is negative")
    return t1, t2


def reconstruct_omega(Phi, theta1_hat, theta2_hat):
    """``Phi11 theta1 + Phi12 theta2``; ``Phi`` may be stacked along leading axes."""
    Phi = np.asarray(Phi, dtype=float)
    return Phi[..., 0, 0] * theta1_hat + Phi[..., 0, 1] * theta2_hat


class ValidityTracker:
    """Flags estimates as meaningful once ``|Delta|`` stays above ``ratio`` times
    its running maximum for ``hold`` seconds.  The flag latches."""

    def __init__(self, ratio=1e-3, hold=0.1):
        self.ratio = ratio
        self.hold = hold
        self._state = np.zeros(3)

    @property
    def valid(self):
        return bool(self._state[2])

    def update(self, Delta, dt):
        return validity_update(self._state, float(Delta), float(dt), self.ratio, self.hold)


@dataclass
class FrequencyEstimate:
    theta1_hat: float
    theta2_hat: float
    omega_hat: float
    valid: bool
