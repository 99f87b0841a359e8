"""First-order lag ``1/(p+1)`` and the derivative-free ``p/(p+1)`` chain.

All filters are integrated with classical RK4.  An input may be given either
as a scalar, held constant over the step, or as a ``(start, mid, end)`` triple
of samples at ``t``, ``t + dt/2`` and ``t + dt``; the latter keeps the scheme
fourth order for smooth inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

__all__ = ["lag_step", "QChain", "q_chain_step", "stage_samples", "filter_signal"]


def stage_samples(u):
    """Normalise an input to its three RK4 stage values ``(start, mid, end)``."""
    if np.ndim(u) == 0:
        v = float(u)
        out = (v, v, v)
    else:
        if len(u) != 3:
            raise ValueError("stage input must be a scalar or a (start, mid, end) triple")
        out = tuple(float(x) for x in u)
    if not all(math.isfinite(x) for x in out):
        raise ValueError("filter input must be finite")
    return out


def lag_step(x, u, dt):
    """Advance ``x' = -x + u`` by one RK4 step and return the new state."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u0, um, u1 = stage_samples(u)
    k1 = u0 - x
    k2 = um - (x + 0.5 * dt * k1)
    k3 = um - (x + 0.5 * dt * k2)
    k4 = u1 - (x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class QChain:
    """States of ``q1 = p/(p+1) y``, ``q2 = p/(p+1) q1``.

    Realised as ``q1 = y - x1`` with ``x1' = -x1 + y`` and ``q2 = q1 - x2`` with
    ``x2' = -x2 + q1``, so ``y`` is never differentiated.
    """

    x1: float = 0.0
    x2: float = 0.0

    def outputs(self, y):
        q1 = y - self.x1
        return q1, q1 - self.x2


def _q_rhs(x1, x2, y):
    q1 = y - x1
    return q1, q1 - x2


def q_chain_step(chain: QChain, y, dt):
    """Advance the chain one RK4 step in place and return ``(q1, q2)`` at ``t + dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    y0, ym, y1 = stage_samples(y)
    x1, x2 = chain.x1, chain.x2
    a1, b1 = _q_rhs(x1, x2, y0)
    a2, b2 = _q_rhs(x1 + 0.5 * dt * a1, x2 + 0.5 * dt * b1, ym)
    a3, b3 = _q_rhs(x1 + 0.5 * dt * a2, x2 + 0.5 * dt * b2, ym)
    a4, b4 = _q_rhs(x1 + dt * a3, x2 + dt * b3, y1)
    chain.x1 = x1 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    chain.x2 = x2 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return chain.outputs(y1)


def filter_signal(u, dt, u_mid=None, x0=0.0):
    """Apply ``1/(p+1)`` to a uniformly sampled signal with the same RK4 scheme.

    ``u_mid`` holds the samples at the step midpoints (length ``len(u) - 1``);
    without it the input is held constant over each step.  The RK4 update is
    linear, ``x+ = r x + c0 u0 + cm um + c1 u1``, so the whole signal is run
    through :func:`scipy.signal.lfilter`.
    """
    u = np.asarray(u, dtype=float)
    if u_mid is None:
        drive = (lag_step(0.0, 1.0, dt)) * u[:-1]
    else:
        c0 = lag_step(0.0, (1.0, 0.0, 0.0), dt)
        cm = lag_step(0.0, (0.0, 1.0, 0.0), dt)
        c1 = lag_step(0.0, (0.0, 0.0, 1.0), dt)
        drive = c0 * u[:-1] + cm * np.asarray(u_mid, dtype=float) + c1 * u[1:]
    r = lag_step(1.0, 0.0, dt)
    out = np.empty_like(u)
    out[0] = x0
    out[1:], _ = lfilter([1.0], [1.0, -r], drive, zi=[r * x0])
    return out
