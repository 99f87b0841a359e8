"""Measurable linear regression ``z = m^T Theta`` for the harmonic frequency.

With constant amplitude and ``Gamma = [[0, 1], [-gamma, 0]]`` the frequency is
``omega = Phi11 theta1 + Phi12 theta2``.  Filtering the second-order identity
twice through ``1/(p+1)`` and dividing by ``theta1`` gives a regression that is
linear in the monomial vector

    Theta = (theta2/theta1, theta1**2, theta1*theta2, theta2**2, theta2**3/theta1)

whose regressor uses only ``y``, the ``q``-chain outputs and ``Phi``.

The module also carries the residual oracles for the unfiltered second-order
identity and for its twice-filtered form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from .filtering import stage_samples

__all__ = [
    "N_CHANNELS",
    "RegressionSample",
    "RegressorChannels",
    "regressor_step",
    "monomials_of",
    "monomial_consistency",
    "second_order_identity_residual",
    "filtered_identity_residual",
    "constant_amplitude_identity_residual",
    "IdentityResidual",
]

# Channel layout: two 1/(p+1) channels, then six 1/(p+1)^2 cascades stored as
# (inner, outer) pairs.  The outer state of each pair is the filtered output.
N_CHANNELS = 14
_N_INPUTS = 8


@njit(cache=True)
def regressor_inputs(P11, P12, P21, P22, q1, q2, y, out):
    """Pointwise products fed into the regressor channels."""
    s = 2.0 * q2 + q1
    u = q2 + q1
    out[0] = P11 * s
    out[1] = P12 * s
    out[2] = P21 * u
    out[3] = P22 * u
    out[4] = P21 * P21 * P21 * y
    out[5] = 3.0 * P21 * P21 * P22 * y
    out[6] = 3.0 * P21 * P22 * P22 * y
    out[7] = P22 * P22 * P22 * y


@njit(cache=True)
def channel_rhs(ch, inputs, out):
    out[0] = inputs[0] - ch[0]
    out[1] = inputs[1] - ch[1]
    for j in range(6):
        a = 2 + 2 * j
        out[a] = inputs[2 + j] - ch[a]
        out[a + 1] = ch[a] - ch[a + 1]


@njit(cache=True)
def regressor_output(P11, P12, P21, P22, q1, q2, ch, gamma, m):
    """Fill ``m`` from the channel states and return ``z``."""
    m[0] = -P22 * q2 - gamma * ch[1] + gamma * ch[5]
    m[1] = -ch[7]
    m[2] = -ch[9]
    m[3] = -ch[11]
    m[4] = -ch[13]
    return P21 * q2 + gamma * ch[0] - gamma * ch[3]


@dataclass
class RegressionSample:
    t: float
    z: float
    m: np.ndarray


@dataclass
class RegressorChannels:
    """Lag states of every filtered product in the regressor (all start at zero)."""

    states: np.ndarray = field(default_factory=lambda: np.zeros(N_CHANNELS))


def _phi_stages(Phi):
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape == (2, 2):
        return (Phi, Phi, Phi)
    if Phi.shape == (3, 2, 2):
        return tuple(Phi)
    raise ValueError("Phi must be 2x2 or a (start, mid, end) stack of 2x2 matrices")


def regressor_step(channels, Phi, q1, q2, y, gamma, dt, t=float("nan")):
    """Advance the regressor channels one RK4 step; return the sample at ``t + dt``.

    ``Phi``, ``q1``, ``q2`` and ``y`` are either held over the step or given as
    ``(start, mid, end)`` stage samples.  ``channels`` is updated in place.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    P = _phi_stages(Phi)
    Q1, Q2, Y = stage_samples(q1), stage_samples(q2), stage_samples(y)
    stage_index = (0, 1, 1, 2)
    x = channels.states
    inp = np.empty(_N_INPUTS)
    ks = []
    xs = x
    for i, c in zip(stage_index, (0.0, 0.5, 0.5, 1.0)):
        if ks:
            xs = x + c * dt * ks[-1]
        p = P[i]
        regressor_inputs(p[0, 0], p[0, 1], p[1, 0], p[1, 1], Q1[i], Q2[i], Y[i], inp)
        k = np.empty(N_CHANNELS)
        channel_rhs(xs, inp, k)
        ks.append(k)
    channels.states = x + dt / 6.0 * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3])
    p = P[2]
    m = np.empty(5)
    z = regressor_output(p[0, 0], p[0, 1], p[1, 0], p[1, 1], Q1[2], Q2[2], channels.states, gamma, m)
    return RegressionSample(t + dt, z, m)


def monomials_of(theta1, theta2):
    """Monomial parameter vector of the generator initial state ``(theta1, theta2)``."""
    if theta1 == 0:
        raise ValueError("theta1 must be nonzero (the monomial stacking divides by theta1)")
    r = theta2 / theta1
    return np.array([r, theta1**2, theta1 * theta2, theta2**2, theta2**3 / theta1])


def monomial_consistency(Theta):
    """Residuals of ``T3^2 = T2 T4``, ``T1 T3 = T4``, ``T1 T4 = T5`` (zero on the image)."""
    T1, T2, T3, T4, T5 = np.asarray(Theta, dtype=float)
    return np.array([T3**2 - T2 * T4, T1 * T3 - T4, T1 * T4 - T5])


def second_order_identity_residual(truth):
    """``alpha^2 w' y'' - (c y + (alpha^2 w')' y')`` from analytic derivatives.

    ``c = alpha alpha'' w' - 2 alpha'^2 w' - alpha^2 w'^3 - alpha alpha' w''``.
    The identity is polynomial, so it holds through zeros of ``alpha`` or ``w'``.
    """
    a, a1, a2 = truth.alpha, truth.alpha_d1, truth.alpha_d2
    w1, w2 = truth.omega_d1, truth.omega_d2
    lhs = a * a * w1 * truth.y_d2
    c = a * a2 * w1 - 2.0 * a1 * a1 * w1 - a * a * w1**3 - a * a1 * w2
    rhs = c * truth.y + (2.0 * a * a1 * w1 + a * a * w2) * truth.y_d1
    return lhs - rhs


class IdentityResidual(NamedTuple):
    residual: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray


@njit(cache=True)
def _bank_rhs(x, y, a, ad, add, c, out):
    # x: [x1, x2, F[ad q2], F2[add q2] (2), F2[c y] (2), F[ad q1], F2[add q1] (2)]
    q1 = y - x[0]
    q2 = q1 - x[1]
    out[0] = q1
    out[1] = q2
    out[2] = ad * q2 - x[2]
    out[3] = add * q2 - x[3]
    out[4] = x[3] - x[4]
    out[5] = c * y - x[5]
    out[6] = x[5] - x[6]
    out[7] = ad * q1 - x[7]
    out[8] = add * q1 - x[8]
    out[9] = x[8] - x[9]


@njit(cache=True)
def _const_rhs(x, y, w1, w2, w3, out):
    # x: [x1, x2, F[w2 (2 q2 + q1)], F2[w3 (q2 + q1) + w1^3 y] (2)]
    q1 = y - x[0]
    q2 = q1 - x[1]
    out[0] = q1
    out[1] = q2
    out[2] = w2 * (2.0 * q2 + q1) - x[2]
    out[3] = w3 * (q2 + q1) + w1 * w1 * w1 * y - x[3]
    out[4] = x[3] - x[4]


@njit(cache=True)
def _run_bank(sig, mid, dt, const):
    # sig/mid columns: y followed by the coefficient signals
    n = sig.shape[0]
    ns = 5 if const else 10
    x = np.zeros(ns)
    k1 = np.zeros(ns)
    k2 = np.zeros(ns)
    k3 = np.zeros(ns)
    k4 = np.zeros(ns)
    lhs = np.empty(n)
    rhs = np.empty(n)
    for k in range(n):
        s = sig[k]
        q1 = s[0] - x[0]
        q2 = q1 - x[1]
        if const:
            lhs[k] = s[1] * q2
            rhs[k] = x[2] - x[4]
        else:
            lhs[k] = s[1] * q2 - 2.0 * x[2] + x[4]
            rhs[k] = x[6] + x[7] - x[9]
        if k == n - 1:
            break
        m = mid[k]
        e = sig[k + 1]
        if const:
            _const_rhs(x, s[0], s[2], s[3], s[4], k1)
            _const_rhs(x + 0.5 * dt * k1, m[0], m[2], m[3], m[4], k2)
            _const_rhs(x + 0.5 * dt * k2, m[0], m[2], m[3], m[4], k3)
            _const_rhs(x + dt * k3, e[0], e[2], e[3], e[4], k4)
        else:
            _bank_rhs(x, s[0], s[1], s[2], s[3], s[4], k1)
            _bank_rhs(x + 0.5 * dt * k1, m[0], m[1], m[2], m[3], m[4], k2)
            _bank_rhs(x + 0.5 * dt * k2, m[0], m[1], m[2], m[3], m[4], k3)
            _bank_rhs(x + dt * k3, e[0], e[1], e[2], e[3], e[4], k4)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return lhs, rhs


def _coefficients(tr):
    a, a1, a2 = tr.alpha, tr.alpha_d1, tr.alpha_d2
    w1, w2, w3 = tr.omega_d1, tr.omega_d2, tr.omega_d3
    lead = a * a * w1
    lead_d1 = 2.0 * a * a1 * w1 + a * a * w2
    lead_d2 = 2.0 * a1 * a1 * w1 + 2.0 * a * a2 * w1 + 4.0 * a * a1 * w2 + a * a * w3
    c = a * a2 * w1 - 2.0 * a1 * a1 * w1 - a * a * w1**3 - a * a1 * w2
    return np.column_stack([tr.y, lead, lead_d1, lead_d2, c])


def _grid_step(truth, truth_mid):
    t = np.asarray(truth.t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("truth must be sampled on a grid of at least two points")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("truth grid must be uniform")
    if np.asarray(truth_mid.t).shape != (t.size - 1,):
        raise ValueError("truth_mid must hold the step midpoints")
    return dt


def filtered_identity_residual(truth, truth_mid):
    """Twice-filtered second-order identity evaluated by a dedicated filter bank.

    With ``a = alpha^2 w'`` and ``c`` as in :func:`second_order_identity_residual`::

        a q2 - 2 F[a' q2] + F^2[a'' q2] = F^2[c y] + F[a' q1] - F^2[a'' q1]

    where ``F = 1/(p+1)``.  All filter states start at zero, so the residual is a
    pure transient that decays like ``(A + B t) e^{-t}``.

    Parameters
    ----------
    truth : SimTruth
        Signals on a uniform grid ``t_k``.
    truth_mid : SimTruth
        Signals at the midpoints ``t_k + dt/2``.
    """
    dt = _grid_step(truth, truth_mid)
    lhs, rhs = _run_bank(_coefficients(truth), _coefficients(truth_mid), dt, False)
    return IdentityResidual(lhs - rhs, lhs, rhs)


def constant_amplitude_identity_residual(truth, truth_mid):
    """Filtered identity after dividing out a constant amplitude::

        w' q2 = F[w'' (2 q2 + q1)] - F^2[w''' (q2 + q1) + w'^3 y]
    """
    dt = _grid_step(truth, truth_mid)

    def cols(tr):
        return np.column_stack([tr.y, tr.omega_d1, tr.omega_d1, tr.omega_d2, tr.omega_d3])

    lhs, rhs = _run_bank(cols(truth), cols(truth_mid), dt, True)
    return IdentityResidual(lhs - rhs, lhs, rhs)
