"""Single-clock RK4 loop over the whole estimation chain.

One state vector holds the fundamental matrix, the q-chain, the regressor
channels and the extension ``(Y, Omega)``; it is integrated as one coupled
system so intermediate signals are consistent at every RK4 stage.  The
gradient identifier is stepped from the mixed regression at the start of each
step.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .drem import drem_rhs, mix_nb
from .identifier import gradient_core, recover_core, validity_update
from .regression import N_CHANNELS, channel_rhs, regressor_inputs, regressor_output

# state layout
PHI = 0
QX = 4
CH = 6
YS = CH + N_CHANNELS
OM = YS + 5
N_STATE = OM + 25

# record columns
COLUMNS = (
    ["t", "y", "q1", "q2", "z"]
    + [f"m{i}" for i in range(1, 6)]
    + ["Delta"]
    + [f"curly_Y{i}" for i in range(1, 6)]
    + [f"theta_hat{i}" for i in range(1, 6)]
    + ["theta1_hat", "theta2_hat", "omega_hat", "valid"]
    + ["Phi11", "Phi12", "Phi21", "Phi22"]
)
DREM_COLUMNS = [f"Y{i}" for i in range(1, 6)] + [f"Omega{i}{j}" for i in range(1, 6) for j in range(1, 6)]
_C = {name: i for i, name in enumerate(COLUMNS)}
_N_BASE = len(COLUMNS)

STATUS_OK = 0
STATUS_BLOWUP = 1


@njit(cache=True)
def _rhs(X, y, gamma, lam, scale, use_ref, theta_ref, out, inp, ch_d, m, dY, dO):
    P11, P12, P21, P22 = X[0], X[1], X[2], X[3]
    out[0] = P21
    out[1] = P22
    out[2] = -gamma * P11
    out[3] = -gamma * P12
    q1 = y - X[QX]
    q2 = q1 - X[QX + 1]
    out[QX] = q1
    out[QX + 1] = q2
    ch = X[CH:YS]
    regressor_inputs(P11, P12, P21, P22, q1, q2, y, inp)
    channel_rhs(ch, inp, ch_d)
    out[CH:YS] = ch_d
    z = regressor_output(P11, P12, P21, P22, q1, q2, ch, gamma, m)
    for i in range(5):
        m[i] /= scale
    z /= scale
    if use_ref:
        z = 0.0
        for i in range(5):
            z += m[i] * theta_ref[i]
    drem_rhs(X[YS:OM], X[OM:N_STATE].reshape((5, 5)), m, z, lam, dY, dO)
    out[YS:OM] = dY
    out[OM:N_STATE] = dO.ravel()


@njit(cache=True)
def run_kernel(y, ymid, dt, gamma, lam, beta, prescale, use_ref, theta_ref,
               stride, ratio, hold, epsilon, max_substeps, record_drem):
    n = y.shape[0] - 1
    n_rec = n // stride + 1
    ncol = _N_BASE + (30 if record_drem else 0)
    rec = np.zeros((n_rec, ncol))

    X = np.zeros(N_STATE)
    X[0] = 1.0
    X[3] = 1.0
    k1 = np.zeros(N_STATE)
    k2 = np.zeros(N_STATE)
    k3 = np.zeros(N_STATE)
    k4 = np.zeros(N_STATE)
    tmp = np.zeros(N_STATE)
    inp = np.zeros(8)
    ch_d = np.zeros(N_CHANNELS)
    m = np.zeros(5)
    dY = np.zeros(5)
    dO = np.zeros((5, 5))
    cY = np.zeros(5)
    adj = np.zeros((5, 5))
    theta = np.zeros(5)
    vstate = np.zeros(3)
    t1 = 0.0
    t2 = 0.0
    scale_max = 0.0
    counts = np.zeros(3, dtype=np.int64)  # plain steps, sub-stepped, closed form
    status = STATUS_OK
    fail_step = -1

    for k in range(n + 1):
        yk = y[k]
        P11, P12, P21, P22 = X[0], X[1], X[2], X[3]
        q1 = yk - X[QX]
        q2 = q1 - X[QX + 1]
        z = regressor_output(P11, P12, P21, P22, q1, q2, X[CH:YS], gamma, m)
        if prescale:
            nm = 0.0
            for i in range(5):
                nm += m[i] * m[i]
            nm = math.sqrt(nm)
            if nm > scale_max:
                scale_max = nm
        scale = scale_max if (prescale and scale_max > 0.0) else 1.0

        Yv = np.ascontiguousarray(X[YS:OM])
        Om = np.ascontiguousarray(X[OM:N_STATE]).reshape((5, 5))
        Delta = mix_nb(Yv, Om, cY, adj)
        valid = validity_update(vstate, Delta, dt, ratio, hold)
        ok, r1, r2 = recover_core(theta, epsilon)
        if ok:
            t1 = r1
            t2 = r2
        if valid and not t1 > 0.0:
            valid = False

        if k % stride == 0:
            r = rec[k // stride]
            r[0] = k * dt
            r[1] = yk
            r[2] = q1
            r[3] = q2
            r[4] = z
            r[5:10] = m
            r[10] = Delta
            r[11:16] = cY
            r[16:21] = theta
            r[21] = t1
            r[22] = t2
            r[23] = P11 * t1 + P12 * t2
            r[24] = 1.0 if valid else 0.0
            r[25:29] = X[0:4]
            if record_drem:
                r[_N_BASE:_N_BASE + 5] = X[YS:OM]
                r[_N_BASE + 5:_N_BASE + 30] = X[OM:N_STATE]
        if k == n:
            break

        nsub = gradient_core(theta, cY, Delta, beta, dt, max_substeps)
        if nsub == 0:
            counts[2] += 1
        elif nsub > 1:
            counts[1] += 1
        else:
            counts[0] += 1

        ym = ymid[k]
        _rhs(X, yk, gamma, lam, scale, use_ref, theta_ref, k1, inp, ch_d, m, dY, dO)
        tmp[:] = X + 0.5 * dt * k1
        _rhs(tmp, ym, gamma, lam, scale, use_ref, theta_ref, k2, inp, ch_d, m, dY, dO)
        tmp[:] = X + 0.5 * dt * k2
        _rhs(tmp, ym, gamma, lam, scale, use_ref, theta_ref, k3, inp, ch_d, m, dY, dO)
        tmp[:] = X + dt * k3
        _rhs(tmp, y[k + 1], gamma, lam, scale, use_ref, theta_ref, k4, inp, ch_d, m, dY, dO)
        X[:] = X + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(5):
            for j in range(i + 1, 5):
                a = 0.5 * (X[OM + 5 * i + j] + X[OM + 5 * j + i])
                X[OM + 5 * i + j] = a
                X[OM + 5 * j + i] = a

        finite = True
        for i in range(N_STATE):
            if not math.isfinite(X[i]):
                finite = False
        for i in range(5):
            if not math.isfinite(theta[i]):
                finite = False
        if not finite:
            status = STATUS_BLOWUP
            fail_step = k + 1
            break

    return rec, counts, status, fail_step, X, theta
