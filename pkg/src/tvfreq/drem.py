"""Dynamic regressor extension and mixing.

The regression ``z = m^T Theta`` is extended by ``m`` and passed through
``lam/(p+lam)``, giving ``Y = Omega Theta``.  Multiplying by ``adj(Omega)``
decouples it into scalar regressions ``adj(Omega) Y = det(Omega) Theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = ["DremState", "MixedRegression", "drem_step", "mix", "adjugate", "det_lu"]

N_PARAMS = 5


@njit(cache=True)
def det_lu(M):
    """Determinant by Gaussian elimination with partial pivoting."""
    n = M.shape[0]
    if n == 0:
        return 1.0
    A = M.copy()
    det = 1.0
    for k in range(n):
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, n):
            if abs(A[i, k]) > best:
                best = abs(A[i, k])
                p = i
        if best == 0.0:
            return 0.0
        if p != k:
            for j in range(n):
                tmp = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = tmp
            det = -det
        piv = A[k, k]
        det *= piv
        for i in range(k + 1, n):
            f = A[i, k] / piv
            for j in range(k + 1, n):
                A[i, j] -= f * A[k, j]
    return det


@njit(cache=True)
def adjugate_nb(M, out):
    n = M.shape[0]
    if n == 1:
        out[0, 0] = 1.0
        return
    minor = np.empty((n - 1, n - 1))
    for i in range(n):
        for j in range(n):
            r = 0
            for a in range(n):
                if a == i:
                    continue
                c = 0
                for b in range(n):
                    if b == j:
                        continue
                    minor[r, c] = M[a, b]
                    c += 1
                r += 1
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            out[j, i] = sign * det_lu(minor)


def adjugate(M):
    """Transpose of the cofactor matrix; ``M @ adjugate(M) == det(M) I`` even for singular ``M``."""
    M = np.ascontiguousarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("adjugate needs a square matrix")
    out = np.empty_like(M)
    adjugate_nb(M, out)
    return out


@njit(cache=True)
def drem_rhs(Y, Omega, m, z, lam, dY, dOmega):
    n = m.shape[0]
    for i in range(n):
        dY[i] = lam * (m[i] * z - Y[i])
        for j in range(n):
            dOmega[i, j] = lam * (m[i] * m[j] - Omega[i, j])


@njit(cache=True)
def mix_nb(Y, Omega, cY, adj):
    adjugate_nb(Omega, adj)
    n = Y.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += adj[i, j] * Y[j]
        cY[i] = acc
    return det_lu(Omega)


@dataclass
class DremState:
    """Filtered extension ``(Y, Omega)``; zero at start."""

    Y: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMS))
    Omega: np.ndarray = field(default_factory=lambda: np.zeros((N_PARAMS, N_PARAMS)))


@dataclass
class MixedRegression:
    curly_Y: np.ndarray
    Delta: float


def _sample_stages(sample):
    if isinstance(sample, (tuple, list)):
        if len(sample) != 3:
            raise ValueError("expected a sample or a (start, mid, end) triple of samples")
        return tuple(sample[i] for i in (0, 1, 1, 2))
    return (sample,) * 4


def drem_step(state: DremState, sample, lam, dt) -> DremState:
    """One RK4 step of ``Y' = lam (m z - Y)``, ``Omega' = lam (m m^T - Omega)``.

    ``sample`` is a :class:`~tvfreq.regression.RegressionSample` held over the
    step, or a ``(start, mid, end)`` triple.  ``Omega`` is re-symmetrised.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    stages = _sample_stages(sample)
    Y0, O0 = np.asarray(state.Y, dtype=float), np.asarray(state.Omega, dtype=float)
    kY, kO = [], []
    for s, c in zip(stages, (0.0, 0.5, 0.5, 1.0)):
        Ys = Y0 + c * dt * kY[-1] if kY else Y0
        Os = O0 + c * dt * kO[-1] if kO else O0
        dY, dO = np.empty_like(Y0), np.empty_like(O0)
        drem_rhs(Ys, Os, np.asarray(s.m, dtype=float), float(s.z), float(lam), dY, dO)
        kY.append(dY)
        kO.append(dO)
    Y = Y0 + dt / 6.0 * (kY[0] + 2.0 * kY[1] + 2.0 * kY[2] + kY[3])
    O = O0 + dt / 6.0 * (kO[0] + 2.0 * kO[1] + 2.0 * kO[2] + kO[3])
    return DremState(Y, 0.5 * (O + O.T))


def mix(state: DremState) -> MixedRegression:
    """``Delta = det(Omega)`` and ``curly_Y = adj(Omega) Y``."""
    Omega = np.ascontiguousarray(state.Omega, dtype=float)
    Y = np.ascontiguousarray(state.Y, dtype=float)
    cY = np.empty_like(Y)
    adj = np.empty_like(Omega)
    Delta = mix_nb(Y, Omega, cY, adj)
    return MixedRegression(cY, Delta)
