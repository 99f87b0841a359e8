"""scikit-learn style front end for the time-varying frequency identifier."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from .generators import IntegrationError, closed_form_phi_harmonic
from .identifier import MAX_SUBSTEPS, reconstruct_omega
from .pipeline import COLUMNS, DREM_COLUMNS, STATUS_OK, run_kernel

__all__ = ["FrequencyEstimator", "midpoint_samples"]


def midpoint_samples(y):
    """Cubic (four-point Lagrange) estimates of ``y`` halfway between samples."""
    y = np.asarray(y, dtype=float)
    n = y.size - 1
    if n < 3:
        return 0.5 * (y[:-1] + y[1:])
    mid = np.empty(n)
    mid[1:-1] = (-y[:-3] + 9.0 * y[1:-2] + 9.0 * y[2:-1] - y[3:]) / 16.0
    mid[0] = 0.3125 * y[0] + 0.9375 * y[1] - 0.3125 * y[2] + 0.0625 * y[3]
    mid[-1] = 0.0625 * y[-4] - 0.3125 * y[-3] + 0.9375 * y[-2] + 0.3125 * y[-1]
    return mid


class FrequencyEstimator(BaseEstimator):
    """Identify a harmonic time-varying frequency from a noise-free sinusoid.

    The measured signal is ``y = alpha sin(omega(t) + phi)`` with constant but
    unknown ``alpha`` and ``phi``, and ``omega`` generated by
    ``xi' = [[0, 1], [-gamma, 0]] xi``, ``omega = xi[0]``, with unknown ``xi(0)``.

    Parameters
    ----------
    gamma : float
        Known generator coefficient (1/s^2).
    lam : float
        Pole of the extension filter ``lam/(p+lam)``.
    beta : float
        Gradient adaptation gain.
    prescale : bool
        Normalise ``(z, m)`` by the running maximum of ``|m|`` before extension.
    record_every : int
        Keep every ``record_every``-th step in ``history_``.
    validity_ratio, validity_hold : float
        The estimate is flagged valid once ``|Delta|`` exceeds
        ``validity_ratio`` times its running max for ``validity_hold`` seconds.
    epsilon : float
        Tolerance on a negative squared-frequency estimate during recovery.
    max_substeps : int
        Cap on stability sub-steps before the closed-form step is used.
    record_drem : bool
        Also store ``Y`` and ``Omega`` in ``history_``.

    Attributes
    ----------
    theta_hat_ : ndarray, shape (5,)
        Final monomial estimate.
    theta1_, theta2_ : float
        Recovered generator initial state (``theta1 >= 0`` convention).
    valid_ : bool
        Validity flag at the end of the record.
    history_ : dict of ndarray
        Decimated trajectory, keyed by column name.
    guard_counts_ : dict
        Number of plain, sub-stepped and closed-form identifier steps.
    """

    def __init__(self, gamma=4.0, lam=1.0, beta=1e23, prescale=False, record_every=100,
                 validity_ratio=1e-3, validity_hold=0.1, epsilon=1e-9,
                 max_substeps=MAX_SUBSTEPS, record_drem=False):
        self.gamma = gamma
        self.lam = lam
        self.beta = beta
        self.prescale = prescale
        self.record_every = record_every
        self.validity_ratio = validity_ratio
        self.validity_hold = validity_hold
        self.epsilon = epsilon
        self.max_substeps = max_substeps
        self.record_drem = record_drem

    def _check_params(self):
        for name in ("gamma", "lam", "beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")

    def fit(self, t, y, y_mid=None, theta_ref=None, exact_data=False):
        """Run the identifier over a uniformly sampled record starting at ``t[0] = 0``.

        Parameters
        ----------
        t : array_like, shape (n,)
            Uniform time grid starting at zero.
        y : array_like, shape (n,)
            Measured signal on ``t``.
        y_mid : array_like, shape (n - 1,), optional
            Signal at the step midpoints; interpolated when omitted.
        theta_ref : array_like, shape (5,), optional
            Reference monomial vector; only used when ``exact_data`` is set.
        exact_data : bool
            Drive the extension with ``m^T theta_ref`` in place of ``z``.
        """
        self._check_params()
        t = column_or_1d(t).astype(float)
        y = column_or_1d(y).astype(float)
        if t.shape != y.shape or t.size < 2:
            raise ValueError("t and y must have equal length >= 2")
        if abs(t[0]) > 1e-12:
            raise ValueError("the time grid must start at 0 (generator initial state)")
        dt = t[1] - t[0]
        if not dt > 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
            raise ValueError("t must be uniformly spaced and increasing")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite values")
        if y_mid is None:
            y_mid = midpoint_samples(y)
        y_mid = column_or_1d(y_mid).astype(float)
        if y_mid.shape != (y.size - 1,):
            raise ValueError("y_mid must have length len(y) - 1")
        if exact_data and theta_ref is None:
            raise ValueError("exact_data needs theta_ref")
        ref = np.zeros(5) if theta_ref is None else np.asarray(theta_ref, dtype=float)

        rec, counts, status, fail_step, X, theta = run_kernel(
            y, y_mid, float(dt), float(self.gamma), float(self.lam), float(self.beta),
            bool(self.prescale), bool(exact_data), ref, int(self.record_every),
            float(self.validity_ratio), float(self.validity_hold), float(self.epsilon),
            int(self.max_substeps), bool(self.record_drem),
        )
        if status != STATUS_OK:
            raise IntegrationError(
                f"integration blew up at t = {fail_step * dt:.6g} s; "
                f"|state|_max = {np.nanmax(np.abs(X)) if np.any(np.isfinite(X)) else np.inf:.3g}, "
                f"|theta|_max = {np.max(np.abs(theta)):.3g}"
            )
        names = COLUMNS + (DREM_COLUMNS if self.record_drem else [])
        self.history_ = {name: rec[:, i] for i, name in enumerate(names)}
        self.dt_ = dt
        self.theta_hat_ = theta
        self.theta1_ = float(rec[-1, COLUMNS.index("theta1_hat")])
        self.theta2_ = float(rec[-1, COLUMNS.index("theta2_hat")])
        self.valid_ = bool(rec[-1, COLUMNS.index("valid")])
        self.guard_counts_ = {"plain": int(counts[0]), "substepped": int(counts[1]),
                              "closed_form": int(counts[2])}
        return self

    def predict(self, t):
        """Reconstructed frequency ``omega_hat(t)`` from the final estimate."""
        check_is_fitted(self, "theta_hat_")
        t = np.asarray(t, dtype=float)
        return reconstruct_omega(closed_form_phi_harmonic(self.gamma, t), self.theta1_, self.theta2_)
