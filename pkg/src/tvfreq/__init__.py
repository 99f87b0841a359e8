"""Identification of a time-varying frequency of a noise-free sinusoid.

The frequency and amplitude are outputs of known linear generators with
unknown initial state.  The signal is turned into a linear regression with
derivative-free filters, decoupled by dynamic regressor extension and mixing,
and identified with a gradient law.
"""
from .drem import DremState, MixedRegression, adjugate, drem_step, mix
from .estimator import FrequencyEstimator
from .filtering import QChain, lag_step, q_chain_step
from .generators import (
    GeneratorSpec,
    HarmonicFrequencySpec,
    SimTruth,
    closed_form_phi_harmonic,
    fundamental_matrix_step,
    truth_at,
)
from .harness import ScenarioConfig, emit_csv, run_scenario, validate
from .identifier import gradient_step, reconstruct_omega, recover_theta
from .regression import (
    RegressorChannels,
    filtered_identity_residual,
    monomials_of,
    regressor_step,
    second_order_identity_residual,
)

__version__ = "0.1.0"
