"""Learnable dynamics models and the analytical oracle."""

from invariant_osc.models.analytical import AnalyticalModel
from invariant_osc.models.composed import VARIANTS, ComposedModel, DynamicsModel, build_model
from invariant_osc.models.delan import (
    DelanBase,
    DelanOutput,
    PdGuard,
    coriolis_gravity,
    predict_qdd,
    predict_tau,
)
from invariant_osc.models.residual import ExtrinsicsEncoder, ResidualNet, compose

__all__ = [
    "VARIANTS",
    "AnalyticalModel",
    "ComposedModel",
    "DelanBase",
    "DelanOutput",
    "DynamicsModel",
    "ExtrinsicsEncoder",
    "PdGuard",
    "ResidualNet",
    "build_model",
    "compose",
    "coriolis_gravity",
    "predict_qdd",
    "predict_tau",
]
