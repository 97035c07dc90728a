"""Tests for the finite-difference gradient audit."""

import math

import numpy as np
import pytest

from invariant_osc.autodiff import inject_fault
from invariant_osc.learn.gradcheck import (
    DERIVATIVE_TOL,
    LOSS_TOL,
    GradCheckResult,
    gradient_suite,
    random_batch,
    suite_passed,
)

SMALL = {
    "base_width": 8,
    "base_depth": 2,
    "residual_width": 8,
    "residual_depth": 2,
    "encoder_width": 8,
    "encoder_depth": 2,
    "latent_dim": 2,
}

NAMES = [
    "identity_residual",
    "base_dH",
    "base_g",
    "residual_dH",
    "composed_dH",
    "composed_g",
    "loss_base",
    "loss_residual",
    "loss_encoder",
    "loss_full",
]


@pytest.fixture(scope="module")
def clean_suite():
    return gradient_suite(3, 2, samples=4, seed=0, network_options=SMALL, batch_size=4)


class TestGradientSuite:
    """Tests for gradient_suite."""

    def test_all_checks_run(self, clean_suite):
        """Every named check is reported once, in order."""
        assert [r.name for r in clean_suite] == NAMES

    def test_correct_derivatives_pass(self, clean_suite):
        """The analytical derivatives agree with central differences."""
        failed = [r.to_dict() for r in clean_suite if not r.passed]
        assert failed == []
        assert suite_passed(clean_suite)

    def test_tolerances(self, clean_suite):
        """Derivative checks use the tight tolerance, loss checks the looser one."""
        tolerances = {r.name: r.tolerance for r in clean_suite}
        assert tolerances["identity_residual"] == 0.0
        assert tolerances["base_dH"] == DERIVATIVE_TOL
        assert tolerances["loss_full"] == LOSS_TOL

    def test_injected_fault_is_caught(self):
        """Scaling one backward rule makes a loss check fail."""
        with inject_fault("softplus", 1.1):
            results = gradient_suite(3, 2, samples=3, seed=1, network_options=SMALL, batch_size=4)
        failed = {r.name for r in results if not r.passed}
        assert failed
        assert failed <= {"loss_base", "loss_residual", "loss_encoder", "loss_full"}
        assert not suite_passed(results)


class TestGradCheckResult:
    """Tests for GradCheckResult."""

    def test_nan_fails(self):
        """A NaN error never passes."""
        assert not GradCheckResult("x", math.nan, 1.0, 1).passed

    def test_to_dict(self):
        """The JSON document includes the verdict."""
        doc = GradCheckResult("base_g", 1e-7, 1e-5, 10).to_dict()
        assert doc == {
            "name": "base_g",
            "max_rel_error": 1e-7,
            "tolerance": 1e-5,
            "samples": 10,
            "passed": True,
        }

    def test_random_batch_shapes(self):
        """History windows carry (q, qd, tau) for each of K steps."""
        batch = random_batch(np.random.default_rng(0), 5, 3, 4)
        assert batch.q.shape == (5, 3)
        assert batch.history.shape == (5, 4, 9)
