import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

import delaylab as dl
from delaylab.errors import (
    DefectiveEigenbasis,
    EnvelopeNotVerified,
    IntervalTooShort,
    NotExponentiallyStable,
)

DEFECTIVE = np.array([[-1.0, 10.0], [0.0, -1.0]])


def _oracle_max_ratio(env, a, n_points=1000):
    """Worst |e^{tA}| / (M e^{-mu t}) on an independent dense-expm grid."""
    times = np.geomspace(1e-3 / env.mu, 5.0 / env.mu, n_points)
    norms = np.array([np.linalg.norm(sla.expm(t * a), 2) for t in times])
    return float(np.max(norms / env.bound(times)))


def test_uniform_decay_all_strategies():
    a = -0.7 * np.eye(3)
    for strategy in ("numerical_abscissa", "eigen_conditioning", "sampled_fit"):
        env = dl.estimate_envelope(a, strategy=strategy)
        assert env.certified
        assert 0 < env.mu <= 0.7 + 1e-12
        assert env.M == pytest.approx(1.0, rel=1e-6)
    exact = dl.estimate_envelope(a, strategy="numerical_abscissa")
    assert exact.M == 1.0 and exact.mu == pytest.approx(0.7)


def test_rotation_minus_identity():
    a = np.array([[0.0, 1.0], [-1.0, 0.0]]) - np.eye(2)
    env = dl.estimate_envelope(a, strategy="numerical_abscissa")
    assert env.M == 1.0
    assert env.mu == pytest.approx(1.0, rel=1e-12)


def test_defective_matrix_strategies():
    # symmetrized eigenvalue of the nilpotent part is +4: abscissa positive
    with pytest.raises(NotExponentiallyStable):
        dl.estimate_envelope(DEFECTIVE, strategy="numerical_abscissa")
    with pytest.raises(DefectiveEigenbasis):
        dl.estimate_envelope(DEFECTIVE, strategy="eigen_conditioning")
    env = dl.estimate_envelope(DEFECTIVE, strategy="sampled_fit")
    assert env.certified
    assert 0 < env.mu <= 1.0
    # independent oracle grid; the fit grid is discrete, allow its resolution
    assert _oracle_max_ratio(env, DEFECTIVE) <= 1 + 1e-3


def test_eigen_conditioning_nonnormal():
    a = np.array([[-1.0, 3.0], [0.0, -2.0]])
    env = dl.estimate_envelope(a, strategy="eigen_conditioning")
    assert env.certified
    assert env.M >= 1.0
    assert env.mu == pytest.approx(1.0, rel=1e-5)
    # the conditioning bound is rigorous, not just grid-sampled
    assert _oracle_max_ratio(env, a) <= 1 + 1e-9


def test_unstable_matrix_rejected():
    with pytest.raises(NotExponentiallyStable):
        dl.estimate_envelope(np.array([[0.1]]), strategy="sampled_fit")


def test_t_star_examples():
    assert dl.SemigroupEnvelope(1.0, 0.7, "pinned").t_star == 0.0
    assert dl.SemigroupEnvelope(math.e, 1.0, "pinned").t_star == pytest.approx(1.0)
    assert dl.SemigroupEnvelope(2.0, 0.5, "pinned").t_star == pytest.approx(2 * math.log(2))


def test_contraction_factor_examples():
    env = dl.SemigroupEnvelope(1.0, 1.0, "pinned")
    assert env.contraction_factor(math.log(2)) == pytest.approx(0.25)
    env2 = dl.SemigroupEnvelope(2.0, 1.0, "pinned")
    # sqrt(c) = 2 * 1/4 = 1/2
    assert env2.contraction_factor(math.log(4)) == pytest.approx(0.25)
    with pytest.raises(IntervalTooShort):
        env2.contraction_factor(0.5)  # t_star = ln 2 > 0.5


@given(st.floats(min_value=0.05, max_value=5.0), st.floats(min_value=1.01, max_value=3.0))
@settings(max_examples=60, deadline=None)
def test_contraction_decreasing_in_interval_length(mu, factor):
    env = dl.SemigroupEnvelope(1.5, mu, "pinned")
    t1 = env.t_star + 0.5
    t2 = t1 * factor
    c1, c2 = env.contraction_factor(t1), env.contraction_factor(t2)
    assert 0 < c2 < c1 < 1
    assert env.contraction_factor(t1 + 200.0 / mu) < 1e-12


def test_envelope_field_validation():
    with pytest.raises(ValueError):
        dl.SemigroupEnvelope(0.5, 1.0, "pinned")
    with pytest.raises(ValueError):
        dl.SemigroupEnvelope(1.0, 0.0, "pinned")


def test_pin_envelope_accepts_true_and_rejects_false():
    a = np.array([[-1.0]])
    env = dl.pin_envelope(a, None, 1.0, 1.0)
    assert env.certified
    with pytest.raises(EnvelopeNotVerified):
        dl.pin_envelope(a, None, 1.0, 2.0)  # decay rate twice the true one


def test_verify_envelope_reports_ratio():
    a = np.array([[-1.0]])
    good = dl.SemigroupEnvelope(1.0, 0.9, "pinned")
    ok, worst = dl.verify_envelope(good, a)
    assert ok and worst <= 1.0
    bad = dl.SemigroupEnvelope(1.0, 2.0, "pinned")
    ok, worst = dl.verify_envelope(bad, a)
    assert not ok and worst > 1.0
