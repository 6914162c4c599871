import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebit_ar.channel import (
    ArrayGeometry,
    ChannelParams,
    QuantizedObservation,
    gen_angles,
    gen_training,
    noise_variance,
    observe,
    response_derivative,
    response_matrix,
    steering_vector,
    synth_channel,
)
from onebit_ar.core import sign_quantize


def test_steering_examples():
    np.testing.assert_allclose(steering_vector(ArrayGeometry(4), np.pi / 2), np.ones(4), atol=1e-15)
    np.testing.assert_allclose(steering_vector(ArrayGeometry(4), 0.0), [1, -1, 1, -1], atol=1e-15)
    np.testing.assert_allclose(steering_vector(ArrayGeometry(2), np.pi / 3), [1, 1j], atol=1e-15)
    with pytest.raises(ValueError):
        steering_vector(ArrayGeometry(2), 4.0)
    with pytest.raises(ValueError):
        steering_vector(ArrayGeometry(2, "users"), 1.0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0)
    with pytest.raises(ValueError):
        ArrayGeometry(4, "upa")


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams([0.1, 0.2], [0.1], [1, 1])
    with pytest.raises(ValueError):
        ChannelParams([-0.1], [0.1], [1])


def test_synth_examples(rng):
    one = ArrayGeometry(1)
    np.testing.assert_allclose(synth_channel(ChannelParams([0.3], [1.1], [1.0]), one, one), [[1]])
    two = ArrayGeometry(2)
    h = synth_channel(ChannelParams([np.pi / 2], [np.pi / 2], [2.0]), two, two)
    np.testing.assert_allclose(h, 2 * np.ones((2, 2)), atol=1e-14)
    rx, tx = ArrayGeometry(3), ArrayGeometry(5)
    p = ChannelParams([0.4, 2.0], [1.0, 2.9], [1 + 1j, -0.5j])
    ref = sum(
        p.gains[k] * np.outer(steering_vector(rx, p.doa[k]), steering_vector(tx, p.dod[k]).conj()) for k in range(2)
    )
    np.testing.assert_allclose(synth_channel(p, rx, tx), ref, atol=1e-13)


def test_users_geometry():
    g = ArrayGeometry(3, "users")
    np.testing.assert_array_equal(response_matrix(g, [0.1, 0.2, 0.3]), np.eye(3))
    np.testing.assert_array_equal(response_derivative(g, [0.1, 0.2, 0.3]), 0)
    with pytest.raises(ValueError):
        response_matrix(g, [0.1])


def test_response_derivative_fd():
    g = ArrayGeometry(6)
    th = np.array([0.3, 1.7])
    fd = (response_matrix(g, th + 1e-7) - response_matrix(g, th - 1e-7)) / 2e-7
    np.testing.assert_allclose(response_derivative(g, th), fd, atol=1e-6)


@settings(max_examples=40)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_gen_angles_separation(k, seed):
    sep = min(np.pi / 16, np.pi / max(k - 1, 1))
    a = gen_angles(k, np.random.default_rng(seed), sep)
    assert a.size == k and a.min() >= 0 and a.max() <= np.pi
    if k > 1:
        assert np.min(np.diff(np.sort(a))) >= sep - 1e-12


def test_gen_angles_sweep():
    rng = np.random.default_rng(0)
    gaps = [np.min(np.diff(np.sort(gen_angles(5, rng, np.pi / 16)))) for _ in range(1000)]
    assert min(gaps) >= np.pi / 16 - 1e-12


def test_gen_angles_infeasible(rng):
    with pytest.raises(ValueError):
        gen_angles(20, rng, np.pi / 16)


def test_training(rng):
    s = gen_training(4, 4, "unitary", rng)
    np.testing.assert_allclose(s @ s.conj().T, np.eye(4), atol=1e-12)
    s = gen_training(64, 32, "semi_unitary", rng)
    w = np.linalg.eigvalsh(s @ s.conj().T)
    np.testing.assert_allclose(np.sort(w), [0] * 32 + [1] * 32, atol=1e-10)
    g = gen_training(64, 32, "gaussian", rng)
    assert abs(np.mean(np.abs(g) ** 2) - 1) < 0.1
    with pytest.raises(ValueError):
        gen_training(4, 5, "semi_unitary", rng)
    with pytest.raises(ValueError):
        gen_training(4, 3, "unitary", rng)


def test_observe_noiseless(rng):
    h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    s = gen_training(4, 4, "unitary", rng)
    obs = observe(h, s, np.inf, rng)
    np.testing.assert_array_equal(obs.y, sign_quantize(h @ s))


def test_observe_zero_channel_quadrants():
    obs = observe(np.zeros((100, 4)), gen_training(4, 100, "gaussian", np.random.default_rng(1)), 0.0, 7)
    assert obs.noise_seed == 7
    counts = [np.mean((np.sign(obs.y.real) == a) & (np.sign(obs.y.imag) == b)) for a in (1, -1) for b in (1, -1)]
    np.testing.assert_allclose(counts, 0.25, atol=0.02)


def test_observe_seeded_reproducible():
    h = np.ones((2, 3), dtype=complex)
    s = gen_training(3, 5, "gaussian", np.random.default_rng(2))
    np.testing.assert_array_equal(observe(h, s, 0.0, 11).y, observe(h, s, 0.0, 11).y)


def test_noise_variance():
    hs = np.full((2, 2), 2.0 + 0j)
    assert noise_variance(hs, 0.0) == pytest.approx(4.0)
    assert noise_variance(hs, 10.0) == pytest.approx(0.4)
    assert noise_variance(hs, np.inf) == 0.0


def test_observation_validation():
    with pytest.raises(ValueError):
        QuantizedObservation(np.array([[0.5 + 1j]]), np.ones((1, 1)), 0.0)
    with pytest.raises(ValueError):
        QuantizedObservation(np.array([[1 + 1j]]), np.ones((1, 2)), 0.0)
