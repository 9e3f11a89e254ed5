import numpy as np
import pytest

from dagrca.errors import ContractError, DimensionError, SingularMatrixError
from dagrca.numerics import tensor as T
from dagrca.numerics.rng import Rng
from dagrca.structure.model import (MLPParams, ModelParams, decode, elbo, encode,
                                    kl_standard_normal, reconstruction_term, sample_elbo)

from conftest import central_diff, rel_err


def identity_params(m, A=None, hidden=4):
    ident_mean = MLPParams.identity(1, heads=1, hidden=hidden)
    ident_two = MLPParams.identity(1, heads=2, hidden=hidden)
    A = np.zeros((m, m)) if A is None else A
    return ModelParams(A=T.Tensor(A, True), f1=ident_mean, f2=ident_two, f3=ident_mean,
                       f4=ident_two)


def test_identity_encoder_returns_input(rng):
    X = rng.normal(size=(7, 4))
    mu, sigma = encode(X, identity_params(4))
    np.testing.assert_allclose(mu.value[..., 0], X, atol=1e-15)
    np.testing.assert_allclose(sigma.value, 1.0)


def test_identity_roundtrip(rng):
    X = rng.normal(size=(9, 3))
    p = identity_params(3)
    mu_z, _ = encode(X, p)
    mu_x, sigma_x = decode(mu_z, p)
    np.testing.assert_allclose(mu_x.value, X, atol=1e-15)
    assert sigma_x.shape == X.shape


def test_encoder_applies_i_minus_a_transpose(rng):
    m = 4
    A = np.triu(rng.normal(size=(m, m)), 1)
    X = rng.normal(size=(5, m))
    mu, _ = encode(X, identity_params(m, A))
    np.testing.assert_allclose(mu.value[..., 0], X - X @ A, atol=1e-12)


def test_decoder_inverts_the_mixing(rng):
    m = 4
    A = np.triu(rng.normal(size=(m, m)), 1)
    Z = rng.normal(size=(5, m, 1))
    mu, _ = decode(Z, identity_params(m, A))
    np.testing.assert_allclose(mu.value, Z[..., 0] @ np.linalg.inv(np.eye(m) - A), atol=1e-12)


def test_perturbation_reaches_children_only(rng):
    m = 4
    A = np.zeros((m, m))
    A[0, 2] = 0.7  # 0 -> 2
    X = rng.normal(size=(3, m))
    p = identity_params(m, A)
    base = encode(X, p)[0].value
    X2 = X.copy()
    X2[:, 0] += 1.0
    diff = np.abs(encode(X2, p)[0].value - base)[..., 0].max(axis=0)
    assert diff[0] > 0 and diff[2] > 0
    assert diff[1] == 0 and diff[3] == 0


def test_shapes_with_random_init(rng):
    p = ModelParams.initialize(5, Rng(0), hidden=16, latent_dim=2)
    X = rng.normal(size=(8, 5))
    mu_z, s_z = encode(X, p)
    assert mu_z.shape == s_z.shape == (8, 5, 2)
    mu_x, s_x = decode(mu_z, p)
    assert mu_x.shape == s_x.shape == (8, 5)
    assert np.all(s_z.value > 0)


def test_dimension_errors(rng):
    p = ModelParams.initialize(3, Rng(0), hidden=8)
    with pytest.raises(DimensionError):
        encode(rng.normal(size=(4, 5)), p)
    with pytest.raises(DimensionError):
        decode(rng.normal(size=(4, 3)), p)


def test_decoder_reports_unit_gain_cycle():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SingularMatrixError):
        decode(np.ones((2, 2, 1)), identity_params(2, A))


def test_kl_examples():
    assert kl_standard_normal(np.zeros((3, 2)), np.ones((3, 2)), 3).value == 0.0
    assert kl_standard_normal(np.array([1.0]), np.array([1.0]), 1).value == pytest.approx(0.5)
    with pytest.raises(ContractError):
        kl_standard_normal(np.zeros(2), np.array([1.0, 0.0]), 1)


def test_reconstruction_and_elbo(rng):
    X = rng.normal(size=(6, 3))
    assert reconstruction_term(X, X, 1.0).value == 0.0
    mu = X + 0.5
    np.testing.assert_allclose(reconstruction_term(X, mu, 2.0).value, -0.25 * 18 / (2 * 2.0 * 6))
    mu_z, s_z = rng.normal(size=(6, 3, 1)), np.exp(rng.normal(size=(6, 3, 1)) * 0.1)
    e = elbo(X, mu, mu_z, s_z, 2.0).value
    kl = 0.5 * np.sum(mu_z ** 2 + s_z ** 2 - 1 - 2 * np.log(s_z)) / 6
    np.testing.assert_allclose(e, -0.25 * 18 / (2 * 2.0 * 6) - kl)
    with pytest.raises(ContractError):
        elbo(X, mu, mu_z, s_z, 0.0)


def test_sample_elbo_gradient_matches_finite_differences(rng):
    m, n = 4, 20
    p = ModelParams.initialize(m, Rng(3), hidden=8)
    arrays = p.arrays()
    arrays[0] = rng.normal(size=(m, m)) * 0.3
    np.fill_diagonal(arrays[0], 0.0)
    # larger MLP weights so the ReLU units are active
    arrays = [arrays[0]] + [a * 5 + (0.1 if a.ndim == 1 else 0) for a in arrays[1:]]
    X = rng.normal(size=(n, m))
    noise = rng.normal(size=(n, m, 1))

    def f(idx, x):
        arr = list(arrays)
        arr[idx] = x
        return float(sample_elbo(X, p.with_arrays(arr), noise).value)

    q = p.with_arrays(arrays)
    with T.Tape() as tape:
        e = sample_elbo(X, q, noise)
    grads = tape.backward(e)
    for idx, leaf in enumerate(q.leaves()):
        num = central_diff(lambda x: f(idx, x), arrays[idx])
        assert rel_err(grads[leaf], num) < 1e-4, q.names()[idx]
