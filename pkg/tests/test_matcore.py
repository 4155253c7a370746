import numpy as np
import pytest
from hypothesis import given, strategies as st

from revunc.matcore import (
    I2, SX, SY, SZ, DimensionError, HermiticityError, herm_expm, ket, partial_trace,
    projector, spectral_decompose, tensor_product,
)
from revunc.qstate import random_hermitian, rng_for

seeds = st.integers(0, 2**32 - 1)


def _partial_trace_loop(m, da, dc, keep):
    """Index-by-index oracle."""
    if keep == "A":
        out = np.zeros((da, da), complex)
        for i in range(da):
            for j in range(da):
                out[i, j] = sum(m[i * dc + k, j * dc + k] for k in range(dc))
    else:
        out = np.zeros((dc, dc), complex)
        for i in range(dc):
            for j in range(dc):
                out[i, j] = sum(m[k * dc + i, k * dc + j] for k in range(da))
    return out


def test_tensor_product_examples():
    assert np.array_equal(tensor_product(I2, I2), np.eye(4))
    assert np.array_equal(tensor_product(SZ, I2), np.diag([1, 1, -1, -1]))
    assert np.array_equal(tensor_product(projector([1, 0]), projector([0, 1])), np.diag([0, 1, 0, 0]))


def test_partial_trace_examples():
    rho_a = np.array([[0.7, 0.2j], [-0.2j, 0.3]])
    rho_c = np.array([[0.4, 0.1], [0.1, 0.6]])
    assert np.allclose(partial_trace(np.kron(rho_a, rho_c), 2, 2, "A"), rho_a, atol=1e-15)
    assert np.allclose(partial_trace(np.kron(rho_a, rho_c), 2, 2, "C"), rho_c, atol=1e-15)
    phi = projector(ket(1, 0, 0, 1))
    assert np.allclose(partial_trace(phi, 2, 2, "A"), I2 / 2, atol=1e-15)
    assert np.allclose(partial_trace(np.eye(4) / 4, 2, 2, "C"), I2 / 2, atol=1e-15)


def test_partial_trace_dimension_error():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(6), 2, 2)


@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3)]), st.sampled_from("AC"))
def test_partial_trace_matches_loop_and_preserves_trace(seed, split, keep):
    rng = rng_for(seed)
    m = random_hermitian(rng, split[0] * split[1])
    got = partial_trace(m, *split, keep=keep)
    assert np.allclose(got, _partial_trace_loop(m, *split, keep), atol=1e-13)
    assert abs(np.trace(got) - np.trace(m)) < 1e-12


@given(seeds, st.floats(-3, 3))
def test_partial_trace_linear(seed, alpha):
    rng = rng_for(seed)
    m1, m2 = random_hermitian(rng, 6), random_hermitian(rng, 6)
    lhs = partial_trace(alpha * m1 + m2, 2, 3, "A")
    rhs = alpha * partial_trace(m1, 2, 3, "A") + partial_trace(m2, 2, 3, "A")
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_spectral_pauli_examples():
    dz = spectral_decompose(SZ)
    assert [g.eigenvalue for g in dz.groups] == [-1.0, 1.0]
    assert np.allclose(dz.groups[0].projector, np.diag([0, 1]), atol=1e-15)
    assert np.allclose(dz.groups[1].projector, np.diag([1, 0]), atol=1e-15)

    di = spectral_decompose(I2)
    assert len(di) == 1 and di.groups[0].multiplicity == 2
    assert np.allclose(di.groups[0].projector, I2)

    dx = spectral_decompose(SX)
    assert np.allclose(dx.groups[0].projector, projector(ket(1, -1)), atol=1e-15)
    assert np.allclose(dx.groups[1].projector, projector(ket(1, 1)), atol=1e-15)


def test_spectral_rejects_non_hermitian():
    with pytest.raises(HermiticityError) as err:
        spectral_decompose(np.array([[0, 1], [0, 0]]))
    assert err.value.asymmetry == pytest.approx(1.0)


def test_grouping_merges_near_degenerate():
    dec = spectral_decompose(np.diag([1.0, 1.0 + 1e-11, 2.0]))
    assert [g.multiplicity for g in dec.groups] == [2, 1]


@given(seeds, st.integers(1, 8))
def test_spectral_reconstruction_and_projectors(seed, dim):
    h = random_hermitian(rng_for(seed), dim)
    dec = spectral_decompose(h)
    assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-10
    assert np.max(np.abs(sum(dec.projectors) - np.eye(dim))) <= 1e-10
    for i, p in enumerate(dec.projectors):
        assert np.max(np.abs(p @ p - p)) <= 1e-10
        assert np.max(np.abs(p - p.conj().T)) <= 1e-12
        for q in dec.projectors[i + 1:]:
            assert np.max(np.abs(p @ q)) <= 1e-10
    assert np.all(np.diff(dec.eigenvalues) > 1e-9)


def test_herm_expm_examples():
    assert np.allclose(herm_expm(SX, 0.0), np.eye(2), atol=1e-15)
    beta = 0.7
    assert np.allclose(herm_expm(np.diag([2.0, -1.0]), -beta), np.diag(np.exp([-2 * beta, beta])), atol=1e-14)
    assert np.allclose(herm_expm(SZ, -1.0), np.diag([np.exp(-1), np.e]), atol=1e-14)


@given(seeds, st.floats(-2, 2), st.floats(-2, 2))
def test_herm_expm_group_property(seed, s1, s2):
    h = random_hermitian(rng_for(seed), 4)
    lhs = herm_expm(h, s1) @ herm_expm(h, s2)
    assert np.max(np.abs(lhs - herm_expm(h, s1 + s2))) <= 1e-9 * max(1.0, np.max(np.abs(lhs)))


def test_herm_expm_matches_scipy(rng):
    from scipy.linalg import expm

    h = random_hermitian(rng, 5)
    assert np.allclose(herm_expm(h, -0.3), expm(-0.3 * h), atol=1e-12)
