"""QR factorizations: Gram-Schmidt, Givens, and the regularized variants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyqr.errors import ParameterError
from polyqr.qr import augmented_qr, givens_qr, gs_qr, mmse_qr, regularized_qr

from conftest import complex_matrix


def check_factors(A, f, atol=1e-10):
    P, M = A.shape
    assert f.Q.shape == (P, M) and f.R.shape == (M, M)
    assert np.allclose(f.Q @ f.R, A, atol=atol)
    assert np.allclose(np.tril(f.R, -1), 0, atol=atol)
    d = np.diagonal(f.R)
    assert np.all(np.abs(d.imag) < atol)
    assert np.all(d.real >= -atol)


@pytest.mark.parametrize("fac", [gs_qr, givens_qr])
@pytest.mark.parametrize("shape", [(2, 2), (4, 2), (4, 4), (6, 3)])
def test_factorization_properties(rng, fac, shape):
    A = complex_matrix(rng, *shape)
    f = fac(A)
    check_factors(A, f)
    gram = f.Q.conj().T @ f.Q
    assert np.allclose(gram, np.eye(shape[1]), atol=1e-10)


def test_gs_and_givens_agree(rng):
    """Full-rank factors with positive real diagonal are unique."""
    A = complex_matrix(rng, 5, 3)
    fg = gs_qr(A)
    fv = givens_qr(A)
    assert np.allclose(fg.Q, fv.Q, atol=1e-9)
    assert np.allclose(fg.R, fv.R, atol=1e-9)


def test_wide_matrix_rejected(rng):
    with pytest.raises(ParameterError):
        givens_qr(complex_matrix(rng, 2, 4))


def test_gs_zero_column_convention(rng):
    """A dependent column produces a zero Q column and a zero diagonal."""
    A = complex_matrix(rng, 4, 3)
    A[:, 2] = 2.0 * A[:, 0]
    f = gs_qr(A)
    assert np.allclose(f.Q[:, 2], 0)
    assert abs(f.R[2, 2]) < 1e-9
    assert np.allclose(f.Q @ f.R, A, atol=1e-9)


def test_regularized_equals_augmented_top_block(rng):
    A = complex_matrix(rng, 4, 3)
    alpha = 0.7
    fr = regularized_qr(A, alpha)
    fa = augmented_qr(A, alpha)
    assert np.allclose(fr.R, fa.R, atol=1e-9)
    assert np.allclose(fr.Q, fa.Q[:4], atol=1e-9)


def test_augmented_reconstructs_stack(rng):
    A = complex_matrix(rng, 4, 3)
    alpha = 0.5
    f = augmented_qr(A, alpha)
    stack = np.vstack([A, alpha * np.eye(3)])
    assert f.Q.shape == (7, 3)
    assert np.allclose(f.Q @ f.R, stack, atol=1e-9)


def test_regularized_normal_equations(rng):
    """R^H R = A^H A + alpha^2 I is what regularization means."""
    A = complex_matrix(rng, 5, 3)
    alpha = 1.3
    f = regularized_qr(A, alpha)
    lhs = f.R.conj().T @ f.R
    rhs = A.conj().T @ A + alpha**2 * np.eye(3)
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_mmse_qr_scaling_convention(rng):
    """mmse_qr absorbs the noise level and stream count into alpha."""
    A = complex_matrix(rng, 4, 2)
    sigma = 0.3
    f = mmse_qr(A, sigma)
    g = regularized_qr(A, np.sqrt(2) * sigma)
    assert np.allclose(f.R, g.R, atol=1e-9)


def test_mmse_sigma_zero_is_plain_qr(rng):
    A = complex_matrix(rng, 4, 2)
    f = mmse_qr(A, 0.0)
    g = givens_qr(A)
    assert np.allclose(f.R, g.R, atol=1e-10)


def test_rank_deficient_regularized_still_invertible(rng):
    A = complex_matrix(rng, 4, 3)
    A[:, 1] = A[:, 0]
    f = regularized_qr(A, 0.4)
    assert np.min(np.diagonal(f.R).real) > 0.01


@settings(max_examples=30, deadline=None)
@given(
    p=st.integers(1, 6),
    m=st.integers(1, 6),
    seed=st.integers(0, 2**31 - 1),
)
def test_factorization_random_shapes(p, m, seed):
    if m > p:
        p, m = m, p
    rng = np.random.default_rng(seed)
    A = complex_matrix(rng, p, m)
    check_factors(A, givens_qr(A))
