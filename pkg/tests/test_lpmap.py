"""Scaled-factor mapping: forward and inverse, degree growth, edge cases."""

import numpy as np
import pytest

from polyqr.errors import ParameterError
from polyqr.lpmap import map_forward, map_inverse
from polyqr.mimo import draw_channel
from polyqr.lpmat import eval_many, fit_from_samples
from polyqr.qr import givens_qr

from conftest import complex_matrix


def test_forward_scaling_definition(rng):
    """q~_k = Delta_{k-1} r_kk q_k and r~ rows scale the same way."""
    A = complex_matrix(rng, 4, 3)
    f = givens_qr(A)
    m = map_forward(f)
    d = np.diagonal(f.R).real
    deltas = np.cumprod(d**2)
    prev = np.concatenate([[1.0], deltas[:-1]])
    scales = prev * d
    assert np.allclose(m.Qtilde, f.Q * scales[None, :], atol=1e-12)
    assert np.allclose(m.Rtilde, f.R * scales[:, None], atol=1e-12)
    assert np.allclose(m.delta, deltas, atol=1e-12)


def test_first_scaled_column_is_input_column(rng):
    A = complex_matrix(rng, 5, 3)
    m = map_forward(givens_qr(A))
    assert np.allclose(m.Qtilde[:, 0], A[:, 0], atol=1e-12)


def test_delta_equals_gram_determinant(rng):
    """Delta_k is the determinant of the leading k-column Gram matrix."""
    A = complex_matrix(rng, 5, 3)
    m = map_forward(givens_qr(A))
    for k in range(1, 4):
        Ak = A[:, :k]
        det = np.linalg.det(Ak.conj().T @ Ak).real
        assert np.isclose(m.delta[k - 1], det, rtol=1e-10)


def test_roundtrip(rng):
    A = complex_matrix(rng, 4, 3)
    f = givens_qr(A)
    back = map_inverse(map_forward(f))
    assert np.allclose(back.Q, f.Q, atol=1e-10)
    assert np.allclose(back.R, f.R, atol=1e-10)


def test_roundtrip_column_range(rng):
    """A partial map over trailing columns inverts with the right prefix."""
    A = complex_matrix(rng, 5, 4)
    f = givens_qr(A)
    d = np.diagonal(f.R).real
    delta2 = float(np.prod(d[:2] ** 2))
    from polyqr.qr import QRFactors

    sub = QRFactors(Q=f.Q[:, 2:], R=f.R[2:, 2:], kind=f.kind)
    m = map_forward(sub, start_col=3, delta_prefix=delta2)
    back = map_inverse(m)
    assert np.allclose(back.Q, f.Q[:, 2:], atol=1e-9)
    assert np.allclose(back.R, f.R[2:, 2:], atol=1e-9)


def test_map_rejects_complex_diagonal(rng):
    from polyqr.qr import KIND_GS, QRFactors

    Q = np.eye(3, dtype=complex)
    R = np.triu(complex_matrix(rng, 3, 3))
    factors = QRFactors(Q=Q, R=R, kind=KIND_GS)
    with pytest.raises(ParameterError):
        map_forward(factors)


def test_mapped_sequences_are_polynomial(rng):
    """Across tones the mapped factors interpolate; the raw ones do not.

    Fit both families on 2*M_T*L+1 equidistant circle points and check
    prediction at fresh points: the mapped factors must fit to near machine
    precision, the unit-norm factors must not.
    """
    mt, mr, L = 2, 3, 2
    lp = draw_channel(mt, mr, L, rng)
    T = 2 * mt * L + 1
    pts = [np.exp(2j * np.pi * k / T) for k in range(T)]
    probe = [np.exp(2j * np.pi * (k + 0.41) / 9) for k in range(9)]

    def factor_seq(points, mapper):
        out = []
        for H in eval_many(lp, points):
            f = givens_qr(H)
            out.append(mapper(f).ravel())
        return np.asarray(out)

    mapped_fit = factor_seq(pts, lambda f: map_forward(f).Qtilde)
    mapped_probe = factor_seq(probe, lambda f: map_forward(f).Qtilde)
    fit = fit_from_samples(pts, mapped_fit[:, None, :], mt * L, mt * L)
    pred = eval_many(fit, probe)[:, 0, :]
    assert np.abs(pred - mapped_probe).max() < 1e-9 * np.abs(mapped_probe).max()

    raw_fit = factor_seq(pts, lambda f: f.Q)
    raw_probe = factor_seq(probe, lambda f: f.Q)
    fit = fit_from_samples(pts, raw_fit[:, None, :], mt * L, mt * L)
    pred = eval_many(fit, probe)[:, 0, :]
    assert np.abs(pred - raw_probe).max() > 1e-3


def test_rank_drop_without_residual_reports_rank(rng):
    from polyqr.errors import MissingDataError

    A = complex_matrix(rng, 4, 2)
    A[:, 1] = (0.3 - 0.8j) * A[:, 0]
    m = map_forward(givens_qr(A))
    with pytest.raises(MissingDataError):
        map_inverse(m)


def test_rank_deficient_inverse_recovers_orthonormal_basis(rng):
    """A dependent column must come back with a zero Q column, not a
    normalized dust vector; the recovered factors still reproduce A."""
    A = complex_matrix(rng, 4, 2)
    A[:, 1] = (0.3 - 0.8j) * A[:, 0]
    m = map_forward(givens_qr(A))
    back = map_inverse(m, residual_matrix=A)
    norms = np.linalg.norm(back.Q, axis=0)
    assert np.isclose(norms[0], 1, atol=1e-10)
    assert norms[1] < 1e-8
    offdiag = abs(back.Q[:, 0].conj() @ back.Q[:, 1])
    assert offdiag < 1e-8
    assert np.allclose(back.Q @ back.R, A, atol=1e-9)
    assert abs(back.R[1, 1]) < 1e-8


def test_inverse_moderate_scale_roundtrip(rng):
    """Squared-product growth over several columns stays invertible."""
    A = 5.0 * complex_matrix(rng, 6, 4)
    f = givens_qr(A)
    m = map_forward(f)
    back = map_inverse(m)
    assert np.allclose(back.Q, f.Q, atol=1e-8)
    assert np.allclose(back.R, f.R, atol=1e-8 * np.abs(f.R).max())


def test_forward_extreme_scale_stays_finite(rng):
    """Past the overflow trigger the scale chain switches to logs."""
    A = 1e40 * complex_matrix(rng, 3, 2)
    m = map_forward(givens_qr(A))
    assert np.all(np.isfinite(m.Qtilde))
    assert np.all(np.isfinite(m.delta))
