import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsystole import linear_hermitian_algebra as alg
from cpsystole import cpn_fields as F
from cpsystole.mc import sample_cpn


def _fd_ddbar(f, z, h=1e-4):
    """``2 d^2 f / dzbar_j dz_k`` from real second differences."""
    m = z.shape[0]
    x = np.empty(2 * m)
    x[0::2], x[1::2] = z.real, z.imag
    val = lambda y: float(f.value(y[0::2] + 1j * y[1::2]))
    E = np.eye(2 * m) * h
    Hs = np.array([[(val(x + E[i] + E[j]) - val(x + E[i] - E[j]) - val(x - E[i] + E[j]) + val(x - E[i] - E[j]))
                    / (4 * h * h) for j in range(2 * m)] for i in range(2 * m)])
    A = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            A[j, k] = 0.25 * (Hs[2 * j, 2 * k] + Hs[2 * j + 1, 2 * k + 1]
                              + 1j * (Hs[2 * j, 2 * k + 1] - Hs[2 * j + 1, 2 * k]))
    return 2 * A.conj()


def test_fs_at_origin():
    np.testing.assert_allclose(F.fs_hermitian(np.zeros(3)), np.eye(3) / math.pi)


def test_fs_matrix_formula():
    z = np.array([0.4 - 0.1j, 1.2j])
    N = 1 + np.vdot(z, z).real
    expect = (N * np.eye(2) - np.outer(z, z.conj())) / (math.pi * N ** 2)
    np.testing.assert_allclose(F.fs_hermitian(z), expect, atol=1e-15)


def test_gt_reduces_to_fs_at_one():
    z = sample_cpn(3, 5, np.random.default_rng(0))
    np.testing.assert_allclose(F.gt_hermitian(z, 1.0), F.fs_hermitian(z), atol=1e-14)


def test_gt_scales_vertical_part_only():
    z = sample_cpn(3, 4, np.random.default_rng(1))
    V = F.vertical_hermitian(z)
    np.testing.assert_allclose(F.gt_hermitian(z, 3.0) - F.fs_hermitian(z), 2.0 * V, atol=1e-14)


def test_vertical_part_has_rank_one():
    z = sample_cpn(3, 6, np.random.default_rng(2))
    for V in F.vertical_hermitian(z):
        ev = np.linalg.eigvalsh(V)
        assert np.sum(ev > 1e-12) == 1 and ev.min() > -1e-14


def test_homogeneous_rejects_bad_parameters():
    with pytest.raises(ValueError):
        F.Homogeneous(1, -1.0)


def test_monomial_needs_beta_not_larger_than_alpha():
    with pytest.raises(ValueError):
        F.Monomial((0, 1), (1, 1))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_amplitude_bound_holds(seed):
    rng = np.random.default_rng(seed)
    f = F.random_scalar_field(3, rng, amplitude=0.7)
    z = sample_cpn(3, 500, rng)
    assert np.max(np.abs(f.value(z))) <= f.amplitude_bound() + 1e-12
    assert f.amplitude_bound() == pytest.approx(0.7)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ddbar_against_finite_differences(seed):
    rng = np.random.default_rng(seed)
    f = F.random_scalar_field(2, rng)
    z = sample_cpn(2, 1, rng, radius=3.0)[0]
    np.testing.assert_allclose(f.ddbar_hermitian(z), _fd_ddbar(f, z), atol=1e-6)


def test_ddbar_of_norm_squared_potential():
    # |z|^2 / (1 + |z|^2) has i ddbar equal to pi times the FS matrix
    f = F.ScalarField(2, (F.Monomial((1, 0), (1, 0)), F.Monomial((0, 1), (0, 1))))
    z = np.array([0.3 + 0.5j, -0.2j])
    np.testing.assert_allclose(f.ddbar_hermitian(z), _fd_ddbar(f, z), atol=1e-6)


def test_scalar_field_json_round_trip():
    f = F.random_scalar_field(3, np.random.default_rng(4)) + 2.0
    g = F.ScalarField.from_json_dict(f.to_json_dict())
    z = sample_cpn(3, 10, np.random.default_rng(5))
    np.testing.assert_allclose(g.value(z), f.value(z), atol=1e-15)


def test_form_from_json_builds_product():
    desc = {"m": 3, "generators": [{"alpha": [1, 0, 0], "beta": [0, 1, 0], "coeff": {"re": 0.5, "im": 0.1}}],
            "structure": {"op": "sum", "args": [{"op": "omega_pow", "k": 2},
                                                {"op": "scale", "c": 0.3, "arg": {"op": "wedge", "args": [
                                                    {"op": "ddbar", "gen": 0}, {"op": "omega_pow", "k": 1}]}}]}}
    form = F.form_from_json(desc)
    z = np.array([0.1, 0.2j, -0.3])
    om = alg.hermitian_to_form(F.fs_hermitian(z))
    gen = F.ScalarField(3, (F.Monomial((1, 0, 0), (0, 1, 0), 0.5 + 0.1j),))
    expect = alg.wedge(om, om) + alg.wedge(alg.hermitian_to_form(gen.ddbar_hermitian(z)), om) * 0.3
    x = np.empty(6)
    x[0::2], x[1::2] = z.real, z.imag
    assert form.at(x).allclose(expect, atol=1e-12)
    with pytest.raises(ValueError):
        F.form_from_json({"m": 3, "structure": {"op": "nope"}})


def test_fs_omega_is_closed():
    x = np.array([0.2, -0.1, 0.4, 0.3])
    d = F.exterior_derivative_at(lambda y: F.FubiniStudy(2).omega(y), x)
    assert d.max_abs() < 1e-9


def test_christoffel_vanish_at_fs_origin():
    gamma = F.christoffel(F.FubiniStudy(2), np.zeros(4))
    assert np.max(np.abs(gamma)) < 1e-8


def test_k_trace_vanishes_for_homogeneous_but_not_conformal():
    z = np.array([0.3 + 0.1j, -0.2j, 0.5])
    assert np.max(np.abs(F.GrayCalculator(F.Homogeneous(1, 0.3), z).k_trace())) < 1e-6
    conf = F.Conformal(F.FubiniStudy(3), F.ScalarField(3, (F.Monomial((1, 0, 0), (1, 0, 0)),), 2.0))
    assert np.max(np.abs(F.GrayCalculator(conf, z).k_trace())) > 1e-3


def test_codifferential_matches_minus_k_trace():
    # with delta = -*d*, delta omega = -sum_i g(K(e_i, e_i), .)
    conf = F.Conformal(F.FubiniStudy(3), F.ScalarField(3, (F.Monomial((0, 1, 0), (1, 0, 0), 0.8),), 2.0))
    z = np.array([0.2 - 0.3j, 0.1j, 0.4])
    delta = F.codifferential_of_omega(conf, z)
    np.testing.assert_allclose(delta, -F.GrayCalculator(conf, z).k_trace(), atol=1e-6)


def test_fibers_are_complex_and_minimal():
    # the vertical line through z is a J-invariant surface with zero mean curvature under g_t
    z = np.array([0.3 + 0.2j, -0.1j, 0.25])
    W = F.vertical_vector(z)[:, None]
    for t in (0.5, 2.0):
        H = F.mean_curvature_vector(F.Homogeneous(1, t), z, W)
        assert np.max(np.abs(H)) < 1e-6
    # a generic projective line is not minimal once t != 1
    Hz = F.mean_curvature_vector(F.Homogeneous(1, 2.0), z, np.array([[1.0], [0.0], [0.0]]))
    assert np.max(np.abs(Hz)) > 1e-3


def test_kahler_identity_on_fs():
    z = np.array([0.2 + 0.1j, -0.3j])
    f = F.ScalarField(2, (F.Monomial((1, 0), (0, 1), 0.4),))
    form = lambda x: alg.hermitian_to_form(f.ddbar_hermitian(x[0::2] + 1j * x[1::2]))
    r = F.kahler_identity_check(z, form, (1, 1))
    assert r["residual"] < 1e-4
