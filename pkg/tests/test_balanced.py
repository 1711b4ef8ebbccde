import math

import numpy as np
import pytest

from cpsystole import balanced_functional as B
from cpsystole.linear_hermitian_algebra import phi_map
from cpsystole.cpn_fields import ProductForm, gt_hermitian, random_scalar_field
from cpsystole.systole_closed_forms import sys4n_nor

N = 3


def fs_sigma(z):
    return phi_map(B.fs_field(z))


def test_F_at_fs_is_one():
    est = B.F_eval(N, fs_sigma, 2000, 0)
    assert est.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_F_homothety_invariant(lam):
    f = random_scalar_field(N, np.random.default_rng(1), amplitude=0.05)
    sigma = lambda z: phi_map(B.kahler_perturbation(f)(z)) * (1 + 0.3 * np.sin(np.abs(z[:, :1, None])))
    base = B.F_eval(N, sigma, 5000, 3)
    scaled = B.F_eval(N, lambda z: lam * sigma(z), 5000, 3)
    assert abs(scaled.value - base.value) <= 3 * base.std_error + 1e-12


def test_F_constant_on_kahler_forms():
    rng = np.random.default_rng(2)
    for _ in range(10):
        f = random_scalar_field(N, rng, amplitude=0.05)
        est = B.F_eval(N, lambda z: phi_map(B.kahler_perturbation(f)(z)), 20_000, 4)
        assert est.within(1.0)


def test_sys_nor_balanced_closed_form():
    assert B.sys_nor_balanced_closed_form(3) == pytest.approx(6 ** (2 / 3) / 2, rel=1e-15)
    assert B.sys_nor_balanced(3, B.fs_field, 1000, 0).within(6 ** (2 / 3) / 2)
    assert B.sys_nor_balanced(3, B.scaled_field(B.fs_field, 3.0), 1000, 0).within(6 ** (2 / 3) / 2)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_sys_nor_balanced_on_homogeneous_metrics(t):
    # the hyperplane of CP^3 is calibrated by omega_t^2 / 2!, so both modules must agree
    est = B.sys_nor_balanced(3, lambda z: gt_hermitian(z, t), 100_000, 3)
    assert est.within(sys4n_nor(t, 1))


def test_zero_direction_gives_zero():
    prob = B.BalancedProblem(N, B.fs_field, 1000, 1)
    d = B.zero_direction(N)
    assert prob.first_variation(d).value == 0 and prob.second_variation(d).value == 0
    assert prob.fd_first(d) == 0 and prob.fd_second(d) == 0


def test_hessian_of_omega_vanishes():
    prob = B.BalancedProblem(N, B.fs_field, 2000, 1)
    h = prob.hessian_kahler(B.fs_field)
    assert abs(h.value) < 1e-12


def test_eta_reconstruction():
    # (n-1) eta ^ omega^{n-2} = mu pointwise
    rng = np.random.default_rng(7)
    f = random_scalar_field(N, rng)
    g = random_scalar_field(N, rng)
    mu = B.mixed_direction(f, g, N, 0.2, 0.5, 0.3)
    prob = B.BalancedProblem(N, B.fs_field, 50, 2)
    mu_P, _ = prob.direction(mu)
    eta = B.eta_from_mu(mu_P, prob.A_P)
    back = B.eta_wedge_omega_dual(eta, prob.A_P)
    np.testing.assert_allclose(back, mu_P, atol=1e-10 * np.abs(mu_P).max())


def test_first_variation_matches_fd_on_mixed_direction():
    prob = B.BalancedProblem(N, B.fs_field, 20_000, 5)
    mu = B.random_mixed_direction(N, np.random.default_rng(8))
    fv, fd = prob.first_variation(mu), prob.fd_first(mu)
    assert abs(fv.value - fd) <= 1e-4 * max(abs(fv.value), abs(fd)) + 1e-8


def test_second_variation_matches_fd_on_mixed_direction():
    prob = B.BalancedProblem(N, B.fs_field, 20_000, 5)
    mu = B.random_mixed_direction(N, np.random.default_rng(9))
    sv, fd = prob.second_variation(mu), prob.fd_second(mu)
    assert abs(sv.value - fd) <= 1e-4 * max(abs(sv.value), abs(fd)) + 1e-8


def test_kahler_direction_in_kernel():
    prob = B.BalancedProblem(N, B.fs_field, 20_000, 6)
    mu = B.kahler_direction(random_scalar_field(N, np.random.default_rng(10)), N, 0.3)
    for est in (prob.first_variation(mu), prob.second_variation(mu), prob.hessian_from_mu(mu)):
        assert abs(est.value) <= max(1e-6, 3 * est.std_error)


def test_direction_library_layout():
    lib = B.default_direction_library(N, 0, kahler=3, mixed=4)
    assert [k for _, k, _ in lib] == ["zero", "kahler"] + ["kahler"] * 3 + ["mixed"] * 4
    assert all(isinstance(f, ProductForm) for _, _, f in lib)


def test_positivity_failure_is_reported():
    with pytest.raises(Exception):
        B.F_eval(N, lambda z: -fs_sigma(z), 100, 0)
