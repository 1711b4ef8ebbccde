import math

import numpy as np
import pytest

from cpsystole import mc
from cpsystole.linear_hermitian_algebra import wedge_power, hermitian_to_form
from cpsystole.cpn_fields import fs_hermitian


def test_volume_of_cp3():
    est = mc.mc_integrate_cpn(lambda z: np.ones(len(z)), 3, 1000, 0)
    assert est.value == pytest.approx(1 / 6) and est.std_error == 0


def test_fs_normalization_of_top_power():
    # alpha_A^n = n! det(A) dx1 dy1 ... and the FS density is det(A), so int Omega^n = mean(n!) / n! = 1
    z = mc.sample_cpn(2, 5, np.random.default_rng(0))
    A = fs_hermitian(z)
    tops = np.array([wedge_power(hermitian_to_form(a), 2).top().real for a in A])
    np.testing.assert_allclose(tops / np.linalg.det(A).real, 2.0, rtol=1e-12)
    assert mc.mc_integrate_cpn(lambda z: np.full(len(z), 2.0), 2, 100, 0).value == pytest.approx(1.0)


def test_nonconstant_integral_within_three_sigma():
    # |Z_0|^2 / |Z|^2 = 1 / (1 + |z|^2) integrates to vol / (m + 1)
    est = mc.mc_integrate_cpn(lambda z: 1 / (1 + np.sum(np.abs(z) ** 2, axis=1)), 2, 100_000, 5)
    assert est.within(0.5 / 3)
    assert est.std_error > 0


def test_hyperplane_sampling_stays_in_hyperplane():
    n = np.array([1, 2j, -1, 0.5])
    z = mc.sample_hyperplane(3, 200, np.random.default_rng(1), n)
    Z = np.concatenate([np.ones((200, 1)), z], axis=1)
    assert np.max(np.abs(Z @ (n / np.linalg.norm(n)).conj())) < 1e-12


def test_radius_cap():
    z = mc.sample_cpn(3, 500, np.random.default_rng(2), radius=2.0)
    assert np.max(np.linalg.norm(z, axis=1)) <= 2.0


def test_too_few_samples():
    with pytest.raises(ValueError):
        mc.mc_integrate_cpn(lambda z: np.ones(len(z)), 2, 1, 0)


@pytest.mark.parametrize("samples", [10, 40_000])
def test_results_independent_of_workers(samples):
    f = lambda z: np.abs(z[:, 0]) ** 2 / (1 + np.sum(np.abs(z) ** 2, axis=1))
    a = mc.mc_integrate_cpn(f, 3, samples, 9, workers=1)
    b = mc.mc_integrate_cpn(f, 3, samples, 9, workers=4)
    assert a == b


def test_seeds_change_streams():
    f = lambda z: np.abs(z[:, 0]) ** 2
    assert mc.mc_integrate_cpn(f, 2, 1000, 1).value != mc.mc_integrate_cpn(f, 2, 1000, 2).value


def test_delta_method_ratio():
    rng = np.random.default_rng(3)
    x = rng.normal(2.0, 0.1, size=(1, 10_000))
    y = rng.normal(4.0, 0.1, size=(1, 10_000))
    est = mc.delta_method(lambda a, b: a[0] / b[0], [x, y])
    se = 0.5 * math.hypot(0.1 / 2.0, 0.1 / 4.0) / 100
    assert est.std_error == pytest.approx(se, rel=0.05)
    assert est.value == pytest.approx(x.mean() / y.mean(), rel=1e-12)
