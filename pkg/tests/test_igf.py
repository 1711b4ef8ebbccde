import math

import numpy as np
import pytest

from cpsystole import integral_geometry as igf
from cpsystole.linear_hermitian_algebra import DomainError
from cpsystole.cpn_fields import Monomial, ScalarField
from cpsystole.systole_closed_forms import calibrated_areas, sys2_nor_from_areas, sys4n_nor

GEN = ScalarField(3, (Monomial((1, 0, 0), (1, 0, 0), 1.0),))
GEN2 = ScalarField(3, (Monomial((0, 1, 1), (0, 1, 1), 0.7 + 0.3j), Monomial((1, 0, 0), (0, 0, 0), 0.5)))


def test_conformal_factor_validation():
    with pytest.raises(DomainError):
        igf.ConformalFactor(GEN, 1.0)
    with pytest.raises(DomainError):
        igf.ConformalFactor(GEN + 1.0, 0.5)
    with pytest.raises(DomainError):
        igf.ConformalFactor.constant(0.0)


def test_conformal_factor_bounds():
    phi = igf.ConformalFactor(GEN2, 0.6)
    assert phi.check_positive(3, 20_000) >= phi.lower_bound - 1e-12
    assert not phi.is_constant and igf.ConformalFactor.constant(2.0).is_constant
    z = np.zeros((4, 3))
    np.testing.assert_allclose(igf.ConformalFactor.constant(2.0)(z), 2.0)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_family_masses(t):
    assert igf.family_mass("penrose", t, 1) == pytest.approx(1 / 6)
    assert igf.family_mass("equatorial", t, 1) == pytest.approx(t / (2 * t + 1))
    with pytest.raises(ValueError):
        igf.family_mass("other", t, 1)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_theta_estimate_matches_closed_form(t):
    est = igf.equatorial_theta(t, 1, 50_000, 3)
    assert est.within(igf.equatorial_theta(t, 1))
    assert igf.equatorial_theta(t, 1) == pytest.approx(6 / (2 * t + 1))


def test_penrose_formula_exact_for_constant_phi():
    # every fiber has area t, so the left side is t / 3! with no sampling error
    lhs = igf.igf_lhs("penrose", igf.ConformalFactor.constant(), 0.5, 1, 1000, 0)
    assert lhs.value == pytest.approx(calibrated_areas(0.5, 1)[3], rel=1e-12)


@pytest.mark.parametrize("family", igf.FAMILIES)
@pytest.mark.parametrize("phi", [igf.ConformalFactor(GEN, 0.5), igf.ConformalFactor(GEN2, 0.6)])
def test_igf_two_sided(family, phi):
    r = igf.igf_verify(family, phi, 2.0, 1, 40_000, 11, theta_samples=40_000)
    assert r["passed"], r


def test_holder_chain_constant_and_generic():
    const = igf.holder_chain_check("penrose", igf.ConformalFactor.constant(2.0), 0.5, 1, 20_000, 1, members=4, inner=512)
    assert const["holder_equality"] and const["passed"]
    # all fibers are congruent, so the minimum member realizes the systole
    assert const["min_normalized_member"] == pytest.approx(sys2_nor_from_areas(0.5, 1), rel=1e-9)
    gen = igf.holder_chain_check("equatorial", igf.ConformalFactor(GEN, 0.5), 2.0, 1, 40_000, 2, members=4, inner=512)
    assert gen["holder_strict"] and gen["passed"]
    assert gen["sys_nor_g"] == sys4n_nor(2.0, 1)


def test_penrose_systole_only_below_one():
    assert igf.systole_normalized("penrose", 2.0, 1) is None
    assert igf.systole_normalized("penrose", 0.5, 1) == sys2_nor_from_areas(0.5, 1)


def test_denseness():
    r = igf.denseness_check(1, 500, 3)
    assert r["fiber_membership_residual"] < 1e-12 and r["hyperplane_membership_residual"] < 1e-12


def test_volume_ratio_is_t():
    z = np.array([[0.1, 0.2j, 0.3], [1.0, -2.0, 0.5j]])
    np.testing.assert_allclose(igf.volume_ratio(z, 3.0), 3.0, rtol=1e-12)


def test_results_independent_of_workers():
    phi = igf.ConformalFactor(GEN, 0.5)
    a = igf.igf_verify("equatorial", phi, 0.5, 1, 20_000, 4, theta_samples=20_000, workers=1)
    b = igf.igf_verify("equatorial", phi, 0.5, 1, 20_000, 4, theta_samples=20_000, workers=3)
    assert a == b
