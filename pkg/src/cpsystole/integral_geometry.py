"""Integral geometric formulas for the systole-realizing families of ``g_t``.

Two families on ``CP^{2n+1}`` are implemented.  The Penrose fibers are
parameterized by ``HP^n`` with the measure making the fibration a Riemannian
submersion, of total mass ``1/(2n+1)!``.  The hyperplanes ``sigma^perp`` are
parameterized by ``CP^{2n+1}`` itself with the measure ``theta(t) dV_{g_t}``.

Every submanifold integral is a Monte Carlo average over FS-uniform points of
the member, weighted by the ratio of the ``g_t`` and FS area elements computed
from Gram determinants, so the closed-form areas are never assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linear_hermitian_algebra import DomainError
from .cpn_fields import ScalarField, chart_differential, chart_of, fs_hermitian, gt_hermitian, quaternionic_j
from .mc import McEstimate, delta_method, gaussian_sphere, map_samples
from .systole_closed_forms import area_ratio, calibrated_areas, sys2_nor_from_areas, sys4n_nor

FAMILIES = ("penrose", "equatorial")


@dataclass(frozen=True)
class ConformalFactor:
    """``phi = level + amplitude * f / bound(f)``, positive because ``|f| <= bound(f)``."""
    field: ScalarField | None = None
    amplitude: float = 0.0
    level: float = 1.0

    def __post_init__(self):
        if self.level <= 0:
            raise DomainError("level must be positive")
        if abs(self.amplitude) >= self.level:
            raise DomainError("amplitude must stay below the level to keep phi positive")
        if self.field is not None and self.field.constant != 0.0:
            raise DomainError("pass the generator part only; the level is the constant")

    @classmethod
    def constant(cls, c: float = 1.0) -> "ConformalFactor":
        return cls(None, 0.0, c)

    @property
    def is_constant(self) -> bool:
        return self.field is None or self.amplitude == 0.0 or self.field.amplitude_bound() == 0.0

    @property
    def lower_bound(self) -> float:
        return self.level - abs(self.amplitude)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape[:-1], float(self.level))
        if not self.is_constant:
            out = out + self.amplitude * self.field.value(z) / self.field.amplitude_bound()
        return out

    def check_positive(self, m: int, samples: int = 10_000, seed: int = 0) -> float:
        """Minimum over FS-uniform points; raises if not positive."""
        rng = np.random.default_rng(seed)
        Z = gaussian_sphere(rng, samples, m + 1)
        lo = float(np.min(self(chart_of(Z))))
        if lo <= 0:
            raise DomainError(f"conformal factor is not positive (min {lo:.3g})")
        return lo


def _orthonormal_complement(Z, S, k: int, rng) -> np.ndarray:
    """``k`` random vectors spanning the complement of ``span(Z, S)`` (columns, shape (N, d, k))."""
    N, d = Z.shape
    G = rng.standard_normal((N, d, k)) + 1j * rng.standard_normal((N, d, k))
    for V in (Z, S):
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        G = G - V[:, :, None] * np.einsum("nd,ndk->nk", V.conj(), G)[:, None, :]
    Q, _ = np.linalg.qr(G)
    return Q


def _push(Z, cols) -> np.ndarray:
    return np.stack([chart_differential(Z, cols[:, :, j]) for j in range(cols.shape[2])], axis=-1)


def volume_ratio(z, t: float) -> np.ndarray:
    """``dV_{g_t} / dV_FS`` at chart points."""
    return (np.linalg.det(gt_hermitian(z, t)) / np.linalg.det(fs_hermitian(z))).real


def fiber_basis(Z) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair ``(P, jP)`` spanning the Penrose fiber through ``[Z]``."""
    P = np.asarray(Z, dtype=complex)
    P = P / np.linalg.norm(P, axis=-1, keepdims=True)
    return P, quaternionic_j(P)


def fiber_membership_residual(Z, P, Q) -> np.ndarray:
    """Distance of unit ``Z`` from ``span(P, Q)``."""
    Z = np.asarray(Z, dtype=complex)
    Z = Z / np.linalg.norm(Z, axis=-1, keepdims=True)
    proj = np.sum(P.conj() * Z, -1)[..., None] * P + np.sum(Q.conj() * Z, -1)[..., None] * Q
    return np.linalg.norm(Z - proj, axis=-1)


def denseness_check(n: int, points: int = 1000, seed: int = 0) -> dict:
    """Construct the member of each family through random points and measure membership."""
    rng = np.random.default_rng(seed)
    Z = gaussian_sphere(rng, points, 2 * n + 2)
    P, Q = fiber_basis(Z)
    # a second point of the same fiber must span the same fiber
    ab = gaussian_sphere(rng, points, 2)
    W = ab[:, :1] * P + ab[:, 1:] * Q
    P2, Q2 = fiber_basis(W)
    fib = max(float(np.max(fiber_membership_residual(Z, P, Q))),
              float(np.max(fiber_membership_residual(Z, P2, Q2))))
    # hyperplane sigma^perp through Z: any unit sigma orthogonal to Z
    S = rng.standard_normal(Z.shape) + 1j * rng.standard_normal(Z.shape)
    S = S - np.sum(Z.conj() * S, -1)[:, None] * Z
    S = S / np.linalg.norm(S, axis=1, keepdims=True)
    hyp = float(np.max(np.abs(np.sum(S.conj() * Z, -1))))
    return {"points": points, "fiber_membership_residual": fib, "hyperplane_membership_residual": hyp}


# -- member integrals --------------------------------------------------------

def _fiber_member_values(n, t, phi, power, P, Q, ab):
    """``phi^power * dA_{g_t}/dA_FS`` at the points ``a P + b Q``."""
    Z = ab[:, :1] * P + ab[:, 1:] * Q
    T = -ab[:, 1:].conj() * P + ab[:, :1].conj() * Q
    z = chart_of(Z)
    return phi(z) ** power * area_ratio(z, chart_differential(Z, T)[:, :, None], t)


def _hyperplane_member_values(n, t, phi, power, S, rng):
    """``phi^power * dA_{g_t}/dA_FS`` at FS-uniform points of ``S^perp``."""
    Z = gaussian_sphere(rng, S.shape[0], S.shape[1])
    Z = Z - np.sum(S.conj() * Z, -1)[:, None] * S
    Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    cols = _orthonormal_complement(Z, S, 2 * n, rng)
    z = chart_of(Z)
    return phi(z) ** power * area_ratio(z, _push(Z, cols), t)


def family_mass(family: str, t: float, n: int, theta: float | None = None) -> float:
    """Total mass of the outer measure."""
    if family == "penrose":
        return 1.0 / math.factorial(2 * n + 1)
    if family == "equatorial":
        theta = equatorial_theta(t, n) if theta is None else theta
        return theta * calibrated_areas(t, n)[3]
    raise ValueError(f"unknown family {family!r}")


def _outer_inner_values(family, n, t, phi, power, rng, count):
    """One member per sample, one point per member; the mean times ``family_mass`` is the IGF side."""
    S = gaussian_sphere(rng, count, 2 * n + 2)
    if family == "penrose":
        P, Q = fiber_basis(S)
        return _fiber_member_values(n, t, phi, power, P, Q, gaussian_sphere(rng, count, 2))
    # sigma is drawn from the FS measure; the g_t measure is that times the volume ratio
    inner = _hyperplane_member_values(n, t, phi, power, S, rng) / math.factorial(2 * n)
    return volume_ratio(chart_of(S), t) / t * inner


def igf_lhs(family: str, phi: ConformalFactor, t: float, n: int, samples: int, seed: int,
            power: float = 1.0, theta: float | None = None, workers: int = 1) -> McEstimate:
    """``int_G (int_{Sigma} phi^power dA_{g_t}) dmu`` by Monte Carlo."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    vals = map_samples(lambda pair: pair, lambda rng, c: _outer_inner_values(family, n, t, phi, power, rng, c),
                       samples, seed, workers)
    mass = family_mass(family, t, n, theta)
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.shape[-1]))
    return McEstimate(float(np.mean(vals)) * mass, se * mass, samples, seed)


def _volume_values(n, t, phi, powers, rng, count):
    z = chart_of(gaussian_sphere(rng, count, 2 * n + 2))
    r = volume_ratio(z, t)
    f = phi(z)
    return np.stack([f ** p * r for p in powers])


def igf_rhs(phi: ConformalFactor, t: float, n: int, samples: int, seed: int, power: float = 1.0,
            workers: int = 1) -> McEstimate:
    """``int phi^power dV_{g_t}``."""
    vals = map_samples(lambda v: v, lambda rng, c: _volume_values(n, t, phi, [power], rng, c)[0],
                       samples, seed, workers)
    scale = 1.0 / math.factorial(2 * n + 1)
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.shape[-1]))
    return McEstimate(float(np.mean(vals)) * scale, se * scale, samples, seed)


def equatorial_theta(t: float, n: int, samples: int | None = None, seed: int = 0, workers: int = 1):
    """Outer density making the hyperplane family an IGF: ``1 / area_hyperplane(t)``.

    With ``samples`` the area is estimated by Monte Carlo and an
    :class:`McEstimate` is returned; otherwise the closed form.
    """
    if samples is None:
        return 1.0 / calibrated_areas(t, n)[2]
    one = ConformalFactor.constant()
    vals = map_samples(lambda v: v,
                       lambda rng, c: _hyperplane_member_values(n, t, one, 1.0, gaussian_sphere(rng, c, 2 * n + 2), rng),
                       samples, seed, workers)
    area = float(np.mean(vals)) / math.factorial(2 * n)
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.shape[-1])) / math.factorial(2 * n)
    return McEstimate(1.0 / area, se / area ** 2, samples, seed)


def _sub_seeds(seed: int, k: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(int(seed)).spawn(k)]


def igf_verify(family: str, phi: ConformalFactor, t: float, n: int = 1, samples: int = 200_000, seed: int = 0,
               theta_samples: int | None = None, nsigma: float = 3.0, workers: int = 1) -> dict:
    """Both sides of the integral geometric formula on independent sample sets."""
    s_l, s_r, s_t = _sub_seeds(seed, 3)
    theta_est = None
    theta = None
    if family == "equatorial" and theta_samples:
        theta_est = equatorial_theta(t, n, theta_samples, s_t, workers)
        theta = theta_est.value
    lhs = igf_lhs(family, phi, t, n, samples, s_l, theta=theta, workers=workers)
    rhs = igf_rhs(phi, t, n, samples, s_r, workers=workers)
    sigma = math.hypot(lhs.std_error, rhs.std_error)
    if theta_est is not None:
        sigma = math.hypot(sigma, lhs.value * theta_est.std_error / theta_est.value)
    resid = abs(lhs.value - rhs.value)
    return {
        "family": family, "n": n, "t": t,
        "lhs": lhs.to_dict(), "rhs": rhs.to_dict(),
        "theta": theta if theta is not None else (equatorial_theta(t, n) if family == "equatorial" else None),
        "theta_std_error": theta_est.std_error if theta_est is not None else None,
        "residual": resid, "combined_sigma": sigma,
        "passed": resid <= nsigma * sigma + 1e-12 * max(1.0, abs(rhs.value)),
    }


def _family_k(family: str, n: int) -> int:
    return 2 if family == "penrose" else 4 * n


def systole_normalized(family: str, t: float, n: int) -> float | None:
    """``Sys_k(g_t) / vol^{k/N}`` when the family realizes the systole, else None."""
    if family == "penrose":
        return sys2_nor_from_areas(t, n) if t <= 1 else None
    return sys4n_nor(t, n)


def member_volumes(family: str, phi: ConformalFactor, t: float, n: int, members: int, inner: int,
                   seed: int) -> list[McEstimate]:
    """``vol_{phi g_t}`` of individual family members."""
    k = _family_k(family, n)
    rng = np.random.default_rng(seed)
    S = gaussian_sphere(rng, members, 2 * n + 2)
    out = []
    for i in range(members):
        Si = np.repeat(S[i:i + 1], inner, axis=0)
        if family == "penrose":
            P, Q = fiber_basis(Si)
            vals = _fiber_member_values(n, t, phi, k / 2, P, Q, gaussian_sphere(rng, inner, 2))
            scale = 1.0
        else:
            vals = _hyperplane_member_values(n, t, phi, k / 2, Si, rng)
            scale = 1.0 / math.factorial(2 * n)
        se = float(np.std(vals, ddof=1) / math.sqrt(inner))
        out.append(McEstimate(float(np.mean(vals)) * scale, se * scale, inner, seed))
    return out


def holder_chain_check(family: str, phi: ConformalFactor, t: float, n: int = 1, samples: int = 200_000,
                       seed: int = 0, members: int = 16, inner: int = 4096, nsigma: float = 3.0,
                       workers: int = 1) -> dict:
    """The Hölder chain behind conformal systolic maximality for ``phi g_t``.

    Dimensions are real: ``N = 4n + 2`` and ``k = 2`` (fibers) or ``k = 4n``
    (hyperplanes).  Reports

    * (i) ``int_G vol(Sigma) dmu = int phi^{k/2} dV <= vol_g^{(N-k)/N} vol_phi^{k/N}``,
    * (ii) ``min_sigma vol(Sigma) / vol_phi^{k/N} <= Sys_k^nor(g_t)`` over sampled members,
    * (iii) equality in (i) when ``phi`` is constant, strictness otherwise.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    N = 4 * n + 2
    k = _family_k(family, n)
    s_l, s_v, s_m = _sub_seeds(seed, 3)
    f = 1.0 / math.factorial(2 * n + 1)
    vol_g = calibrated_areas(t, n)[3]

    lhs = igf_lhs(family, phi, t, n, samples, s_l, power=k / 2, workers=workers)
    vals = map_samples(lambda v: v, lambda rng, c: _volume_values(n, t, phi, [k / 2, N / 2, 0.0], rng, c),
                       samples, s_v, workers)
    mid = McEstimate(float(np.mean(vals[0])) * f, float(np.std(vals[0], ddof=1) / math.sqrt(samples)) * f,
                     samples, s_v)
    vol_phi = McEstimate(float(np.mean(vals[1])) * f, float(np.std(vals[1], ddof=1) / math.sqrt(samples)) * f,
                         samples, s_v)
    # the Hölder gap on one sample set, so that correlated noise cancels
    gap = delta_method(lambda m: (f * m[2]) ** ((N - k) / N) * (f * m[1]) ** (k / N) - f * m[0], [vals], s_v)
    bound = mid.value + gap.value
    igf_sigma = math.hypot(lhs.std_error, mid.std_error)
    floor = 1e-12 * max(1.0, abs(bound))

    report = {
        "family": family, "n": n, "t": t, "k": k, "N": N, "phi_constant": phi.is_constant,
        "igf_side": lhs.to_dict(), "phi_power_integral": mid.to_dict(), "holder_bound": bound,
        "vol_g": vol_g, "vol_phi": vol_phi.to_dict(),
        "igf_residual": abs(lhs.value - mid.value), "igf_sigma": igf_sigma,
        "igf_holds": abs(lhs.value - mid.value) <= nsigma * igf_sigma + floor,
        "holder_gap": gap.value, "holder_gap_sigma": gap.std_error,
        "holder_holds": gap.value >= -nsigma * gap.std_error - floor,
        "holder_strict": gap.value > nsigma * gap.std_error + floor,
        "holder_equality": abs(gap.value) <= nsigma * gap.std_error + floor,
    }
    sys_nor = systole_normalized(family, t, n)
    report["sys_nor_g"] = sys_nor
    if sys_nor is None:
        report["min_normalized_member"] = None
        report["systolic_bound_holds"] = None
    else:
        vols = member_volumes(family, phi, t, n, members, inner, s_m)
        i = int(np.argmin([v.value for v in vols]))
        denom = vol_phi.value ** (k / N)
        norm_min = vols[i].value / denom
        # relative errors of the member volume and of vol_phi^{k/N} combine in quadrature
        rel = math.hypot(vols[i].std_error / vols[i].value, (k / N) * vol_phi.std_error / vol_phi.value)
        sig = norm_min * rel
        report["min_normalized_member"] = norm_min
        report["min_normalized_sigma"] = sig
        report["systolic_bound_holds"] = norm_min <= sys_nor + nsigma * sig + 1e-12 * sys_nor
        report["systolic_equality"] = abs(norm_min - sys_nor) <= nsigma * sig + 1e-12 * sys_nor
    report["passed"] = bool(report["igf_holds"] and report["holder_holds"]
                            and (report["holder_equality"] if phi.is_constant else report["holder_strict"])
                            and report["systolic_bound_holds"] is not False)
    return report
