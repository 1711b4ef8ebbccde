"""The normalized-systole functional on balanced metrics of ``CP^n``.

Forms enter through Hermitian matrices: a (1,1)-form by ``A`` and an
(n-1,n-1)-form ``sigma`` by its dual matrix ``S`` (``sigma ^ alpha_C =
tr(S C) vol``).  Integrals over ``CP^n`` and over the hyperplane
``{Z_n = 0}`` are Monte Carlo averages over one fixed sample set per run, so
finite differences of the estimated functional use common random numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linear_hermitian_algebra import DomainError, dual_matrix, phi_map, psi_map
from .cpn_fields import ProductForm, ScalarField, fs_hermitian, random_scalar_field
from .mc import McEstimate, cpn_sampler, delta_method, hyperplane_sampler, map_samples

HermitianField = Callable[[np.ndarray], np.ndarray]


def fs_field(z):
    return fs_hermitian(z)


def scaled_field(field: HermitianField, lam: float) -> HermitianField:
    return lambda z: lam * field(z)


def kahler_perturbation(f: ScalarField, eps: float = 1.0) -> HermitianField:
    """``Omega + eps i d dbar f``."""
    return lambda z: fs_hermitian(z) + eps * f.ddbar_hermitian(z)


def product_dual(form: ProductForm, z) -> np.ndarray:
    """Dual matrices of an (n-1,n-1) product form at points ``z`` (N, n)."""
    n = z.shape[-1]
    out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
    for w, mats in form.factor_stacks(z):
        if len(mats) != n - 1:
            raise DomainError(f"expected a form of bidegree ({n - 1}, {n - 1})")
        out += w[..., None, None] * dual_matrix(*mats) if n > 1 else w[..., None, None]
    return out


def product_hermitian(form: ProductForm, z) -> np.ndarray:
    n = z.shape[-1]
    out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
    for w, mats in form.factor_stacks(z):
        if len(mats) != 1:
            raise DomainError("expected a (1,1)-form")
        out += w[..., None, None] * mats[0]
    return out


def _herm(S):
    return (S + np.swapaxes(S.conj(), -1, -2)) / 2


def _tr(A, B):
    return np.einsum("...ij,...ji->...", A, B).real


def eta_from_mu(S_mu, A) -> np.ndarray:
    """Hermitian ``B`` of the (1,1)-form solving ``(n-1) eta ^ omega^{n-2} = mu`` pointwise."""
    n = A.shape[-1]
    detA = np.linalg.det(A).real
    Sp = S_mu / (math.factorial(n - 1) * detA[..., None, None])
    tau = _tr(A, Sp) / (n - 1)
    return _herm(tau[..., None, None] * A - A @ Sp @ A)


def eta_wedge_omega_dual(B, A) -> np.ndarray:
    """Dual matrix of ``(n-1) eta ^ omega^{n-2}``."""
    n = A.shape[-1]
    return (n - 1) * dual_matrix(B, *([A] * (n - 2)))


@dataclass
class SampleSets:
    """Chart points on ``CP^n`` and on the hyperplane ``{Z_n = 0}``."""
    n: int
    P: np.ndarray
    H: np.ndarray
    seed: int

    @classmethod
    def draw(cls, n: int, samples: int, seed: int, workers: int = 1) -> "SampleSets":
        sp, sh = np.random.SeedSequence(int(seed)).spawn(2)
        ident = lambda z: z.T
        P = map_samples(ident, cpn_sampler(n), samples, int(sp.generate_state(1)[0]), workers).T
        H = map_samples(ident, hyperplane_sampler(n), samples, int(sh.generate_state(1)[0]), workers).T
        return cls(n, P, H, seed)

    @property
    def samples(self) -> int:
        return self.P.shape[0]


class BalancedProblem:
    """Monte Carlo version of the functional around a fixed positive (1,1)-form.

    ``omega`` is rescaled on the sample set so that the estimate of
    ``int omega^n`` is exactly one.
    """

    def __init__(self, n: int, omega: HermitianField = fs_field, samples: int = 200_000, seed: int = 0,
                 workers: int = 1, normalize: bool = True, sample_sets: SampleSets | None = None):
        if n < 3:
            raise DomainError("the functional is defined here for n >= 3")
        self.n = n
        self.p = (n - 1) / n
        self.seed = seed
        self.samples = sample_sets or SampleSets.draw(n, samples, seed, workers)
        P, H = self.samples.P, self.samples.H
        self.detOmega_P = np.linalg.det(fs_hermitian(P)).real
        self.detOmega_H = np.linalg.det(fs_hermitian(H)[:, : n - 1, : n - 1]).real
        self.A_P = _herm(omega(P))
        self.A_H = _herm(omega(H))
        for A in (self.A_P, self.A_H):
            if np.any(np.linalg.eigvalsh(A)[:, 0] <= 0):
                raise DomainError("omega is not positive at a sampled point")
        self.raw_volume = float(np.mean(np.linalg.det(self.A_P).real / self.detOmega_P))
        self.scale = self.raw_volume ** (-1.0 / n) if normalize else 1.0
        self.A_P = self.scale * self.A_P
        self.A_H = self.scale * self.A_H
        self.S0_P = phi_map(self.A_P)
        self.S0_H = phi_map(self.A_H)

    # per-sample integrands ------------------------------------------------
    def hyperplane_values(self, S_H) -> np.ndarray:
        """Per-sample values whose mean is ``int_{CP^{n-1}} sigma``."""
        n = self.n
        return S_H[:, n - 1, n - 1].real / (math.factorial(n - 1) * self.detOmega_H)

    def top_values(self, density) -> np.ndarray:
        """Per-sample values whose mean is ``int_{CP^n}`` of ``density * vol``."""
        return density / (math.factorial(self.n) * self.detOmega_P)

    def direction(self, mu: ProductForm):
        return product_dual(mu, self.samples.P), product_dual(mu, self.samples.H)

    # functional -------------------------------------------------------------
    def F_values(self, S_P, S_H):
        H = psi_map(S_P)
        a = self.hyperplane_values(S_H)
        b = self.top_values(math.factorial(self.n) * np.linalg.det(H).real)
        return a, b

    def F(self, S_P, S_H) -> McEstimate:
        a, b = self.F_values(S_P, S_H)
        return delta_method(lambda x, y: x[0] / y[0] ** self.p, [a, b], self.seed)

    def F_at(self, mu_P, mu_H, s: float) -> float:
        a, b = self.F_values(self.S0_P + s * mu_P, self.S0_H + s * mu_H)
        return float(np.mean(a) / np.mean(b) ** self.p)

    def first_variation(self, mu: ProductForm | tuple) -> McEstimate:
        mu_P, mu_H = self.direction(mu) if isinstance(mu, ProductForm) else mu
        a1 = self.hyperplane_values(mu_H)
        phi = self.hyperplane_values(self.S0_H)
        c = self.top_values(_tr(mu_P, self.A_P))
        return delta_method(lambda h, p: h[0] - h[1] * p[0], [np.vstack([a1, phi]), c], self.seed)

    def second_variation(self, mu: ProductForm | tuple) -> McEstimate:
        mu_P, mu_H = self.direction(mu) if isinstance(mu, ProductForm) else mu
        n = self.n
        B = eta_from_mu(mu_P, self.A_P)
        a1 = self.hyperplane_values(mu_H)
        phi = self.hyperplane_values(self.S0_H)
        c = self.top_values(_tr(mu_P, self.A_P))
        e = self.top_values(_tr(mu_P, B))

        def formula(h, p):
            a, ph = h
            cc, ee = p
            return 2 * ph * cc ** 2 - 2 * a * cc + ph * (cc ** 2 / (n - 1) - ee)

        return delta_method(formula, [np.vstack([a1, phi]), np.vstack([c, e])], self.seed)

    def fd_first(self, mu, h: float = 1e-3) -> float:
        mu_P, mu_H = self.direction(mu) if isinstance(mu, ProductForm) else mu
        f = lambda s: self.F_at(mu_P, mu_H, s)
        d1 = (f(h) - f(-h)) / (2 * h)
        d2 = (f(h / 2) - f(-h / 2)) / h
        return (4 * d2 - d1) / 3

    def fd_second(self, mu, h: float = 1e-2) -> float:
        mu_P, mu_H = self.direction(mu) if isinstance(mu, ProductForm) else mu
        f = lambda s: self.F_at(mu_P, mu_H, s)
        f0 = f(0.0)
        d1 = (f(h) - 2 * f0 + f(-h)) / h ** 2
        d2 = (f(h / 2) - 2 * f0 + f(-h / 2)) / (h / 2) ** 2
        return (4 * d2 - d1) / 3

    def hessian_kahler(self, eta: HermitianField | ProductForm) -> McEstimate:
        """``(n-1) [ (int eta ^ omega^{n-1})^2 - int eta ^ eta ^ omega^{n-2} ]``."""
        n = self.n
        z = self.samples.P
        B = product_hermitian(eta, z) if isinstance(eta, ProductForm) else eta(z)
        lin = self.top_values(_tr(self.S0_P, B))
        quad = self.top_values(_tr(dual_matrix(B, *([self.A_P] * (n - 2))), B))
        return delta_method(lambda p: (n - 1) * (p[0] ** 2 - p[1]), [np.vstack([lin, quad])], self.seed)

    def hessian_from_mu(self, mu: ProductForm) -> McEstimate:
        mu_P, _ = self.direction(mu)
        B = eta_from_mu(mu_P, self.A_P)
        return self.hessian_kahler(lambda z: B)


def F_eval(n: int, sigma: Callable[[np.ndarray], np.ndarray], samples: int, seed: int,
           workers: int = 1) -> McEstimate:
    """``int_{CP^{n-1}} sigma / (int_{CP^n} sigma ^ Psi(sigma))^{(n-1)/n}``; ``sigma`` maps points to dual matrices."""
    prob = BalancedProblem(n, fs_field, samples, seed, workers, normalize=False)
    return prob.F(_herm(sigma(prob.samples.P)), _herm(sigma(prob.samples.H)))


def sys_nor_balanced(n: int, omega: HermitianField, samples: int, seed: int, workers: int = 1) -> McEstimate:
    """``(n!)^{(n-1)/n} / (n-1)! * int_{CP^{n-1}} omega^{n-1} / (int omega^n)^{(n-1)/n}``."""
    prob = BalancedProblem(n, omega, samples, seed, workers, normalize=False)
    const = math.factorial(n) ** prob.p / math.factorial(n - 1)
    a = prob.hyperplane_values(prob.S0_H)
    b = prob.top_values(math.factorial(n) * np.linalg.det(prob.A_P).real)
    return delta_method(lambda x, y: const * x[0] / y[0] ** prob.p, [a, b], seed)


def sys_nor_balanced_closed_form(n: int) -> float:
    """Value of the normalized systole at the Fubini-Study form."""
    return math.factorial(n) ** ((n - 1) / n) / math.factorial(n - 1)


# -- admissible variation directions ----------------------------------------

def kahler_direction(f: ScalarField, n: int, c: float = 1.0) -> ProductForm:
    """``(n-1) c i d dbar f ^ Omega^{n-2}``, the image of ``c i d dbar f`` under ``d Phi``."""
    return ProductForm.ddbar(f, c * (n - 1)).wedge(ProductForm.omega_power(f.m, n - 2))


def mixed_direction(f: ScalarField, h: ScalarField, n: int, c1: float, c2: float, c3: float) -> ProductForm:
    """``c1 Omega^{n-1} + c2 i d dbar f ^ Omega^{n-2} + c3 i d dbar f ^ i d dbar h ^ Omega^{n-3}``."""
    m = f.m
    out = ProductForm.omega_power(m, n - 1, c1)
    out = out + ProductForm.ddbar(f, c2).wedge(ProductForm.omega_power(m, n - 2))
    if n >= 3:
        out = out + ProductForm.ddbar(f, c3).wedge(ProductForm.ddbar(h)).wedge(ProductForm.omega_power(m, n - 3))
    return out


def zero_direction(n: int) -> ProductForm:
    return ProductForm(n)


def random_mixed_direction(n: int, rng: np.random.Generator, scale: float = 0.3) -> ProductForm:
    f = random_scalar_field(n, rng, amplitude=1.0)
    h = random_scalar_field(n, rng, amplitude=1.0)
    c1, c2, c3 = scale * rng.normal(size=3)
    return mixed_direction(f, h, n, c1, c2, c3)


def default_direction_library(n: int, seed: int = 0, kahler: int = 2, mixed: int = 2) -> list[tuple[str, str, ProductForm]]:
    """``(name, kind, form)`` triples: the zero direction, Kähler directions and mixed ones."""
    rng = np.random.default_rng(seed)
    lib = [("zero", "zero", zero_direction(n)), ("omega_power", "kahler", ProductForm.omega_power(n, n - 1))]
    for i in range(kahler):
        lib.append((f"kahler_{i}", "kahler", kahler_direction(random_scalar_field(n, rng), n, 0.3)))
    for i in range(mixed):
        lib.append((f"mixed_{i}", "mixed", random_mixed_direction(n, rng)))
    return lib
