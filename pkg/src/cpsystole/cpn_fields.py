"""Affine-chart geometry of complex projective space.

A point of ``CP^m`` is represented by ``z`` in the chart ``Z = (1, z)``.  Real
chart coordinates are ordered ``(x1, y1, ..., xm, ym)`` and the complex
structure is multiplication by ``i``.  The Fubini-Study form is normalized so
that a projective line has area one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .linear_hermitian_algebra import (
    DomainError,
    GradedForm,
    LinearComplexStructure,
    complex_to_real_linear,
    complex_vector,
    dual_lefschetz,
    hermitian_to_form,
    hermitian_to_gram,
    hodge_star,
    pq_project,
    real_vector,
    standard_complex_structure,
    wedge,
    wedge_power,
)

CHART_RADIUS = 1e3


@dataclass(frozen=True)
class ChartPoint:
    z: np.ndarray
    radius: float = CHART_RADIUS

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if z.ndim != 1:
            raise ValueError("chart point must be a 1-d complex vector")
        if not np.all(np.isfinite(z)):
            raise DomainError("chart point has non-finite entries")
        if np.linalg.norm(z) > self.radius:
            raise DomainError(f"|z| = {np.linalg.norm(z):.3g} exceeds the chart radius {self.radius}")
        object.__setattr__(self, "z", z)

    @property
    def m(self) -> int:
        return self.z.shape[0]

    @property
    def real(self) -> np.ndarray:
        return real_vector(self.z)

    @classmethod
    def from_real(cls, x) -> "ChartPoint":
        return cls(complex_vector(np.asarray(x, dtype=float)))

    def homogeneous(self) -> np.ndarray:
        return np.concatenate([[1.0 + 0j], self.z])


def _as_real(p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.real
    p = np.asarray(p)
    if np.iscomplexobj(p):
        return ChartPoint(p).real
    return p.astype(float)


def _as_complex(p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.z
    p = np.asarray(p)
    return p if np.iscomplexobj(p) else complex_vector(p)


def chart_of(Z) -> np.ndarray:
    """Chart coordinates ``Z[1:] / Z[0]`` of homogeneous vectors (last axis)."""
    Z = np.asarray(Z)
    return Z[..., 1:] / Z[..., :1]


def chart_differential(Z, xi) -> np.ndarray:
    """Push a homogeneous tangent vector ``xi`` at ``Z`` to the chart."""
    Z, xi = np.asarray(Z), np.asarray(xi)
    z0 = Z[..., :1]
    return (xi[..., 1:] * z0 - Z[..., 1:] * xi[..., :1]) / z0 ** 2


# -- Fubini-Study ---------------------------------------------------------

def fs_hermitian(z) -> np.ndarray:
    """Hermitian matrix of the Fubini-Study form at chart points ``z`` (..., m)."""
    z = np.asarray(z, dtype=complex)
    m = z.shape[-1]
    N = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    outer = z[..., :, None] * z[..., None, :].conj()
    eye = np.eye(m)
    return (N[..., None, None] * eye - outer) / (math.pi * N[..., None, None] ** 2)


def fs_form_at(z) -> GradedForm:
    """Fubini-Study Kähler form at a chart point."""
    return hermitian_to_form(fs_hermitian(_as_complex(z)))


def fs_homogeneous_hermitian(Z, X, Y) -> np.ndarray:
    """Fubini-Study Hermitian product of homogeneous tangent vectors at ``Z``."""
    Z, X, Y = (np.asarray(a, dtype=complex) for a in (Z, X, Y))
    n2 = np.sum(np.abs(Z) ** 2, axis=-1)
    xy = np.sum(X.conj() * Y, axis=-1)
    xz = np.sum(X.conj() * Z, axis=-1)
    zy = np.sum(Z.conj() * Y, axis=-1)
    return (n2 * xy - xz * zy) / (math.pi * n2 ** 2)


# -- Penrose splitting ----------------------------------------------------

def quaternionic_j(Z) -> np.ndarray:
    """``j(z, w) = (-conj(w), conj(z))`` on ``C^{n+1} x C^{n+1}``."""
    Z = np.asarray(Z, dtype=complex)
    h = Z.shape[-1] // 2
    return np.concatenate([-Z[..., h:].conj(), Z[..., :h].conj()], axis=-1)


def vertical_vector(z) -> np.ndarray:
    """Chart vector spanning the complex vertical line of the Penrose fibration."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] % 2 == 0:
        raise ValueError("the Penrose fibration lives on CP^{2n+1}")
    Z = np.concatenate([np.ones(z.shape[:-1] + (1,), dtype=complex), z], axis=-1)
    return chart_differential(Z, quaternionic_j(Z))


def vertical_projector(z) -> np.ndarray:
    """Complex matrix of the FS-orthogonal projection onto the vertical line."""
    z = np.asarray(z, dtype=complex)
    A = fs_hermitian(z)
    v = vertical_vector(z)
    Av = np.einsum("...jk,...k->...j", A, v)
    vAv = np.sum(v.conj() * Av, axis=-1).real
    return v[..., :, None] * Av[..., None, :].conj() / vAv[..., None, None]


def penrose_split_at(p) -> tuple[np.ndarray, np.ndarray]:
    """Real projectors ``(P0, P1)`` onto the vertical and horizontal spaces."""
    z = _as_complex(p)
    if z.shape[-1] % 2 == 0 or z.shape[-1] < 3:
        raise ValueError("need a point of CP^{2n+1} with n >= 1")
    P0 = complex_to_real_linear(vertical_projector(z))
    return P0, np.eye(P0.shape[-1]) - P0


def vertical_hermitian(z) -> np.ndarray:
    """Hermitian matrix of ``Omega_0``, the vertical part of the FS form."""
    z = np.asarray(z, dtype=complex)
    A = fs_hermitian(z)
    v = vertical_vector(z)
    Av = np.einsum("...jk,...k->...j", A, v)
    vAv = np.sum(v.conj() * Av, axis=-1).real
    return Av[..., :, None] * Av[..., None, :].conj() / vAv[..., None, None]


def gt_hermitian(z, t: float) -> np.ndarray:
    """Hermitian matrix of ``omega_t = t Omega_0 + Omega_1``."""
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    z = np.asarray(z, dtype=complex)
    return fs_hermitian(z) + (t - 1.0) * vertical_hermitian(z)


def gt_metric_at(z, t: float) -> np.ndarray:
    return hermitian_to_gram(gt_hermitian(_as_complex(z), t))


def omega_t_at(z, t: float) -> GradedForm:
    return hermitian_to_form(gt_hermitian(_as_complex(z), t))


def omega_split_at(z) -> tuple[GradedForm, GradedForm]:
    z = _as_complex(z)
    A0 = vertical_hermitian(z)
    return hermitian_to_form(A0), hermitian_to_form(fs_hermitian(z) - A0)


# -- metric fields --------------------------------------------------------

class MetricField:
    """Hermitian metric on a chart of ``CP^m`` compatible with the canonical J."""

    m: int

    def hermitian(self, z) -> np.ndarray:
        raise NotImplementedError

    def gram(self, x) -> np.ndarray:
        return hermitian_to_gram(self.hermitian(_as_complex(x)))

    def omega(self, x) -> GradedForm:
        return hermitian_to_form(self.hermitian(_as_complex(x)))

    def complex_structure(self, x) -> LinearComplexStructure:
        return LinearComplexStructure(standard_complex_structure(self.m), self.gram(x), tol=1e-9)


@dataclass(frozen=True)
class FubiniStudy(MetricField):
    m: int

    def hermitian(self, z):
        return fs_hermitian(z)


@dataclass(frozen=True)
class Homogeneous(MetricField):
    """``g_t = t g_0 + g_1`` on ``CP^{2n+1}``."""
    n: int
    t: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.t <= 0:
            raise DomainError(f"t must be positive, got {self.t}")

    @property
    def m(self) -> int:
        return 2 * self.n + 1

    def hermitian(self, z):
        return gt_hermitian(z, self.t)


@dataclass(frozen=True)
class Conformal(MetricField):
    base: MetricField
    factor: "ScalarField"

    @property
    def m(self) -> int:
        return self.base.m

    def hermitian(self, z):
        z = np.asarray(z, dtype=complex)
        return self.factor.value(z)[..., None, None] * self.base.hermitian(z)


# -- scalar generators ----------------------------------------------------

def _monomial(z, powers):
    out = np.ones(z.shape[:-1], dtype=complex)
    for j, p in enumerate(powers):
        if p:
            out = out * z[..., j] ** p
    return out


def _monomial_grad(z, powers):
    """``d/dz_j z^powers`` for each j, stacked on the last axis."""
    cols = []
    for j, p in enumerate(powers):
        if p == 0:
            cols.append(np.zeros(z.shape[:-1], dtype=complex))
            continue
        q = list(powers)
        q[j] -= 1
        cols.append(p * _monomial(z, q))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class Monomial:
    """``Re(coeff z^alpha conj(z)^beta / (1 + |z|^2)^{|alpha|})`` with ``|beta| <= |alpha|``."""
    alpha: tuple
    beta: tuple
    coeff: complex = 1.0

    def __post_init__(self):
        a, b = tuple(int(x) for x in self.alpha), tuple(int(x) for x in self.beta)
        if len(a) != len(b) or min(a + b, default=0) < 0:
            raise ValueError("alpha and beta must be non-negative of equal length")
        if sum(b) > sum(a):
            raise ValueError("need |beta| <= |alpha| for a function smooth on CP^m")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "coeff", complex(self.coeff))

    @property
    def m(self) -> int:
        return len(self.alpha)

    def _parts(self, z):
        k = sum(self.alpha)
        N = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
        P = _monomial(z, self.alpha)
        Q = _monomial(z.conj(), self.beta)
        return k, N, P, Q

    def complex_value(self, z):
        k, N, P, Q = self._parts(z)
        return self.coeff * P * Q / N ** k

    def value(self, z):
        return self.complex_value(np.asarray(z, dtype=complex)).real

    def dz(self, z):
        """``d f / d z_j`` of the real function."""
        z = np.asarray(z, dtype=complex)
        k, N, P, Q = self._parts(z)
        c = self.coeff
        Nk, Nk1 = N ** (-k), N ** (-k - 1)
        dP = _monomial_grad(z, self.alpha)
        dQ = _monomial_grad(z.conj(), self.beta)  # derivative in conj(z)
        dg = c * (dP * (Q * Nk)[..., None] - k * (P * Q * Nk1)[..., None] * z.conj())
        dbg = c * (dQ * (P * Nk)[..., None] - k * (P * Q * Nk1)[..., None] * z)
        return (dg + dbg.conj()) / 2

    def ddbar(self, z):
        """Complex Hessian ``d^2 f / dz_j dconj(z)_k`` of the real function."""
        z = np.asarray(z, dtype=complex)
        k, N, P, Q = self._parts(z)
        c = self.coeff
        dP = _monomial_grad(z, self.alpha)
        dQ = _monomial_grad(z.conj(), self.beta)
        zb = z.conj()
        m = z.shape[-1]
        e = lambda a, b: a[..., :, None] * b[..., None, :]
        Nk, Nk1, Nk2 = (N ** (-k))[..., None, None], (N ** (-k - 1))[..., None, None], (N ** (-k - 2))[..., None, None]
        PQ = (P * Q)[..., None, None]
        Hg = (e(dP, dQ) * Nk
              - k * e(dP, z) * Q[..., None, None] * Nk1
              - k * e(zb, dQ) * P[..., None, None] * Nk1
              + k * (k + 1) * PQ * e(zb, z) * Nk2
              - k * PQ * Nk1 * np.eye(m))
        Hg = c * Hg
        return (Hg + np.swapaxes(Hg, -1, -2).conj()) / 2

    def to_json_dict(self) -> dict:
        return {"alpha": list(self.alpha), "beta": list(self.beta),
                "coeff": {"re": self.coeff.real, "im": self.coeff.imag}}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "Monomial":
        c = d.get("coeff", 1.0)
        if isinstance(c, Mapping):
            c = complex(c.get("re", 0.0), c.get("im", 0.0))
        return cls(tuple(d["alpha"]), tuple(d["beta"]), c)


@dataclass(frozen=True)
class ScalarField:
    """``constant + sum of monomial generators``."""
    m: int
    terms: tuple = ()
    constant: float = 0.0

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape[:-1], float(self.constant))
        for t in self.terms:
            out = out + t.value(z)
        return out

    def dz(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for t in self.terms:
            out = out + t.dz(z)
        return out

    def ddbar(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (z.shape[-1],), dtype=complex)
        for t in self.terms:
            out = out + t.ddbar(z)
        return out

    def ddbar_hermitian(self, z):
        """Hermitian matrix of the real (1,1)-form ``i d dbar f``."""
        return 2.0 * np.swapaxes(self.ddbar(z), -1, -2)

    def differential(self, z) -> np.ndarray:
        """Real covector ``df`` in real chart coordinates."""
        g = self.dz(z)
        out = np.empty(g.shape[:-1] + (2 * g.shape[-1],))
        out[..., 0::2] = 2 * g.real
        out[..., 1::2] = -2 * g.imag
        return out

    def amplitude_bound(self) -> float:
        """Upper bound for ``|f - constant|`` on all of ``CP^m``."""
        return float(sum(abs(t.coeff) for t in self.terms))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.m, self.terms + other.terms, self.constant + other.constant)
        return ScalarField(self.m, self.terms, self.constant + float(other))

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.m, tuple(Monomial(t.alpha, t.beta, c * t.coeff) for t in self.terms),
                           c * self.constant)

    def to_json_dict(self) -> dict:
        return {"m": self.m, "constant": self.constant,
                "terms": [t.to_json_dict() for t in self.terms]}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "ScalarField":
        terms = tuple(Monomial.from_json_dict(t) for t in d.get("terms", []))
        m = int(d.get("m", terms[0].m if terms else 0))
        return cls(m, terms, float(d.get("constant", 0.0)))


def random_scalar_field(m: int, rng: np.random.Generator, n_terms: int = 2,
                        max_degree: int = 2, amplitude: float = 1.0) -> ScalarField:
    """Random generator combination with ``|f| <= amplitude`` on ``CP^m``."""
    terms = []
    for _ in range(n_terms):
        k = int(rng.integers(1, max_degree + 1))
        a = rng.multinomial(k, np.ones(m) / m)
        kb = int(rng.integers(0, k + 1))
        b = rng.multinomial(kb, np.ones(m) / m)
        c = rng.normal() + 1j * rng.normal()
        terms.append(Monomial(tuple(a), tuple(b), c))
    total = sum(abs(t.coeff) for t in terms)
    terms = [Monomial(t.alpha, t.beta, amplitude * t.coeff / total) for t in terms]
    return ScalarField(m, tuple(terms))


# -- form fields built from Hermitian factors -----------------------------

@dataclass(frozen=True)
class ProductForm:
    """``sum_i c_i f_i alpha_{A_i1} ^ ... ^ alpha_{A_ik}`` with Hermitian factor fields.

    Each term is ``(coeff, scalar or None, (factor, ...))``; a factor is the
    string ``"omega"`` (Fubini-Study), a ``ScalarField`` standing for
    ``i d dbar f``, or a callable returning Hermitian matrices.
    """
    m: int
    terms: tuple = ()

    @property
    def bidegree(self) -> int:
        degs = {len(t[2]) for t in self.terms}
        if len(degs) > 1:
            raise DomainError("mixed degrees in product form")
        return degs.pop() if degs else 0

    @staticmethod
    def _factor(f, z):
        if isinstance(f, str) and f == "omega":
            return fs_hermitian(z)
        if isinstance(f, ScalarField):
            return f.ddbar_hermitian(z)
        return f(z)

    def factor_stacks(self, z):
        """Yield ``(weights, [A_1, ..., A_k])`` per term, batched over ``z``."""
        z = np.asarray(z, dtype=complex)
        for c, s, factors in self.terms:
            w = np.full(z.shape[:-1], complex(c))
            if s is not None:
                w = w * s.value(z)
            yield w, [self._factor(f, z) for f in factors]

    def at(self, x) -> GradedForm:
        z = _as_complex(x)
        out = GradedForm(2 * self.m)
        for w, mats in self.factor_stacks(z):
            f = GradedForm.scalar(2 * self.m, complex(w))
            for A in mats:
                f = wedge(f, hermitian_to_form(A))
            out = out + f
        return out

    __call__ = at

    def __add__(self, other: "ProductForm") -> "ProductForm":
        return ProductForm(self.m, self.terms + other.terms)

    def scaled(self, c: float) -> "ProductForm":
        return ProductForm(self.m, tuple((c * t[0], t[1], t[2]) for t in self.terms))

    def wedge(self, other: "ProductForm") -> "ProductForm":
        out = []
        for c1, s1, f1 in self.terms:
            for c2, s2, f2 in other.terms:
                if s1 is not None and s2 is not None:
                    raise DomainError("products of two scalar prefactors are not supported")
                out.append((c1 * c2, s1 if s1 is not None else s2, f1 + f2))
        return ProductForm(self.m, tuple(out))

    @classmethod
    def omega_power(cls, m: int, k: int, c: float = 1.0) -> "ProductForm":
        return cls(m, ((c, None, ("omega",) * k),))

    @classmethod
    def ddbar(cls, f: ScalarField, c: float = 1.0) -> "ProductForm":
        return cls(f.m, ((c, None, (f,)),))

    @classmethod
    def hermitian_field(cls, m: int, fn: Callable, c: float = 1.0) -> "ProductForm":
        return cls(m, ((c, None, (fn,)),))

    def times_scalar(self, f: ScalarField) -> "ProductForm":
        return ProductForm(self.m, tuple((c, f, fs) for c, s, fs in self.terms if s is None))


def _parse_structure(node, gens: Sequence[ScalarField], m: int) -> ProductForm:
    op = node["op"]
    if op == "omega_pow":
        return ProductForm.omega_power(m, int(node["k"]))
    if op == "ddbar":
        return ProductForm.ddbar(gens[int(node["gen"])])
    if op == "wedge":
        args = [_parse_structure(a, gens, m) for a in node["args"]]
        out = args[0]
        for a in args[1:]:
            out = out.wedge(a)
        return out
    if op == "scale":
        return _parse_structure(node["arg"], gens, m).scaled(float(node["c"]))
    if op == "sum":
        args = [_parse_structure(a, gens, m) for a in node["args"]]
        out = ProductForm(m)
        for a in args:
            out = out + a
        return out
    if op == "zero":
        return ProductForm(m)
    raise ValueError(f"unknown structure op {op!r}")


def form_from_json(desc: Mapping) -> ProductForm:
    """Build a form from ``{"m", "generators", "structure"}``.

    Each generator is a monomial ``{"alpha", "beta", "coeff"}`` or a list of
    them; ``structure`` is an expression tree over ``ddbar``, ``wedge``,
    ``omega_pow``, ``scale``, ``sum`` and ``zero``.
    """
    m = int(desc["m"])
    gens = []
    for g in desc.get("generators", []):
        monos = g if isinstance(g, list) else [g]
        gens.append(ScalarField(m, tuple(Monomial.from_json_dict(t) for t in monos)))
    for g in gens:
        for t in g.terms:
            if t.m != m:
                raise ValueError("generator length does not match m")
    return _parse_structure(desc["structure"], gens, m)


# -- numerical differentiation --------------------------------------------

FormField = Callable[[np.ndarray], GradedForm]


def _central(F, x, i, h):
    e = np.zeros_like(x)
    e[i] = h
    return (F(x + e) - F(x - e)) / (2 * h)


def partial_derivative(F, x, i: int, h: float = 1e-4, richardson: bool = True):
    """Central difference of a form- or array-valued function along coordinate ``i``."""
    d1 = _central(F, x, i, h)
    if not richardson:
        return d1
    d2 = _central(F, x, i, h / 2)
    return (d2 * 4 - d1) * (1.0 / 3.0)


def exterior_derivative_at(F: FormField, z, h: float = 1e-4, richardson: bool = True) -> GradedForm:
    """``dF`` at a chart point by central differences of the coefficients."""
    if not (1e-6 <= h <= 1e-3):
        raise ValueError("step h must lie in [1e-6, 1e-3]")
    x = _as_real(z)
    if np.linalg.norm(x) + h > CHART_RADIUS:
        raise DomainError("finite-difference stencil leaves the chart")
    dim = x.shape[0]
    out = GradedForm(dim)
    for i in range(dim):
        out = out + wedge(GradedForm.basis(dim, [i + 1]), partial_derivative(lambda y: F(y), x, i, h, richardson))
    return out


def _frame(metric: MetricField, x):
    return metric.complex_structure(x).frame()


def star_field(F: FormField, metric: MetricField) -> FormField:
    return lambda x: hodge_star(F(x), _frame(metric, x))


def codifferential_at(F: FormField, z, metric: MetricField, h: float = 1e-4,
                      richardson: bool = True) -> GradedForm:
    """``delta F = - * d *`` (even real dimension), the formal adjoint of ``d``."""
    x = _as_real(z)
    dstar = exterior_derivative_at(star_field(F, metric), x, h, richardson)
    return -hodge_star(dstar, _frame(metric, x))


def form_inner_at(a: GradedForm, b: GradedForm, metric: MetricField, x) -> complex:
    from .linear_hermitian_algebra import inner
    return inner(a, b, _frame(metric, x))


def volume_density(metric: MetricField, x) -> float:
    """``dV_g / (dx1 dy1 ... )`` at a chart point."""
    return float(np.sqrt(np.linalg.det(metric.gram(x))))


# -- connection and Gray tensors ------------------------------------------

def christoffel(metric: MetricField, z, h: float = 1e-4) -> np.ndarray:
    """``Gamma[k, i, j]`` of the Levi-Civita connection by differencing the Gram matrix."""
    x = _as_real(z)
    G = metric.gram(x)
    dim = x.shape[0]
    dG = np.stack([partial_derivative(metric.gram, x, l, h) for l in range(dim)])  # dG[l, i, j]
    # lower[i, j, l] = (d_i G_jl + d_j G_il - d_l G_ij) / 2
    lower = 0.5 * (dG + np.transpose(dG, (1, 0, 2)) - np.transpose(dG, (1, 2, 0)))
    return np.einsum("kl,ijl->kij", np.linalg.inv(G), lower)


@dataclass
class TensorSample:
    point: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    K: np.ndarray
    H: np.ndarray
    S: np.ndarray
    N: np.ndarray
    gamma: np.ndarray = field(repr=False)

    def lemma_residual(self, J: np.ndarray, KYX: np.ndarray, SJXY: np.ndarray) -> float:
        return float(np.max(np.abs(self.K + KYX + 2 * J @ SJXY + J @ self.N)))


class GrayCalculator:
    """``nabla J`` and the derived tensors at one chart point."""

    def __init__(self, metric: MetricField, z, h: float = 1e-4):
        self.metric = metric
        self.x = _as_real(z)
        self.h = h
        self.dim = self.x.shape[0]
        self.J = standard_complex_structure(self.dim // 2)
        self.G = metric.gram(self.x)
        self.gamma = christoffel(metric, self.x, h)

    def Gamma(self, X, Y):
        return np.einsum("kij,i,j->k", self.gamma, X, Y)

    def nablaJ(self, X, Y):
        """``(nabla_X J) Y``."""
        return self.Gamma(X, self.J @ Y) - self.J @ self.Gamma(X, Y)

    def K(self, X, Y):
        J = self.J
        return self.nablaJ(X, Y) + self.nablaJ(J @ X, J @ Y)

    def H(self, X, Y):
        J = self.J
        return self.nablaJ(X, Y) - self.nablaJ(J @ X, J @ Y)

    def S(self, X, Y):
        return self.nablaJ(X, Y) - self.nablaJ(Y, X)

    def N(self, X, Y):
        J = self.J
        return (J @ self.nablaJ(X, Y) - J @ self.nablaJ(Y, X)
                - self.nablaJ(J @ X, Y) + self.nablaJ(J @ Y, X))

    def g(self, X, Y):
        return float(X @ self.G @ Y)

    def nabla_omega(self, X, Y, Z):
        """``(nabla_X omega)(Y, Z)`` computed from the coefficients of ``omega``."""
        M = lambda x: self.J.T @ self.metric.gram(x)
        dM = sum(X[i] * partial_derivative(M, self.x, i, self.h) for i in range(self.dim) if X[i] != 0)
        M0 = M(self.x)
        return float(Y @ dM @ Z - self.Gamma(X, Y) @ M0 @ Z - Y @ M0 @ self.Gamma(X, Z))

    def sample(self, X, Y) -> TensorSample:
        return TensorSample(self.x, X, Y, self.K(X, Y), self.H(X, Y), self.S(X, Y), self.N(X, Y), self.gamma)

    def frame(self) -> np.ndarray:
        return LinearComplexStructure(self.J, self.G, tol=1e-9).frame().vectors

    def k_trace(self) -> np.ndarray:
        """Covector ``v -> sum_i g(K(e_i, e_i), v)`` over a Hermitian frame."""
        F = self.frame()
        tr = sum(self.K(F[:, 2 * i], F[:, 2 * i]) for i in range(self.dim // 2))
        return self.G @ tr


def gray_tensors_at(metric: MetricField, z, X, Y, h: float = 1e-4) -> TensorSample:
    return GrayCalculator(metric, z, h).sample(np.asarray(X, float), np.asarray(Y, float))


def check_basic_identities_at(metric: MetricField, z, X, Y, Z, h: float = 1e-4,
                              antisym_tol: float = 1e-6) -> dict:
    """Residuals of the basic almost-Hermitian identities at one point."""
    c = GrayCalculator(metric, z, h)
    J = c.J
    X, Y, Z = (np.asarray(v, float) for v in (X, Y, Z))
    no = c.nabla_omega
    res = {
        "nabla_omega_vs_nablaJ": abs(no(X, Y, Z) - c.g(c.nablaJ(X, Y), Z)),
        "nabla_omega_antisymmetric": abs(no(X, Y, Z) + no(X, Z, Y)),
        "nabla_omega_J_shift": abs(no(X, J @ Y, Z) - no(X, Y, J @ Z)),
        "nabla_omega_JY_Y": abs(no(X, J @ Y, Y)),
        "nijenhuis_J_linear": float(np.max(np.abs(c.N(J @ X, Y) + J @ c.N(X, Y)))),
        "K_symmetrization_lemma": float(np.max(np.abs(
            c.K(X, Y) + c.K(Y, X) + 2 * J @ c.S(J @ X, Y) + J @ c.N(X, Y)))),
    }
    basis = np.eye(c.dim)
    k_sym = max(float(np.max(np.abs(c.K(basis[i], basis[j]) + c.K(basis[j], basis[i]))))
                for i in range(c.dim) for j in range(i, c.dim))
    res["K_symmetric_part"] = k_sym
    if k_sym < antisym_tol:
        res["antisymmetric_K_JX"] = float(np.max(np.abs(
            c.nablaJ(J @ X, Y) - c.nablaJ(Y, J @ X) + 0.5 * c.N(X, Y))))
        res["antisymmetric_K_X"] = float(np.max(np.abs(
            c.nablaJ(X, Y) - c.nablaJ(Y, X) + 0.5 * J @ c.N(X, Y))))
    return res


def codiff_via_K(metric: MetricField, z, v, h: float = 1e-4) -> float:
    """``sum_i g(K(e_i, e_i), v)`` over a Hermitian frame ``{e_i, J e_i}``."""
    return float(GrayCalculator(metric, z, h).k_trace() @ np.asarray(v, float))


def codifferential_of_omega(metric: MetricField, z, h: float = 1e-4) -> np.ndarray:
    """Real covector ``delta omega`` at ``z`` via ``- * d *``."""
    d = codifferential_at(metric.omega, z, metric, h)
    return d.vector(1).real


# -- almost complex submanifolds ------------------------------------------

def _tangent_frame(G, J, W):
    """Orthonormal real frame ``e_1, J e_1, ...`` of the complex span of ``W``."""
    W = np.atleast_2d(np.asarray(W, dtype=complex).T).T
    cols = []
    for w in W.T:
        v = real_vector(w)
        for _ in range(2):
            for u in cols:
                v = v - (u @ G @ v) * u
        nrm = math.sqrt(v @ G @ v)
        if nrm < 1e-10:
            raise DomainError("degenerate tangent vectors")
        e = v / nrm
        cols.extend([e, J @ e])
    return np.column_stack(cols)


def mean_curvature_ac(metric: MetricField, z, W, v, h: float = 1e-4) -> float:
    """``-sum_j g(K(e_j, e_j), v)`` over a Hermitian frame of the complex span of ``W``."""
    c = GrayCalculator(metric, z, h)
    E = _tangent_frame(c.G, c.J, W)
    if np.max(np.abs(_project_out(c.G, E, c.J @ E))) > 1e-8:
        raise DomainError("tangent space is not J-invariant")
    v = np.asarray(v, float)
    return -sum(c.g(c.K(E[:, 2 * j], E[:, 2 * j]), v) for j in range(E.shape[1] // 2))


def _project_out(G, E, V):
    """Component of columns of ``V`` orthogonal to the G-orthonormal columns of ``E``."""
    return V - E @ (E.T @ G @ V)


def mean_curvature_vector(metric: MetricField, z, W, h: float = 1e-4) -> np.ndarray:
    """Mean curvature (trace of the second fundamental form) of the affine complex
    subspace ``z + span_C(W)``, using that its chart parameterization is linear."""
    c = GrayCalculator(metric, z, h)
    E = _tangent_frame(c.G, c.J, W)
    acc = sum(c.Gamma(E[:, a], E[:, a]) for a in range(E.shape[1]))
    return _project_out(c.G, E, acc[:, None])[:, 0]


def normal_basis(metric: MetricField, z, W) -> np.ndarray:
    x = _as_real(z)
    G = metric.gram(x)
    E = _tangent_frame(G, standard_complex_structure(x.shape[0] // 2), W)
    N = _project_out(G, E, np.eye(x.shape[0]))
    u, s, _ = np.linalg.svd(N)
    return u[:, : x.shape[0] - E.shape[1]]


# -- balancedness and Kähler identity -------------------------------------

def verify_balanced(t: float, n: int, points: int = 100, h: float = 1e-4, seed: int = 0,
                    z_points=None) -> dict:
    """Finite-difference residuals of ``d omega_t^{2n}`` and of the K-trace."""
    from .mc import sample_cpn
    if n < 1 or points < 1:
        raise ValueError("need n >= 1 and points >= 1")
    metric = Homogeneous(n, t)
    m = metric.m
    if z_points is None:
        z_points = sample_cpn(m, points, np.random.default_rng(seed), radius=CHART_RADIUS)
    power = lambda x: wedge_power(hermitian_to_form(gt_hermitian(_as_complex(x), t)), 2 * n)
    d_res, k_res = [], []
    for z in z_points:
        d = exterior_derivative_at(power, z, h)
        d_res.append(d.max_abs())
        k_res.append(float(np.max(np.abs(GrayCalculator(metric, z, h).k_trace()))))
    return {"t": t, "n": n, "points": len(d_res),
            "max_d_power_residual": float(max(d_res)),
            "max_k_trace_residual": float(max(k_res))}


def kahler_identity_check(z, F: FormField, pq: tuple[int, int], h: float = 1e-4,
                          type_tol: float = 1e-9) -> dict:
    """Compare ``[Lambda, d] F`` with ``-delta^c F`` for the Fubini-Study metric."""
    x = _as_real(z)
    m = x.shape[0] // 2
    metric = FubiniStudy(m)
    J = standard_complex_structure(m)
    p, q = pq
    F0 = F(x)
    if (F0 - pq_project(F0, J, p, q)).max_abs() > type_tol * max(1.0, F0.max_abs()):
        raise DomainError(f"input is not of pure type ({p}, {q})")
    cs = lambda y: metric.complex_structure(y)
    lam = lambda a, y: dual_lefschetz(a, cs(y))
    lhs = lam(exterior_derivative_at(F, x, h), x) - exterior_derivative_at(lambda y: lam(F(y), y), x, h)
    starF = star_field(F, metric)
    dstar = exterior_derivative_at(starF, x, h)
    frame = _frame(metric, x)
    # *F has type (m - q, m - p)
    dbar_star = pq_project(dstar, J, m - q, m - p + 1)
    d_star = pq_project(dstar, J, m - q + 1, m - p)
    del_adj = -hodge_star(dbar_star, frame) if dbar_star.degrees() else GradedForm(2 * m)
    delbar_adj = -hodge_star(d_star, frame) if d_star.degrees() else GradedForm(2 * m)
    rhs = -1j * (del_adj - delbar_adj)
    return {"lhs_norm": lhs.max_abs(), "rhs_norm": rhs.max_abs(),
            "residual": (lhs - rhs).max_abs()}
