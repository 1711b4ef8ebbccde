"""Pointwise Hermitian exterior algebra.

Forms live on a real vector space of dimension ``2n`` with coordinates
``(x1, y1, ..., xn, yn)``.  Coefficients are complex and are stored as one
dense vector per degree, indexed by the lexicographic list of strictly
increasing index tuples.  Externally index tuples are 1-based.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

ALGEBRAIC_TOL = 1e-10


class DomainError(ValueError):
    """Input outside the domain of an operation."""


@lru_cache(maxsize=None)
def basis_tuples(dim: int, k: int) -> tuple[tuple[int, ...], ...]:
    """0-based increasing index tuples of length ``k`` in lexicographic order."""
    return tuple(itertools.combinations(range(dim), k))


@lru_cache(maxsize=None)
def _position(dim: int, k: int) -> dict:
    return {t: i for i, t in enumerate(basis_tuples(dim, k))}


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(dim: int, ka: int, kb: int):
    ia, ib, io, sg = [], [], [], []
    pos = _position(dim, ka + kb)
    for i, a in enumerate(basis_tuples(dim, ka)):
        sa = set(a)
        for j, b in enumerate(basis_tuples(dim, kb)):
            if sa.intersection(b):
                continue
            ia.append(i)
            ib.append(j)
            io.append(pos[tuple(sorted(a + b))])
            sg.append(_perm_sign(a + b))
    return (np.array(ia, dtype=int), np.array(ib, dtype=int),
            np.array(io, dtype=int), np.array(sg, dtype=float))


@lru_cache(maxsize=None)
def _interior_table(dim: int, k: int):
    """Sparse data for contraction with basis vector ``e_i`` on degree ``k``."""
    rows = {i: ([], [], []) for i in range(dim)}
    pos = _position(dim, k - 1)
    for j, t in enumerate(basis_tuples(dim, k)):
        for s, i in enumerate(t):
            rest = t[:s] + t[s + 1:]
            src, dst, sgn = rows[i]
            src.append(j)
            dst.append(pos[rest])
            sgn.append((-1) ** s)
    return {i: tuple(np.array(v) for v in rows[i]) for i in rows}


@lru_cache(maxsize=None)
def _star_table(dim: int, k: int):
    full = set(range(dim))
    pos = _position(dim, dim - k)
    dst, sgn = [], []
    for t in basis_tuples(dim, k):
        comp = tuple(sorted(full - set(t)))
        dst.append(pos[comp])
        sgn.append(_perm_sign(t + comp))
    return np.array(dst, dtype=int), np.array(sgn, dtype=float)


class GradedForm:
    """Element of the complexified exterior algebra of ``R^dim``."""

    __slots__ = ("dim", "parts")

    def __init__(self, dim: int, parts: Mapping[int, np.ndarray] | None = None):
        if dim <= 0 or dim % 2:
            raise ValueError(f"dimension must be a positive even integer, got {dim}")
        self.dim = int(dim)
        self.parts: dict[int, np.ndarray] = {}
        for k, v in (parts or {}).items():
            v = np.asarray(v, dtype=complex)
            if v.shape != (math.comb(dim, k),):
                raise ValueError(f"degree {k} part has shape {v.shape}")
            self.parts[int(k)] = v

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "GradedForm":
        return cls(dim)

    @classmethod
    def scalar(cls, dim: int, c: complex = 1.0) -> "GradedForm":
        return cls(dim, {0: np.array([c], dtype=complex)})

    @classmethod
    def basis(cls, dim: int, idx: Iterable[int], coeff: complex = 1.0) -> "GradedForm":
        """The form ``coeff * e^{i1} ^ ... ^ e^{ik}`` for 1-based indices."""
        given = [int(i) for i in idx]
        if any(i < 1 or i > dim for i in given):
            raise ValueError(f"index out of range 1..{dim}: {given}")
        idx = [i - 1 for i in given]
        if len(set(idx)) < len(idx):
            return cls(dim)
        sign = _perm_sign(idx)
        k = len(idx)
        v = np.zeros(math.comb(dim, k), dtype=complex)
        v[_position(dim, k)[tuple(sorted(idx))]] = sign * coeff
        return cls(dim, {k: v})

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[tuple, complex]) -> "GradedForm":
        out = cls(dim)
        for idx, c in terms.items():
            out = out + cls.basis(dim, idx, c)
        return out

    @classmethod
    def from_vector(cls, dim: int, k: int, vec) -> "GradedForm":
        return cls(dim, {k: np.array(vec, dtype=complex)})

    @classmethod
    def from_antisymmetric(cls, M) -> "GradedForm":
        """2-form ``sum_{i<j} M[i, j] e^i ^ e^j`` with ``alpha(X, Y) = X^T M Y``."""
        M = np.asarray(M)
        dim = M.shape[0]
        iu = np.array(basis_tuples(dim, 2)).T
        return cls(dim, {2: M[iu[0], iu[1]].astype(complex)})

    @classmethod
    def from_covector(cls, c) -> "GradedForm":
        c = np.asarray(c, dtype=complex)
        return cls(c.shape[0], {1: c})

    # access -----------------------------------------------------------
    def degree_part(self, k: int) -> "GradedForm":
        return GradedForm(self.dim, {k: self.parts[k]} if k in self.parts else {})

    def vector(self, k: int) -> np.ndarray:
        """Dense coefficient vector of the degree ``k`` part."""
        if k in self.parts:
            return self.parts[k].copy()
        return np.zeros(math.comb(self.dim, k), dtype=complex)

    def degrees(self, tol: float = 0.0) -> list[int]:
        return sorted(k for k, v in self.parts.items() if np.max(np.abs(v), initial=0.0) > tol)

    def homogeneous_degree(self, tol: float = 0.0) -> int:
        degs = self.degrees(tol)
        if len(degs) > 1:
            raise DomainError(f"form is not homogeneous (degrees {degs})")
        if degs:
            return degs[0]
        # identically zero: fall back to the stored degree when unambiguous
        return next(iter(self.parts)) if len(self.parts) == 1 else 0

    def terms(self, prune: float = 0.0) -> dict[tuple[int, ...], complex]:
        """1-based index tuples mapped to coefficients above ``prune``."""
        out = {}
        for k in sorted(self.parts):
            for t, c in zip(basis_tuples(self.dim, k), self.parts[k]):
                if abs(c) > prune:
                    out[tuple(i + 1 for i in t)] = complex(c)
        return out

    def coeff(self, idx: Iterable[int]) -> complex:
        idx = tuple(int(i) - 1 for i in idx)
        k = len(idx)
        if k not in self.parts:
            return 0j
        return complex(self.parts[k][_position(self.dim, k)[idx]])

    def top(self) -> complex:
        """Coefficient of ``e^1 ^ ... ^ e^dim``."""
        return complex(self.vector(self.dim)[0])

    # arithmetic -------------------------------------------------------
    def _combine(self, other: "GradedForm", sgn: float) -> "GradedForm":
        if not isinstance(other, GradedForm):
            return NotImplemented
        _check_dim(self, other)
        parts = {k: v.copy() for k, v in self.parts.items()}
        for k, v in other.parts.items():
            parts[k] = parts[k] + sgn * v if k in parts else sgn * v
        return GradedForm(self.dim, parts)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return GradedForm(self.dim, {k: -v for k, v in self.parts.items()})

    def __mul__(self, c):
        if isinstance(c, GradedForm):
            return wedge(self, c)
        return GradedForm(self.dim, {k: c * v for k, v in self.parts.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __xor__(self, other):
        return wedge(self, other)

    def conj(self) -> "GradedForm":
        return GradedForm(self.dim, {k: v.conj() for k, v in self.parts.items()})

    @property
    def real(self) -> "GradedForm":
        return GradedForm(self.dim, {k: v.real.astype(complex) for k, v in self.parts.items()})

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v), initial=0.0)) for v in self.parts.values()), default=0.0)

    def allclose(self, other: "GradedForm", atol: float = ALGEBRAIC_TOL) -> bool:
        return (self - other).max_abs() <= atol

    def pruned(self, eps: float) -> "GradedForm":
        return GradedForm(self.dim, {k: np.where(np.abs(v) > eps, v, 0) for k, v in self.parts.items()})

    def __repr__(self):
        body = ", ".join(f"{k}: {v:.6g}" for k, v in self.terms(prune=1e-14).items())
        return f"GradedForm(dim={self.dim}, {{{body}}})"

    # serialization ----------------------------------------------------
    def to_json_dict(self, prune: float = 0.0) -> dict:
        return {"dim": self.dim,
                "terms": [{"idx": list(k), "re": v.real, "im": v.imag}
                          for k, v in self.terms(prune).items()]}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "GradedForm":
        dim = int(data["dim"])
        out = cls(dim)
        for term in data["terms"]:
            idx = [int(i) for i in term["idx"]]
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"indices must be strictly increasing: {idx}")
            out = out + cls.basis(dim, idx, complex(term.get("re", 0.0), term.get("im", 0.0)))
        return out

    def dumps(self, prune: float = 0.0) -> str:
        return json.dumps(self.to_json_dict(prune))

    @classmethod
    def loads(cls, s: str) -> "GradedForm":
        return cls.from_json_dict(json.loads(s))


def _check_dim(a: GradedForm, b: GradedForm) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def wedge(a: GradedForm, b: GradedForm) -> GradedForm:
    """Exterior product."""
    _check_dim(a, b)
    dim = a.dim
    parts: dict[int, np.ndarray] = {}
    for ka, va in a.parts.items():
        for kb, vb in b.parts.items():
            k = ka + kb
            if k > dim:
                continue
            ia, ib, io, sg = _wedge_table(dim, ka, kb)
            out = parts.setdefault(k, np.zeros(math.comb(dim, k), dtype=complex))
            np.add.at(out, io, sg * va[ia] * vb[ib])
    return GradedForm(dim, parts)


def wedge_power(a: GradedForm, p: int) -> GradedForm:
    out = GradedForm.scalar(a.dim)
    for _ in range(p):
        out = wedge(out, a)
    return out


def interior(v, a: GradedForm) -> GradedForm:
    """Contraction ``iota_v a`` with a real or complex vector ``v``."""
    v = np.asarray(v)
    parts = {}
    for k, vec in a.parts.items():
        if k == 0:
            continue
        out = np.zeros(math.comb(a.dim, k - 1), dtype=complex)
        for i, (src, dst, sgn) in _interior_table(a.dim, k).items():
            if v[i] != 0:
                np.add.at(out, dst, v[i] * sgn * vec[src])
        parts[k - 1] = out
    return GradedForm(a.dim, parts)


@lru_cache(maxsize=None)
def _combo_array(dim: int, k: int) -> np.ndarray:
    return np.array(basis_tuples(dim, k), dtype=int).reshape(-1, k)


def compound_matrix(M, k: int) -> np.ndarray:
    """``C[I, K] = det M[I, K]`` over increasing index tuples."""
    M = np.asarray(M)
    dim = M.shape[0]
    if k == 0:
        return np.ones((1, 1), dtype=M.dtype)
    c = _combo_array(dim, k)
    sub = M[c[:, None, :, None], c[None, :, None, :]]
    return np.linalg.det(sub)


def pullback(a: GradedForm, M) -> GradedForm:
    """Pullback under the linear map ``v -> M v``; ``(M^* a)(v, ...) = a(Mv, ...)``."""
    M = np.asarray(M)
    if M.shape[0] != a.dim:
        raise ValueError("matrix does not match form dimension")
    dim_out = M.shape[1]
    parts = {}
    for k, v in a.parts.items():
        if k > dim_out:
            continue
        if M.shape[0] == M.shape[1]:
            C = compound_matrix(M, k)
        else:
            rows = _combo_array(M.shape[0], k)
            cols = _combo_array(dim_out, k)
            C = np.linalg.det(M[rows[:, None, :, None], cols[None, :, None, :]]) if k else np.ones((1, 1))
        parts[k] = C.T @ v
    if dim_out % 2:
        raise ValueError("pullback target must have even dimension")
    return GradedForm(dim_out, parts)


def evaluate(a: GradedForm, vectors) -> complex:
    """Value of the degree-k part on ``k`` vectors (columns or a list)."""
    V = np.column_stack([np.asarray(v) for v in vectors]) if not isinstance(vectors, np.ndarray) else vectors
    k = V.shape[1]
    return complex(pullback(a.degree_part(k), V).vector(k)[0]) if k else complex(a.vector(0)[0])


def alternating_matrix(a: GradedForm) -> np.ndarray:
    """Antisymmetric matrix ``M`` of the 2-form part, ``a(X, Y) = X^T M Y``."""
    M = np.zeros((a.dim, a.dim), dtype=complex)
    for (i, j), c in zip(basis_tuples(a.dim, 2), a.vector(2)):
        M[i, j] = c
        M[j, i] = -c
    return M


# -- complex structures ---------------------------------------------------

def standard_complex_structure(n: int) -> np.ndarray:
    """Multiplication by ``i`` in coordinates ``(x1, y1, ..., xn, yn)``."""
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


@dataclass(frozen=True)
class LinearComplexStructure:
    matrix: np.ndarray
    gram: np.ndarray = field(default=None)
    tol: float = 1e-12

    def __post_init__(self):
        J = np.asarray(self.matrix, dtype=float)
        dim = J.shape[0]
        G = np.eye(dim) if self.gram is None else np.asarray(self.gram, dtype=float)
        object.__setattr__(self, "matrix", J)
        object.__setattr__(self, "gram", G)
        if dim % 2 or J.shape != (dim, dim) or G.shape != (dim, dim):
            raise ValueError("complex structure needs square matrices of even size")
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(J @ J + np.eye(dim))) > self.tol * max(1.0, float(np.max(np.abs(J))) ** 2):
            raise DomainError("matrix does not square to -identity")
        if np.max(np.abs(G - G.T)) > self.tol * scale:
            raise DomainError("gram matrix is not symmetric")
        if np.max(np.abs(J.T @ G @ J - G)) > self.tol * scale * max(1.0, float(np.max(np.abs(J)))) ** 2:
            raise DomainError("gram matrix is not J-invariant")
        if np.min(np.linalg.eigvalsh(G)) <= 0:
            raise DomainError("gram matrix is not positive definite")

    @classmethod
    def standard(cls, n: int, gram=None) -> "LinearComplexStructure":
        return cls(standard_complex_structure(n), gram)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    def omega_matrix(self) -> np.ndarray:
        """Matrix of ``omega(X, Y) = g(JX, Y)``."""
        return self.matrix.T @ self.gram

    def omega(self) -> GradedForm:
        return GradedForm.from_antisymmetric(self.omega_matrix())

    def frame(self) -> "HermitianFrame":
        return HermitianFrame.build(self)


@dataclass(frozen=True)
class HermitianFrame:
    """Columns ``e1, Je1, ..., en, Jen``, orthonormal for the gram matrix."""
    vectors: np.ndarray

    @classmethod
    def build(cls, cs: LinearComplexStructure, pivot_tol: float = 1e-8) -> "HermitianFrame":
        """Gram-Schmidt over the standard basis, pairing each vector with its J-image."""
        J, G = cs.matrix, cs.gram
        cols: list[np.ndarray] = []
        for cand in np.eye(cs.dim):
            v = cand.copy()
            for _ in range(2):
                for u in cols:
                    v = v - (u @ G @ v) * u
            nrm = math.sqrt(max(v @ G @ v, 0.0))
            if nrm < pivot_tol:
                continue
            e = v / nrm
            cols.extend([e, J @ e])
            if len(cols) == cs.dim:
                break
        if len(cols) != cs.dim:
            raise DomainError("frame construction failed")
        return cls(np.column_stack(cols))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def coframe_coefficients(self, a: GradedForm) -> GradedForm:
        """Components of ``a`` in the dual coframe."""
        return pullback(a, self.vectors)

    def from_coframe(self, a: GradedForm) -> GradedForm:
        return pullback(a, np.linalg.inv(self.vectors))


def _frame_matrix(frame) -> np.ndarray:
    if frame is None:
        return None
    return frame.vectors if isinstance(frame, HermitianFrame) else np.asarray(frame)


def inner(a: GradedForm, b: GradedForm, frame=None) -> complex:
    """Hermitian inner product, linear in ``a`` and conjugate-linear in ``b``."""
    _check_dim(a, b)
    F = _frame_matrix(frame)
    if F is not None:
        a, b = pullback(a, F), pullback(b, F)
    total = 0j
    for k, v in a.parts.items():
        if k in b.parts:
            total += complex(np.vdot(b.parts[k], v))
    return total


def norm_sq(a: GradedForm, frame=None) -> float:
    return inner(a, a, frame).real


def volume_form(dim: int, frame=None, orientation: int = 1) -> GradedForm:
    vol = GradedForm.basis(dim, range(1, dim + 1), float(orientation))
    F = _frame_matrix(frame)
    return vol if F is None else pullback(vol, np.linalg.inv(F))


def hodge_star(a: GradedForm, frame=None, orientation: int = 1) -> GradedForm:
    """Complex-linear Hodge star; ``u ^ *conj(v) = <u, v> vol``."""
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    F = _frame_matrix(frame)
    k = a.homogeneous_degree()
    dim = a.dim
    c = a if F is None else pullback(a, F)
    dst, sgn = _star_table(dim, k)
    out = np.zeros(math.comb(dim, dim - k), dtype=complex)
    out[dst] = orientation * sgn * c.vector(k)
    s = GradedForm(dim, {dim - k: out})
    return s if F is None else pullback(s, np.linalg.inv(F))


# -- type decomposition ---------------------------------------------------

def _j_derivation_matrix(J: np.ndarray, k: int) -> np.ndarray:
    """Matrix of ``a -> sum_slots a(.., J., ..)`` on degree-k coefficient vectors."""
    dim = J.shape[0]
    size = math.comb(dim, k)
    D = np.zeros((size, size), dtype=complex)
    if k == 0:
        return D
    covectors = [GradedForm.from_covector(J[i]) for i in range(dim)]
    for col, t in enumerate(basis_tuples(dim, k)):
        acc = GradedForm(dim)
        for s in range(k):
            f = GradedForm.scalar(dim)
            for r, i in enumerate(t):
                f = wedge(f, covectors[i] if r == s else GradedForm.basis(dim, [i + 1]))
            acc = acc + f
        D[:, col] = acc.vector(k)
    return D


@lru_cache(maxsize=256)
def _pq_projector_cached(jbytes: bytes, dim: int, k: int, p: int) -> np.ndarray:
    J = np.frombuffer(jbytes, dtype=float).reshape(dim, dim)
    n = dim // 2
    D = _j_derivation_matrix(J, k)
    target = p - (k - p)
    P = np.eye(D.shape[0], dtype=complex)
    for pp in range(max(0, k - n), min(k, n) + 1):
        m = pp - (k - pp)
        if m == target:
            continue
        P = P @ (D - 1j * m * np.eye(D.shape[0])) / (1j * (target - m))
    return P


def pq_projector(J: np.ndarray, k: int, p: int) -> np.ndarray:
    J = np.ascontiguousarray(J, dtype=float)
    return _pq_projector_cached(J.tobytes(), J.shape[0], k, p)


def pq_project(a: GradedForm, J, p: int, q: int) -> GradedForm:
    """Component of type ``(p, q)``.

    Uses the derivation ``D a = sum_slots a(.., J., ..)``, which acts on
    ``(p, q)`` forms by ``i (p - q)``.
    """
    Jm = J.matrix if isinstance(J, LinearComplexStructure) else np.asarray(J, dtype=float)
    n = Jm.shape[0] // 2
    k = p + q
    if p < 0 or q < 0 or k > 2 * n:
        raise ValueError(f"invalid type ({p}, {q}) for n = {n}")
    if p > n or q > n or k not in a.parts:
        return GradedForm(a.dim)
    return GradedForm(a.dim, {k: pq_projector(Jm, k, p) @ a.parts[k]})


def lefschetz(a: GradedForm, omega: GradedForm) -> GradedForm:
    return wedge(a, omega)


def dual_lefschetz(a: GradedForm, J: LinearComplexStructure) -> GradedForm:
    """Adjoint of wedging with the fundamental form."""
    frame = J.frame()
    c = frame.coframe_coefficients(a)
    out = GradedForm(a.dim)
    E = np.eye(a.dim)
    for i in range(J.n):
        out = out + interior(E[2 * i + 1], interior(E[2 * i], c))
    return frame.from_coframe(out)


def _operator_matrix(op, dim: int, k: int) -> np.ndarray:
    cols = [op(GradedForm.from_vector(dim, k, e)) for e in np.eye(math.comb(dim, k))]
    return np.column_stack([c for c in cols]) if cols else np.zeros((0, 0))


def _null_space(A: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    if A.size == 0:
        return np.eye(A.shape[1], dtype=complex)
    u, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > rtol * max(1.0, s[0] if s.size else 0.0)))
    return vh[rank:].conj().T


@dataclass(frozen=True)
class Decomposition:
    pieces: list
    residual: float
    condition: float

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self):
        return len(self.pieces)

    def __getitem__(self, i):
        return self.pieces[i]


def primitive_decompose(a: GradedForm, J: LinearComplexStructure, tol: float = 1e-10,
                        max_condition: float = 1e8) -> Decomposition:
    """Write ``a = sum_j L^j a_j`` with every ``a_j`` primitive."""
    k = a.homogeneous_degree()
    n, dim = J.n, a.dim
    omega = J.omega()
    lam = lambda f: dual_lefschetz(f, J)
    blocks, levels = [], []
    for j in range(k // 2 + 1):
        r = k - 2 * j
        if r > n or j > n - r:
            continue
        if r >= 2:
            Lam = np.column_stack([lam(GradedForm.from_vector(dim, r, e)).vector(r - 2)
                                   for e in np.eye(math.comb(dim, r))])
            basis = _null_space(Lam)
        else:
            basis = np.eye(math.comb(dim, r), dtype=complex)
        if basis.shape[1] == 0:
            continue
        Lj = wedge_power(omega, j)
        img = np.column_stack([wedge(GradedForm.from_vector(dim, r, b), Lj).vector(k)
                               for b in basis.T])
        blocks.append(img)
        levels.append((j, r, basis))
    target = a.vector(k)
    if not blocks:
        return Decomposition([], float(np.linalg.norm(target)), 1.0)
    A = np.hstack(blocks)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    s = np.linalg.svd(A, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if cond > max_condition:
        raise DomainError(f"Lefschetz solve badly conditioned (cond={cond:.3g})")
    resid = float(np.linalg.norm(A @ coef - target) / max(1.0, np.linalg.norm(target)))
    pieces, start = [], 0
    for (j, r, basis), blk in zip(levels, blocks):
        c = coef[start:start + blk.shape[1]]
        start += blk.shape[1]
        piece = GradedForm(dim, {r: basis @ c})
        if piece.max_abs() > tol:
            pieces.append((j, piece))
    return Decomposition(pieces, resid, cond)


def riemann_hodge_pair(u: GradedForm, v: GradedForm, omega: GradedForm, frame=None) -> complex:
    """``(-1)^{k(k-1)/2}`` times the top coefficient of ``u ^ v ^ omega^{n-k}``.

    The coefficient is taken against ``e^1 ^ ... ^ e^{2n}``, or against the
    metric volume form when ``frame`` is given.
    """
    ku, kv = u.homogeneous_degree(), v.homogeneous_degree()
    if ku != kv:
        raise DomainError(f"degree mismatch: {ku} vs {kv}")
    n = u.dim // 2
    if ku > n:
        raise DomainError(f"degree {ku} exceeds n = {n}")
    top = wedge(wedge(u, v), wedge_power(omega, n - ku)).top()
    if frame is not None:
        top = top / volume_form(u.dim, frame).top()
    return (-1) ** (ku * (ku - 1) // 2) * top


# -- Hermitian matrices and (1,1) / (n-1,n-1) forms -----------------------

@dataclass(frozen=True)
class HermitianMatrixRep:
    """Hermitian matrix ``A`` of the real (1,1)-form ``alpha(X, Y) = Im(x^* A y)``."""
    entries: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        A = np.asarray(self.entries, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("Hermitian representation must be a square matrix")
        if np.max(np.abs(A - A.conj().T)) > self.tol * max(1.0, float(np.max(np.abs(A)))):
            raise DomainError("matrix is not Hermitian")
        object.__setattr__(self, "entries", A)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_positive(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.entries)) > 0)


def real_vector(x) -> np.ndarray:
    """Complex ``(..., n)`` vectors to real ``(..., 2n)`` in ``(x1, y1, ...)`` order."""
    x = np.asarray(x)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
    out[..., 0::2] = x.real
    out[..., 1::2] = x.imag
    return out


def complex_vector(X) -> np.ndarray:
    X = np.asarray(X)
    return X[..., 0::2] + 1j * X[..., 1::2]


def hermitian_to_real_pair(A):
    """Real matrices ``(G, W)`` with ``X^T G Y = Re(x^* A y)`` and ``X^T W Y = Im(x^* A y)``.

    Works on stacks ``(..., n, n)``.
    """
    A = np.asarray(A)
    P, Q = A.real, A.imag
    n = A.shape[-1]
    G = np.empty(A.shape[:-2] + (2 * n, 2 * n))
    W = np.empty_like(G)
    G[..., 0::2, 0::2] = P
    G[..., 0::2, 1::2] = -Q
    G[..., 1::2, 0::2] = Q
    G[..., 1::2, 1::2] = P
    W[..., 0::2, 0::2] = Q
    W[..., 0::2, 1::2] = P
    W[..., 1::2, 0::2] = -P
    W[..., 1::2, 1::2] = Q
    return G, W


def hermitian_to_gram(A) -> np.ndarray:
    return hermitian_to_real_pair(A)[0]


def complex_to_real_linear(M) -> np.ndarray:
    """Real matrix of the complex-linear map ``x -> M x``."""
    M = np.asarray(M)
    n, m = M.shape[-2:]
    R = np.empty(M.shape[:-2] + (2 * n, 2 * m))
    R[..., 0::2, 0::2] = M.real
    R[..., 0::2, 1::2] = -M.imag
    R[..., 1::2, 0::2] = M.imag
    R[..., 1::2, 1::2] = M.real
    return R


def hermitian_to_form(A) -> GradedForm:
    """Real (1,1)-form ``alpha_A``."""
    A = HermitianMatrixRep(A).entries if not isinstance(A, HermitianMatrixRep) else A.entries
    return GradedForm.from_antisymmetric(hermitian_to_real_pair(A)[1])


def form_to_hermitian(a: GradedForm, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`hermitian_to_form` on real (1,1)-forms."""
    M = alternating_matrix(a)
    if np.max(np.abs(M.imag)) > tol:
        raise DomainError("form has complex coefficients")
    M = M.real
    Q = M[0::2, 0::2]
    P = M[0::2, 1::2]
    A = P + 1j * Q
    if np.max(np.abs(hermitian_to_real_pair(A)[1] - M)) > tol * max(1.0, np.max(np.abs(M))):
        raise DomainError("form is not of type (1,1)")
    return A


@lru_cache(maxsize=None)
def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = _perm_sign(perm)
    return eps


def _row_contract(mats, n: int) -> np.ndarray:
    """``R[..., j1, ..., jk, a] = sum eps[i1, ..., ik, a] prod B_r[i_r, j_r]``, k = len(mats)."""
    batch = np.broadcast_shapes(*[m.shape[:-2] for m in mats])
    nb = len(batch)
    R = np.broadcast_to(levi_civita(n).astype(complex), batch + (n,) * n)
    for r, B in enumerate(mats):
        B = np.broadcast_to(B, batch + (n, n))
        # move the row index to the end, multiply by B, put the column index back
        R = np.moveaxis(R, nb + r, -1)
        shp = R.shape
        R = np.matmul(R.reshape(batch + (-1, n)), B).reshape(shp)
        R = np.moveaxis(R, -1, nb + r)
    return R


def dual_matrix(*mats) -> np.ndarray:
    """Matrix ``S`` with ``alpha_{B1} ^ ... ^ alpha_{B_{n-1}} ^ alpha_C = tr(S C) vol``."""
    n = len(mats) + 1
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if any(m.shape[-1] != n for m in mats):
        raise ValueError("need n - 1 matrices of size n")
    R = _row_contract(mats, n)
    R = R.reshape(R.shape[: R.ndim - n] + (-1, n))
    # S[b, a] pairs C[a, b]
    return np.einsum("Jb,...Ja->...ba", levi_civita(n).reshape(-1, n), R)


def mixed_discriminant(*mats) -> np.ndarray:
    """``D(A1, ..., An)`` with ``D(A, ..., A) = det A``; stacks broadcast on leading axes."""
    n = len(mats)
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if any(m.shape[-1] != n for m in mats):
        raise ValueError("number of matrices must equal their size")
    S = dual_matrix(*mats[:-1])
    return np.einsum("...ij,...ji->...", S, mats[-1]) / math.factorial(n)


def dual_to_form(S) -> GradedForm:
    """The real (n-1,n-1)-form whose pairing with ``alpha_C`` is ``tr(S C) vol``."""
    S = np.asarray(S, dtype=complex)
    n = S.shape[0]
    if n == 1:
        return GradedForm.scalar(2, complex(S[0, 0].real))
    B = np.trace(S).real / math.factorial(n - 1) * np.eye(n) - S / math.factorial(n - 2)
    omega0 = hermitian_to_form(np.eye(n))
    return wedge(hermitian_to_form(B), wedge_power(omega0, n - 2))


def form_to_dual(sigma: GradedForm) -> np.ndarray:
    """Inverse of :func:`dual_to_form` by pairing against the basis of (1,1)-forms."""
    n = sigma.dim // 2
    S = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            # tr(S E_ab) = S[b, a]; E_ab is not Hermitian, so use its real and imaginary parts.
            E = np.zeros((n, n), dtype=complex)
            E[a, b] = 1
            H1 = (E + E.conj().T) / 2
            H2 = (E - E.conj().T) / 2j
            t1 = wedge(sigma, hermitian_to_form(H1)).top()
            t2 = wedge(sigma, hermitian_to_form(H2)).top()
            S[b, a] = t1 + 1j * t2
    return S


@lru_cache(maxsize=None)
def phi_constant(n: int) -> float:
    """Constant ``c`` with ``omega_H^{n-1} <-> c adj(H)``, calibrated by wedge expansion.

    Expands ``omega_I^{n-1} ^ alpha_{E11}`` with :func:`wedge` and reads off the
    coefficient of the volume form.
    """
    if n < 2:
        raise DomainError("the (n-1)-power map needs n >= 2")
    E = np.zeros((n, n))
    E[0, 0] = 1.0
    omega = hermitian_to_form(np.eye(n))
    return wedge(wedge_power(omega, n - 1), hermitian_to_form(E)).top().real


def adjugate(A) -> np.ndarray:
    A = np.asarray(A)
    return np.linalg.det(A)[..., None, None] * np.linalg.inv(A)


def phi_map(H) -> np.ndarray:
    """Dual matrix of ``omega_H^{n-1}`` (stacks allowed)."""
    H = np.asarray(H, dtype=complex)
    return phi_constant(H.shape[-1]) * adjugate(H)


def psi_map(S, check: bool = True) -> np.ndarray:
    """Positive ``H`` with ``phi_map(H) = S``; stacks allowed."""
    S = np.asarray(S, dtype=complex)
    n = S.shape[-1]
    if n < 2:
        raise DomainError("the root is defined only for n >= 2")
    S = (S + np.swapaxes(S.conj(), -1, -2)) / 2
    if check and np.any(np.linalg.eigvalsh(S)[..., 0] <= 0):
        raise DomainError("input is not a positive (n-1,n-1)-form")
    k = phi_constant(n)
    det_s = np.linalg.det(S).real
    det_h = (det_s / k ** n) ** (1.0 / (n - 1))
    return k * det_h[..., None, None] * np.linalg.inv(S)


def michelsohn_root(sigma: HermitianMatrixRep) -> HermitianMatrixRep:
    """Pointwise inverse of ``omega -> omega^{n-1}`` in the dual-matrix representation."""
    S = sigma.entries if isinstance(sigma, HermitianMatrixRep) else np.asarray(sigma)
    if S.shape[0] < 2:
        raise DomainError("n = 1 is not supported")
    H = psi_map(S)
    return HermitianMatrixRep((H + H.conj().T) / 2)


def michelsohn_power(omega: HermitianMatrixRep) -> HermitianMatrixRep:
    H = omega.entries if isinstance(omega, HermitianMatrixRep) else np.asarray(omega)
    S = phi_map(H)
    return HermitianMatrixRep((S + S.conj().T) / 2)
