"""Verification suites: named checks with residuals and tolerances.

Each suite returns a :class:`SuiteResult`.  The command line wraps these into
JSON reports and the acceptance tests assert on them.  Anchors are short
descriptions of the statement being checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from . import linear_hermitian_algebra as alg
from .balanced_functional import (
    BalancedProblem,
    default_direction_library,
    fs_field,
    sys_nor_balanced,
    sys_nor_balanced_closed_form,
)
from .cpn_fields import (
    Conformal,
    FubiniStudy,
    GrayCalculator,
    Homogeneous,
    Monomial,
    ScalarField,
    check_basic_identities_at,
    codifferential_of_omega,
    verify_balanced,
)
from .integral_geometry import ConformalFactor, denseness_check, holder_chain_check, igf_verify
from .mc import sample_cpn
from .systole_closed_forms import (
    SystoleReport,
    clifford_torus,
    conic_curve,
    crofton_degree,
    freedom_thresholds,
    cubic_power_curve,
    curve_surface,
    line_curve,
    log_grid,
    mc_area_fiber,
    mc_area_hyperplane,
    mc_area_transversal,
    calibrated_areas,
    sys2_constant_mismatch,
    sys2_nor,
    sys4n_nor,
    systolic_freedom_scan,
    twisted_cubic,
    wirtinger_check,
)


@dataclass
class Check:
    name: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "residual": _jsonable(self.residual),
                "tolerance": _jsonable(self.tolerance), "passed": bool(self.passed),
                "details": _jsonable(self.details)}


@dataclass
class SuiteResult:
    suite: str
    checks: list
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"suite": self.suite, "config": _jsonable(self.config), "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def _le(name: str, anchor: str, residual: float, tol: float, **details) -> Check:
    residual = float(residual)
    return Check(name, anchor, residual, tol, bool(residual <= tol), details)


def _flag(name: str, anchor: str, ok: bool, **details) -> Check:
    return Check(name, anchor, 0.0 if ok else 1.0, 0.0, bool(ok), details)


def _mc_check(name: str, anchor: str, est, exact: float, nsigma: float = 3.0, floor: float = 1e-12) -> Check:
    tol = nsigma * est.std_error + floor * max(1.0, abs(exact))
    return _le(name, anchor, abs(est.value - exact), tol, estimate=est.to_dict(), exact=exact)


# -- closed-form systole curves ---------------------------------------------

ANCHOR_CURVES = "normalized systoles of the homogeneous family (closed form)"


def systole_suite(n_values: Sequence[int] = (1, 2), steps: int = 400, t_min: float = 1e-2,
                  t_max: float = 1e2) -> SuiteResult:
    checks = []
    checks.append(_le("sys2_nor_at_one", ANCHOR_CURVES, abs(sys2_nor(1.0, 1) - 6 ** (-1 / 3)), 1e-15))
    checks.append(_le("sys4n_nor_at_one", ANCHOR_CURVES, abs(sys4n_nor(1.0, 1) - 3 * 6 ** (-1 / 3)), 1e-15))
    for n in n_values:
        eps = 1e-13
        checks.append(_le(f"sys2_branch_continuity_n{n}", ANCHOR_CURVES,
                          abs(sys2_nor(1 - eps, n) - sys2_nor(1 + eps, n)), 1e-12))
        grid = log_grid(t_min, t_max, steps)
        worst4 = worst2 = 0.0
        for t in grid:
            res = SystoleReport.at(float(t), n).consistency_residuals()
            worst4 = max(worst4, res["sys4n"] / sys4n_nor(float(t), n))
            worst2 = max(worst2, res["sys2_up_to_constant"])
        checks.append(_le(f"sys4n_equals_area_over_volume_n{n}", "hyperplane area over volume power",
                          worst4, 1e-12))
        checks.append(_le(f"sys2_shape_equals_area_over_volume_n{n}", "fiber/transversal area over volume power",
                          worst2, 1e-12, constant_factor=sys2_constant_mismatch(n)))
        scan = systolic_freedom_scan(n, grid)
        c = scan["checks"]
        for key in ("argmin_nearest_one", "value_at_one_is_minimal", "decreasing_below_one",
                    "increasing_above_one", "ends_exceed_bound"):
            checks.append(_flag(f"scan_{key}_n{n}", "minimum at the Fubini-Study metric and systolic freedom",
                                c[key], steps=steps))
        checks.append(_le(f"scan_derivative_at_one_n{n}", "stationarity of the 4n-systole curve at t = 1",
                          c["derivative_at_one"], 1e-8))
        for M in (10.0, 1e3, 1e6):
            lo, hi = freedom_thresholds(n, M)
            beyond = min(sys4n_nor(lo / 2, n), sys4n_nor(hi * 2, n))
            checks.append(_flag(f"freedom_beyond_{M:g}_n{n}", "systolic freedom: the 4n-systole is unbounded",
                                0 < lo < 1 < hi and beyond > M, t_lo=lo, t_hi=hi))
    return SuiteResult("systole", checks, {"n_values": list(n_values), "steps": steps,
                                           "t_min": t_min, "t_max": t_max})


def systole_table(n: int, t_min: float, t_max: float, steps: int) -> list[dict]:
    rows = []
    for t in log_grid(t_min, t_max, steps):
        t = float(t)
        rows.append({"t": t, "sys2_nor": sys2_nor(t, n), "sys4n_nor": sys4n_nor(t, n),
                     "vol": calibrated_areas(t, n)[3]})
    return rows


# -- convention cross-check ---------------------------------------------------

def crosscheck_suite(samples: int = 1_000_000, seed: int = 0, workers: int = 1) -> SuiteResult:
    anchor = "normalized systole of a balanced metric at the Fubini-Study form"
    target = 6 ** (2 / 3) / 2
    checks = [
        _le("sys4n_nor_closed_form", anchor, abs(sys4n_nor(1.0, 1) - target), 1e-10),
        _le("balanced_closed_form", anchor, abs(sys_nor_balanced_closed_form(3) - target), 1e-10),
    ]
    est = sys_nor_balanced(3, fs_field, samples, seed, workers)
    checks.append(_mc_check("balanced_monte_carlo", anchor, est, target))
    return SuiteResult("crosscheck", checks, {"samples": samples, "seed": seed})


# -- balancedness of g_t ------------------------------------------------------

def balanced_suite(n: int = 1, ts: Sequence[float] = (0.1, 0.5, 2.0, 10.0), points: int = 100,
                   h: float = 1e-4, tol: float = 1e-5, seed: int = 0) -> SuiteResult:
    checks = []
    z = sample_cpn(2 * n + 1, points, np.random.default_rng(seed), radius=1e3)
    for t in ts:
        r = verify_balanced(t, n, points, h, seed, z_points=z)
        checks.append(_le(f"d_omega_power_t{t:g}", "homogeneous metrics are balanced",
                          r["max_d_power_residual"], tol, points=points))
        checks.append(_le(f"k_trace_t{t:g}", "codifferential of the fundamental form as a K-trace",
                          r["max_k_trace_residual"], tol, points=points))
    return SuiteResult("balanced", checks, {"n": n, "t": list(ts), "points": points, "h": h,
                                            "tol": tol, "seed": seed})


# -- Gray tensors -------------------------------------------------------------

ANCHOR_BASIC = "basic identities of almost Hermitian manifolds"
ANCHOR_ANTISYM = "consequences of an anti-symmetric K"


def _basis_max(fn, dim: int) -> float:
    E = np.eye(dim)
    return max(float(np.max(np.abs(fn(E[i], E[j])))) for i in range(dim) for j in range(dim))


def gray_suite(points: int = 50, seed: int = 0, h: float = 1e-4, tol: float = 1e-5,
               ts: Sequence[float] = (0.5, 2.0), codiff_points: int = 5) -> SuiteResult:
    rng = np.random.default_rng(seed)
    m = 3
    z_pts = sample_cpn(m, points, rng, radius=1e3)
    metrics = [("fs", FubiniStudy(m))] + [(f"gt{t:g}", Homogeneous(1, t)) for t in ts]
    worst: dict = {}
    nj_fs, k_max = 0.0, {name: 0.0 for name, _ in metrics}
    nij_agree = 0.0
    for z in z_pts:
        X, Y, Z = rng.normal(size=(3, 2 * m))
        calcs = {}
        for name, metric in metrics:
            res = check_basic_identities_at(metric, z, X, Y, Z, h)
            for key, v in res.items():
                if key == "K_symmetric_part":
                    continue
                worst[(name, key)] = max(worst.get((name, key), 0.0), v)
            c = GrayCalculator(metric, z, h)
            calcs[name] = c
            if name == "fs":
                nj_fs = max(nj_fs, _basis_max(c.nablaJ, 2 * m))
            else:
                worst[(name, "H_vanishes")] = max(worst.get((name, "H_vanishes", ), 0.0), _basis_max(c.H, 2 * m))
            worst[(name, "nijenhuis_vanishes")] = max(worst.get((name, "nijenhuis_vanishes"), 0.0),
                                                      float(np.max(np.abs(c.N(X, Y)))))
            k_max[name] = max(k_max[name], _basis_max(c.K, 2 * m))
        for name, c in calcs.items():
            nij_agree = max(nij_agree, float(np.max(np.abs(c.N(X, Y) - calcs["fs"].N(X, Y)))))

    labels = {
        "nabla_omega_vs_nablaJ": ANCHOR_BASIC, "nabla_omega_antisymmetric": ANCHOR_BASIC,
        "nabla_omega_J_shift": ANCHOR_BASIC, "nabla_omega_JY_Y": ANCHOR_BASIC,
        "nijenhuis_J_linear": ANCHOR_BASIC,
        "K_symmetrization_lemma": "symmetrization of K through S and the Nijenhuis tensor",
        "antisymmetric_K_JX": ANCHOR_ANTISYM, "antisymmetric_K_X": ANCHOR_ANTISYM,
        "H_vanishes": "Hermitian metrics have H = 0",
        "nijenhuis_vanishes": "the canonical complex structure is integrable",
    }
    checks = [_le(f"{name}_{key}", labels[key], v, tol, points=points) for (name, key), v in sorted(worst.items())]
    checks.append(_le("fs_nablaJ_vanishes", "Kähler metrics have parallel J", nj_fs, tol, points=points))
    checks.append(_le("fs_K_vanishes", "Kähler metrics have K = 0", k_max["fs"], tol, points=points))
    checks.append(_le("nijenhuis_metric_independent", "the Nijenhuis tensor does not depend on the metric",
                      nij_agree, 1e-8, points=points))
    for name in k_max:
        if name != "fs":
            checks.append(Check(f"{name}_K_nonzero", "homogeneous metrics with t != 1 are not Kähler",
                                k_max[name], 1e-3, k_max[name] > 1e-3))

    # delta omega = -* d * omega against the K-trace; g_t balanced, a conformal FS metric is not
    gen = ScalarField(m, (Monomial((1, 0, 0), (1, 0, 0), 1.0),), 2.0)
    pts = z_pts[:codiff_points]
    for name, metric in [("gt0.5", Homogeneous(1, 0.5)), ("conformal_fs", Conformal(FubiniStudy(m), gen))]:
        diff, mag = 0.0, 0.0
        for z in pts:
            delta = codifferential_of_omega(metric, z, h)
            ktr = GrayCalculator(metric, z, h).k_trace()
            diff = max(diff, float(np.max(np.abs(delta + ktr))))
            mag = max(mag, float(np.max(np.abs(ktr))))
        checks.append(_le(f"{name}_codifferential_is_minus_K_trace",
                          "codifferential of the fundamental form as a K-trace (sign of the L2 adjoint)",
                          diff, tol, k_trace_magnitude=mag, points=len(pts)))
        if name == "conformal_fs":
            checks.append(Check("conformal_fs_not_balanced", "a non-constant conformal factor breaks balancedness",
                                mag, 1e-3, mag > 1e-3))
    return SuiteResult("gray", checks, {"points": points, "seed": seed, "h": h, "tol": tol, "t": list(ts)})


# -- Lefschetz / Riemann-Hodge ------------------------------------------------

def _random_compatible(n: int, rng) -> alg.LinearComplexStructure:
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = M @ M.conj().T + n * np.eye(n)
    return alg.LinearComplexStructure.standard(n, alg.hermitian_to_gram(A / n))


def _op_matrix(op, dim: int, k: int, k_out: int) -> np.ndarray:
    cols = [op(alg.GradedForm.from_vector(dim, k, e)).vector(k_out) for e in np.eye(math.comb(dim, k))]
    return np.column_stack(cols) if cols else np.zeros((math.comb(dim, k_out), 0))


def _inner_matrix(cs, k: int) -> np.ndarray:
    """``<a, b> = conj(b)^T M a`` on degree-k coefficient vectors."""
    frame = cs.frame()
    C = _op_matrix(frame.coframe_coefficients, cs.dim, k, k)
    return C.conj().T @ C


def _rand_vecs(rng, size, count):
    return rng.normal(size=(size, count)) + 1j * rng.normal(size=(size, count))


def algebra_suite(ns: Sequence[int] = (2, 3, 4), samples: int = 1000, seed: int = 0,
                  tol: float = 1e-10, spot: int = 10) -> SuiteResult:
    rng = np.random.default_rng(seed)
    checks = []
    for n in ns:
        cs = _random_compatible(n, rng)
        dim = 2 * n
        om = cs.omega()
        frame = cs.frame()
        lam = lambda f: alg.dual_lefschetz(f, cs)
        L = lambda f: alg.lefschetz(f, om)
        inner_m = {k: _inner_matrix(cs, k) for k in range(dim + 1)}

        # adjointness, all degrees, vectorized through operator matrices built from the library maps
        adj, spot_err = 0.0, 0.0
        for k in range(2, dim + 1):
            Lam = _op_matrix(lam, dim, k, k - 2)
            Lk = _op_matrix(L, dim, k - 2, k)
            U = _rand_vecs(rng, math.comb(dim, k), samples)
            V = _rand_vecs(rng, math.comb(dim, k - 2), samples)
            lhs = np.einsum("is,ij,js->s", V.conj(), inner_m[k - 2], Lam @ U)
            rhs = np.einsum("is,ij,js->s", (Lk @ V).conj(), inner_m[k], U)
            scale = np.linalg.norm(U, axis=0) * np.linalg.norm(V, axis=0)
            adj = max(adj, float(np.max(np.abs(lhs - rhs) / scale)))
            for s in range(min(spot, samples)):
                u = alg.GradedForm.from_vector(dim, k, U[:, s])
                v = alg.GradedForm.from_vector(dim, k - 2, V[:, s])
                direct = alg.inner(lam(u), v, frame) - alg.inner(u, L(v), frame)
                spot_err = max(spot_err, abs(direct) / scale[s], abs(alg.inner(lam(u), v, frame) - lhs[s]) / scale[s])
        checks.append(_le(f"lefschetz_adjoint_n{n}", "the dual Lefschetz operator is the adjoint of L", adj, tol,
                          samples_per_degree=samples))
        checks.append(_le(f"lefschetz_adjoint_direct_n{n}", "the dual Lefschetz operator is the adjoint of L",
                          spot_err, tol, spot_checks=spot))

        # primitive characterization and bijectivity of L^{n-k}
        char_bad, prim_res, bij = 0, 0.0, 0.0
        decomp_res = 0.0
        for k in range(0, n + 1):
            size = math.comb(dim, k)
            Lpow = _op_matrix(lambda f: alg.wedge(f, alg.wedge_power(om, n - k + 1)), dim, k, 2 * n - k + 2) \
                if 2 * n - k + 2 <= dim else np.zeros((0, size))
            Lam = _op_matrix(lam, dim, k, k - 2) if k >= 2 else np.zeros((0, size))
            B = null_space(Lam) if k >= 2 else np.eye(size)
            prim = B @ _rand_vecs(rng, B.shape[1], samples)
            gen = _rand_vecs(rng, size, samples)
            nrm = lambda X: np.linalg.norm(X, axis=0) if X.shape[0] else np.zeros(X.shape[1])
            pn = nrm(prim)
            r_lam, r_L = nrm(Lam @ prim) / pn, nrm(Lpow @ prim) / pn
            prim_res = max(prim_res, float(np.max(r_lam, initial=0)), float(np.max(r_L, initial=0)))
            if k >= 2:
                g_lam, g_L = nrm(Lam @ gen) / nrm(gen), nrm(Lpow @ gen) / nrm(gen)
                both_small = (g_lam < 1e-10) & (g_L < 1e-10)
                both_big = (g_lam > 1e-6) & (g_L > 1e-6)
                char_bad += int(np.sum(~(both_small | both_big)))
            M = _op_matrix(lambda f: alg.wedge(f, alg.wedge_power(om, n - k)), dim, k, 2 * n - k)
            X = np.linalg.lstsq(M, M @ gen, rcond=None)[0]
            bij = max(bij, float(np.max(nrm(X - gen) / nrm(gen))))
            for s in range(min(spot, samples)):
                a = alg.GradedForm.from_vector(dim, k, gen[:, s])
                d = alg.primitive_decompose(a, cs)
                decomp_res = max(decomp_res, d.residual)
                for _, piece in d:
                    prim_res = max(prim_res, lam(piece).max_abs() / max(1.0, piece.max_abs()))
        checks.append(_le(f"primitive_characterization_n{n}", "primitive forms: kernel of the dual operator",
                          prim_res, tol, samples_per_degree=samples))
        checks.append(_le(f"primitive_dichotomy_n{n}", "primitive forms: kernel of the dual operator",
                          char_bad, 0, samples_per_degree=samples))
        checks.append(_le(f"lefschetz_bijective_n{n}", "powers of L are bijective up to the middle degree",
                          bij, tol, samples_per_degree=samples))
        checks.append(_le(f"lefschetz_decomposition_n{n}", "Lefschetz decomposition into primitive pieces",
                          decomp_res, tol, spot_checks=spot))

        # Riemann-Hodge: type orthogonality and positivity on primitive (p, q) forms
        J = cs.matrix
        types = [(p, k - p) for k in range(0, n + 1) for p in range(0, k + 1)]
        prim_bases = {}
        for p, q in types:
            k = p + q
            size = math.comb(dim, k)
            P = alg.pq_projector(J, k, p)
            Lam = _op_matrix(lam, dim, k, k - 2) if k >= 2 else np.zeros((0, size))
            prim_bases[(p, q)] = null_space(np.vstack([Lam, np.eye(size) - P]))
        live = [t for t in types if prim_bases[t].shape[1] > 0]
        pos_err, orth_err, count = 0.0, 0.0, 0
        per_type = max(1, samples // len(live))
        for p, q in live:
            B = prim_bases[(p, q)]
            k = p + q
            for _ in range(per_type):
                u = alg.GradedForm.from_vector(dim, k, B @ _rand_vecs(rng, B.shape[1], 1)[:, 0])
                nu = alg.norm_sq(u, frame)
                lhs = (1j) ** (p - q) * alg.riemann_hodge_pair(u, u.conj(), om, frame)
                rhs = math.factorial(n - k) * nu
                pos_err = max(pos_err, abs(lhs - rhs) / rhs)
                count += 1
        orth_pairs = 0
        for k in range(0, n + 1):
            for p in range(k + 1):
                for p2 in range(k + 1):
                    q, q2 = k - p, k - p2
                    if (p, q) == (q2, p2):
                        continue
                    for _ in range(max(1, samples // 50)):
                        u = alg.pq_project(alg.GradedForm.from_vector(dim, k, _rand_vecs(rng, math.comb(dim, k), 1)[:, 0]), J, p, q)
                        v = alg.pq_project(alg.GradedForm.from_vector(dim, k, _rand_vecs(rng, math.comb(dim, k), 1)[:, 0]), J, p2, q2)
                        nu, nv = math.sqrt(alg.norm_sq(u, frame)), math.sqrt(alg.norm_sq(v, frame))
                        if nu == 0 or nv == 0:
                            continue
                        orth_err = max(orth_err, abs(alg.riemann_hodge_pair(u / nu, v / nv, om, frame)))
                        orth_pairs += 1
        checks.append(_le(f"riemann_hodge_positivity_n{n}", "Riemann-Hodge bilinear relations",
                          pos_err, tol, forms=count, types=[list(t) for t in live]))
        checks.append(_le(f"riemann_hodge_type_orthogonality_n{n}", "Riemann-Hodge bilinear relations",
                          orth_err, 1e-12, pairs=orth_pairs))

        # Michelsohn root round trips
        rt = 0.0
        for _ in range(100):
            M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            H = M @ M.conj().T + 0.1 * np.eye(n)
            S = alg.phi_map(H)
            rt = max(rt, np.linalg.norm(alg.psi_map(S) - H) / np.linalg.norm(H),
                     np.linalg.norm(alg.phi_map(alg.psi_map(S)) - S) / np.linalg.norm(S))
        checks.append(_le(f"michelsohn_round_trip_n{n}", "the (n-1)-th power is bijective on positive forms",
                          rt, tol, trials=100))
    return SuiteResult("algebra", checks, {"n": list(ns), "samples": samples, "seed": seed, "tol": tol})


# -- Crofton and Wirtinger ----------------------------------------------------

def curves_suite(seed: int = 0, moebius: int = 3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    anchor = "degree of a curve as the integral of the Fubini-Study form"
    checks = []
    for name, curve, deg in [("line", line_curve(), 1), ("conic", conic_curve(), 2),
                             ("twisted_cubic", twisted_cubic(), 3), ("cubic_cover", cubic_power_curve(), 3)]:
        r = crofton_degree(curve)
        checks.append(Check(f"crofton_{name}", anchor, r.residual, 1e-3, r.degree == deg and r.residual < 1e-3,
                            {"degree": r.degree, "expected": deg, "integral": r.integral}))
        worst = 0.0
        for _ in range(moebius):
            a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
            rr = crofton_degree(curve.reparameterize(a, b, c, d))
            worst = max(worst, abs(rr.integral - r.integral))
        checks.append(_le(f"crofton_{name}_reparameterized", anchor, worst, 1e-3, trials=moebius))
    wanchor = "Wirtinger inequality and calibrated equality"
    for name, curve in [("line", line_curve()), ("conic", conic_curve()), ("twisted_cubic", twisted_cubic())]:
        w = wirtinger_check(curve_surface(curve), complex_curve=True, n=128)
        checks.append(_le(f"wirtinger_equality_{name}", wanchor, w["equality_residual"], 1e-4, area=w["area"],
                          omega_integral=w["omega_integral"]))
    w = wirtinger_check(clifford_torus(), complex_curve=False, n=128)
    checks.append(Check("wirtinger_strict_real_torus", wanchor, w["gap"], 1e-4,
                        w["bound_holds"] and w["gap"] > 1e-4, {"area": w["area"], "omega_integral": w["omega_integral"]}))
    return SuiteResult("curves", checks, {"seed": seed, "moebius": moebius})


# -- Monte Carlo areas under g_t --------------------------------------------

def areas_suite(n: int = 1, ts: Sequence[float] = (0.5, 2.0), samples: int = 1_000_000, seed: int = 0,
                workers: int = 1) -> SuiteResult:
    checks = []
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(int(seed)).spawn(3 * len(ts))]
    for i, t in enumerate(ts):
        fib, tr, hyp, _ = calibrated_areas(t, n)
        checks.append(_mc_check(f"fiber_area_t{t:g}", "area of the Penrose fiber",
                                mc_area_fiber(t, n, samples, seeds[3 * i], workers=workers), fib))
        checks.append(_mc_check(f"transversal_area_t{t:g}", "area of the horizontal line",
                                mc_area_transversal(t, n, samples, seeds[3 * i + 1], workers=workers), tr))
        checks.append(_mc_check(f"hyperplane_area_t{t:g}", "area of the hyperplane",
                                mc_area_hyperplane(t, n, samples, seeds[3 * i + 2], workers=workers), hyp))
    return SuiteResult("areas", checks, {"n": n, "t": list(ts), "samples": samples, "seed": seed})


# -- variational suite --------------------------------------------------------

ANCHOR_FIRST = "first variation of the normalized systole"
ANCHOR_SECOND = "second variation of the normalized systole"


def variation_suite(n: int = 3, samples: int = 200_000, seed: int = 0, kahler: int = 10, mixed: int = 20,
                    directions=None, rel_tol: float = 1e-4, abs_floor: float = 1e-8, nsigma: float = 3.0,
                    workers: int = 1) -> SuiteResult:
    """First and second variation at the normalized Fubini-Study form.

    ``directions`` is a list of ``(name, kind, form)``; by default the
    library of :func:`default_direction_library`.  Analytic-vs-difference
    agreement is ``|a - fd| <= rel_tol * max(|a|, |fd|) + abs_floor``; the floor
    covers directions along which both vanish and only roundoff remains.
    """
    prob = BalancedProblem(n, fs_field, samples, seed, workers)
    if directions is None:
        directions = default_direction_library(n, seed, kahler, mixed)
    checks = []
    for name, kind, mu in directions:
        d = prob.direction(mu)
        fv, sv = prob.first_variation(d), prob.second_variation(d)
        fd1, fd2 = prob.fd_first(d), prob.fd_second(d)
        info = {"kind": kind, "first": fv.to_dict(), "second": sv.to_dict(), "fd_first": fd1, "fd_second": fd2}
        checks.append(_le(f"{name}_first_vs_fd", ANCHOR_FIRST, abs(fv.value - fd1),
                          rel_tol * max(abs(fv.value), abs(fd1)) + abs_floor, **info))
        checks.append(_le(f"{name}_second_vs_fd", ANCHOR_SECOND, abs(sv.value - fd2),
                          rel_tol * max(abs(sv.value), abs(fd2)) + abs_floor))
        if kind in ("kahler", "zero"):
            checks.append(_le(f"{name}_first_vanishes", "Kähler forms are critical points", abs(fv.value),
                              max(1e-6, nsigma * fv.std_error)))
            checks.append(_le(f"{name}_second_vanishes", "Kähler directions lie in the kernel of the Hessian",
                              abs(sv.value), max(1e-6, nsigma * sv.std_error)))
            if kind == "kahler":
                hk = prob.hessian_from_mu(mu)
                checks.append(_le(f"{name}_hessian_vanishes", "Kähler directions lie in the kernel of the Hessian",
                                  abs(hk.value), max(1e-6, nsigma * hk.std_error), hessian=hk.to_dict()))
        checks.append(_le(f"{name}_second_semipositive", "the Hessian at a Kähler form is semi-positive",
                          max(0.0, -sv.value), nsigma * sv.std_error + 1e-12))
    return SuiteResult("variation", checks, {"n": n, "samples": samples, "seed": seed,
                                             "directions": [d[0] for d in directions],
                                             "rel_tol": rel_tol, "abs_floor": abs_floor})


# -- integral geometric formulas ----------------------------------------------

def default_test_functions(m: int = 3) -> list[tuple[str, ConformalFactor]]:
    g1 = ScalarField(m, (Monomial((1,) + (0,) * (m - 1), (1,) + (0,) * (m - 1), 1.0),))
    g2 = ScalarField(m, (Monomial((0, 1) + (1,) * (m - 2), (0, 1) + (1,) * (m - 2), 0.7 + 0.3j),
                         Monomial((1,) + (0,) * (m - 1), (0,) * m, 0.5)))
    return [("constant", ConformalFactor.constant()), ("generator_1", ConformalFactor(g1, 0.5)),
            ("generator_2", ConformalFactor(g2, 0.6))]


def igf_suite(families: Sequence[str] = ("penrose", "equatorial"), n: int = 1, ts: Sequence[float] = (0.5, 2.0),
              samples: int = 200_000, seed: int = 0, workers: int = 1, theta_samples: int | None = 200_000,
              holder: bool = True) -> SuiteResult:
    checks = []
    phis = default_test_functions(2 * n + 1)
    k = 0
    for fam in families:
        for t in ts:
            for name, phi in phis:
                k += 1
                r = igf_verify(fam, phi, t, n, samples, seed + k, theta_samples=theta_samples, workers=workers)
                tol = 3 * r["combined_sigma"] + 1e-12 * max(1.0, abs(r["rhs"]["value"]))
                checks.append(_le(f"igf_{fam}_t{t:g}_{name}", "integral geometric formula", r["residual"], tol,
                                  lhs=r["lhs"], rhs=r["rhs"], theta=r["theta"]))
    if holder:
        chain_cases = [(fam, t) for fam in families for t in ts if not (fam == "penrose" and t > 1)]
        for fam, t in chain_cases:
            for name, phi in [("constant_1", ConformalFactor.constant()), ("constant_2", ConformalFactor.constant(2.0)),
                              phis[1]]:
                k += 1
                r = holder_chain_check(fam, phi, t, n, samples, seed + k, workers=workers)
                anchor = "Hölder chain of conformal systolic maximality"
                tag = f"holder_{fam}_t{t:g}_{name}"
                gap, sg = r["holder_gap"], r["holder_gap_sigma"]
                floor = 1e-12 * max(1.0, abs(r["holder_bound"]))
                checks.append(_le(f"{tag}_igf", anchor, r["igf_residual"], 3 * r["igf_sigma"] + floor))
                checks.append(_le(f"{tag}_inequality", anchor, max(0.0, -gap), 3 * sg + floor,
                                  gap=gap, gap_sigma=sg))
                if phi.is_constant:
                    checks.append(_le(f"{tag}_equality", anchor, abs(gap), 3 * sg + floor, gap_sigma=sg))
                else:
                    # strictness: the gap must clear its own noise band
                    checks.append(Check(f"{tag}_strict", anchor, gap, 3 * sg + floor, bool(r["holder_strict"]),
                                        {"gap_sigma": sg}))
                mn, sysn = r["min_normalized_member"], r["sys_nor_g"]
                checks.append(_le(f"{tag}_systolic_bound", anchor, max(0.0, mn - sysn),
                                  3 * r["min_normalized_sigma"] + 1e-12 * sysn, min_normalized_member=mn,
                                  sys_nor_g=sysn))
    dn = denseness_check(n, 1000, seed)
    checks.append(_le("denseness_fibers", "the family covers the manifold", dn["fiber_membership_residual"], 1e-10))
    checks.append(_le("denseness_hyperplanes", "the family covers the manifold",
                      dn["hyperplane_membership_residual"], 1e-10))
    return SuiteResult("igf", checks, {"families": list(families), "n": n, "t": list(ts), "samples": samples,
                                       "seed": seed, "theta_samples": theta_samples})
