"""Monte Carlo integration over complex projective spaces and their hyperplanes.

Samples of the Fubini-Study probability measure are normalized complex
Gaussian vectors pushed to the affine chart.  Samples are drawn in fixed-size
chunks, each with its own stream spawned from the master seed, so results do
not depend on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

CHUNK = 1 << 14


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: int

    def within(self, exact: float, nsigma: float = 3.0, floor: float = 1e-12) -> bool:
        """``|value - exact| <= nsigma * std_error + floor * max(1, |exact|)``.

        The floor matters only for integrands that are constant on the sample
        set, where the standard error is zero.
        """
        return abs(self.value - exact) <= nsigma * self.std_error + floor * max(1.0, abs(exact))

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "samples": self.samples, "seed": self.seed}


def gaussian_sphere(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    """Uniform points on the unit sphere of ``C^dim``."""
    g = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_cpn(m: int, size: int, rng: np.random.Generator, radius: float | None = None) -> np.ndarray:
    """Chart coordinates of FS-uniform points of ``CP^m``; optionally kept inside ``|z| <= radius``."""
    Z = gaussian_sphere(rng, size, m + 1)
    z = Z[:, 1:] / Z[:, :1]
    if radius is not None:
        bad = np.linalg.norm(z, axis=1) > radius
        while np.any(bad):
            Z = gaussian_sphere(rng, int(bad.sum()), m + 1)
            z[bad] = Z[:, 1:] / Z[:, :1]
            bad = np.linalg.norm(z, axis=1) > radius
    return z


def hyperplane_normal(m: int) -> np.ndarray:
    """Default hyperplane ``Z_m = 0`` (the last homogeneous coordinate)."""
    c = np.zeros(m + 1, dtype=complex)
    c[-1] = 1.0
    return c


def sample_hyperplane(m: int, size: int, rng: np.random.Generator, normal=None) -> np.ndarray:
    """FS-uniform points of the hyperplane ``<normal, Z> = 0`` in ``CP^m``, in chart coordinates."""
    c = hyperplane_normal(m) if normal is None else np.asarray(normal, dtype=complex)
    c = c / np.linalg.norm(c)
    Z = gaussian_sphere(rng, size, m + 1)
    Z = Z - np.outer(Z @ c.conj(), c)
    Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    return Z[:, 1:] / Z[:, :1]


def chunk_rngs(seed: int, samples: int, chunk: int = CHUNK) -> list[tuple[np.random.Generator, int]]:
    if samples < 2:
        raise ValueError("need at least 2 samples")
    counts = [chunk] * (samples // chunk)
    if samples % chunk:
        counts.append(samples % chunk)
    seqs = np.random.SeedSequence(int(seed)).spawn(len(counts))
    return [(np.random.default_rng(s), c) for s, c in zip(seqs, counts)]


def map_samples(fn: Callable[[np.ndarray], np.ndarray], sampler: Callable, samples: int, seed: int,
                workers: int = 1) -> np.ndarray:
    """Evaluate ``fn`` on ``samples`` points drawn chunkwise; returns values with samples on the last axis."""
    jobs = chunk_rngs(seed, samples)

    def run(job):
        rng, count = job
        return np.asarray(fn(sampler(rng, count)))

    if workers <= 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, jobs))
    return np.concatenate(parts, axis=-1)


def cpn_sampler(m: int):
    return lambda rng, count: sample_cpn(m, count, rng)


def hyperplane_sampler(m: int, normal=None):
    return lambda rng, count: sample_hyperplane(m, count, rng, normal)


def estimate_mean(values: np.ndarray, scale: float, samples: int, seed: int) -> McEstimate:
    values = np.asarray(values, dtype=float)
    se = float(np.std(values, ddof=1) / math.sqrt(values.shape[-1]))
    return McEstimate(float(np.mean(values)) * scale, se * abs(scale), samples, seed)


def mc_integrate_cpn(integrand: Callable[[np.ndarray], np.ndarray], m: int, samples: int, seed: int,
                     workers: int = 1) -> McEstimate:
    """``int_{CP^m} f dV_FS = mean(f) / m!``; ``integrand`` maps chart points (N, m) to (N,)."""
    vals = map_samples(integrand, cpn_sampler(m), samples, seed, workers)
    return estimate_mean(vals, 1.0 / math.factorial(m), samples, seed)


def mc_integrate_hyperplane(integrand: Callable[[np.ndarray], np.ndarray], m: int, samples: int, seed: int,
                            normal=None, workers: int = 1) -> McEstimate:
    """``int f dV_FS`` over the hyperplane ``CP^{m-1}`` of ``CP^m``, equal to ``mean(f) / (m-1)!``."""
    vals = map_samples(integrand, hyperplane_sampler(m, normal), samples, seed, workers)
    return estimate_mean(vals, 1.0 / math.factorial(m - 1), samples, seed)


def delta_method(fn: Callable[..., float], groups: Sequence[np.ndarray], seed: int = 0,
                 rel_step: float = 1e-6) -> McEstimate:
    """Value and standard error of ``fn(means_1, means_2, ...)``.

    Each group is an array ``(k_i, N_i)`` of per-sample integrand values from
    one independent sample set; groups are treated as independent and the
    gradient is taken by central differences.
    """
    groups = [np.atleast_2d(np.asarray(g, dtype=float)) for g in groups]
    means = [g.mean(axis=1) for g in groups]
    value = float(fn(*means))
    var = 0.0
    for gi, g in enumerate(groups):
        grad = np.zeros(g.shape[0])
        for j in range(g.shape[0]):
            h = rel_step * max(1.0, abs(means[gi][j]))
            up = [m.copy() for m in means]
            dn = [m.copy() for m in means]
            up[gi][j] += h
            dn[gi][j] -= h
            grad[j] = (fn(*up) - fn(*dn)) / (2 * h)
        cov = np.atleast_2d(np.cov(g)) / g.shape[1]
        var += float(grad @ cov @ grad)
    samples = int(sum(g.shape[1] for g in groups))
    return McEstimate(value, math.sqrt(max(var, 0.0)), samples, seed)
