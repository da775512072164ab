"""Shared numerical machinery: quadrature, seeded streams, divergence scans.

All randomness flows through ``child_rng``: child index ``i`` of master seed
``s`` is a pure function of ``(s, i)``, so the stream owned by one work chunk
never depends on how many chunks exist.  Monte Carlo reductions run in fixed
chunk order, which makes every estimate bitwise reproducible for a fixed
(seed, chunk-count) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

_MODES = ("deterministic", "monte_carlo", "hybrid")

#: default nested truncation radii for divergence scans
DEFAULT_RADII = tuple(2.0 * 2**j for j in range(9))

MC_CHUNK = 1 << 14
N_BATCHES = 32


class PoisonedSampleError(ValueError):
    """A Monte Carlo integrand produced a non-finite value."""

    def __init__(self, chunk_index: int, detail: str = ""):
        self.chunk_index = chunk_index
        super().__init__(
            f"non-finite integrand value in chunk {chunk_index}" + (f": {detail}" if detail else "")
        )


class CapabilityError(ValueError):
    """The requested computation exceeds what this engine supports."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution and seeding knobs shared by all integrators."""

    points_per_axis: int = 16
    truncation_radii: tuple[float, ...] = DEFAULT_RADII
    mc_samples: int = 100_000
    seed: int = 0
    mode: str = "deterministic"

    def __post_init__(self) -> None:
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be >= 8")
        if len(self.truncation_radii) < 2:
            raise ValueError("need at least two truncation radii")
        radii = tuple(float(r) for r in self.truncation_radii)
        if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
            raise ValueError("truncation radii must be positive and ascending")
        object.__setattr__(self, "truncation_radii", radii)
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")


@dataclass(frozen=True)
class Estimate:
    """A numerical integral value with provenance.

    ``std_error`` is zero exactly when the value came from a deterministic
    rule.  ``truncation_trace`` records the cumulative value at each nested
    truncation radius (always at least one entry).
    """

    value: complex
    std_error: float
    samples_used: int
    truncation_trace: tuple[tuple[float, complex], ...]

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if not self.truncation_trace:
            raise ValueError("truncation_trace must be nonempty")

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Deterministic child stream ``index`` of master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def gauss_nodes(npoints: int, interval: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on an interval."""
    if npoints < 2:
        raise ValueError("need at least 2 points")
    a, b = interval
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def panel_nodes(edges: Sequence[float], npoints: int) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated Gauss rules on the panels defined by ``edges``."""
    if len(edges) < 2:
        raise ValueError("need at least one panel")
    x, w = np.polynomial.legendre.leggauss(npoints)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            raise ValueError("panel edges must be strictly increasing")
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def half_line_edges(
    rmax: float,
    r0: float = 1.0,
    inner: float = 0.0,
    max_len: float = math.inf,
) -> list[float]:
    """Panel edges [0, .., rmax]: geometric refinement below ``r0`` down to
    ``inner`` (when positive), doubling panels above, each split so no panel
    exceeds ``max_len``.
    """
    edges = [0.0]
    if inner > 0.0:
        e = inner
        sub = []
        while e < r0:
            sub.append(e)
            e *= 2.0
        edges += sub
    edges.append(r0)
    e = r0
    while e < rmax:
        e = min(2.0 * e, rmax)
        edges.append(e)
    if math.isfinite(max_len):
        refined = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            pieces = max(1, int(math.ceil((b - a) / max_len)))
            refined += [a + (b - a) * (i + 1) / pieces for i in range(pieces)]
        edges = refined
    return edges


def integrate_half_line(
    fvals: Callable[[np.ndarray], np.ndarray],
    rmax: float = 64.0,
    npoints: int = 24,
    r0: float = 1.0,
    inner: float = 0.0,
    max_len: float = math.inf,
    tail_tol: float = 1e-12,
    max_extensions: int = 8,
) -> float:
    """Integrate a decaying function on [0, inf) by doubling panels.

    The radius list is extended until the last panel contributes less than
    ``tail_tol`` of the running total (or the extension budget runs out).
    """
    edges = half_line_edges(rmax, r0=r0, inner=inner, max_len=max_len)
    z, w = panel_nodes(edges, npoints)
    total = float(np.sum(w * fvals(z)))
    lo = edges[-1]
    for _ in range(max_extensions):
        hi = 2.0 * lo
        z, w = panel_nodes([lo, hi], npoints)
        last = float(np.sum(w * fvals(z)))
        total += last
        if abs(last) <= tail_tol * max(abs(total), 1e-300):
            return total
        lo = hi
    return total


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES) -> tuple[complex, float]:
    """Mean and standard error of the mean via batch means."""
    n = len(values)
    if n < n_batches:
        n_batches = max(1, n)
    usable = (n // n_batches) * n_batches
    batches = values[:usable].reshape(n_batches, -1).mean(axis=1)
    mean = values.mean()
    if n_batches < 2:
        return complex(mean), 0.0
    se = float(np.sqrt(np.sum(np.abs(batches - batches.mean()) ** 2) / (n_batches * (n_batches - 1))))
    return complex(mean), se


def mc_integrate(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    integrand: Callable[[np.ndarray], np.ndarray],
    nsamples: int,
    seed: int,
    stream_offset: int = 0,
) -> Estimate:
    """Monte Carlo mean of ``integrand`` over ``sampler`` draws.

    ``sampler(rng, size)`` returns a batch of sample points (leading axis =
    size); the integrand maps a batch to a batch of values.  The estimate is
    the plain sample mean, so the sampler is expected to be a normalized
    probability law (importance weights belong inside the integrand).
    """
    nchunks = max(1, math.ceil(nsamples / MC_CHUNK))
    values = np.empty(nsamples, dtype=complex)
    pos = 0
    for i in range(nchunks):
        size = min(MC_CHUNK, nsamples - pos)
        rng = child_rng(seed, stream_offset + i)
        vals = np.asarray(integrand(sampler(rng, size)), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise PoisonedSampleError(i)
        values[pos : pos + size] = vals
        pos += size
    mean, se = batch_means(values)
    if np.all(np.isreal(values)):
        mean = mean.real
    return Estimate(
        value=mean,
        std_error=se,
        samples_used=nsamples,
        truncation_trace=((math.inf, mean),),
    )


@dataclass(frozen=True)
class ScanResult:
    verdict: str  # "finite" | "divergent" | "inconclusive"
    trace: tuple[tuple[float, float], ...]
    growth_exponent: float = math.nan  # log2 of the last increment ratio


def divergence_scan(
    integral_at_radius: Callable[[float], float],
    radii: Sequence[float] = DEFAULT_RADII,
) -> ScanResult:
    """Classify a truncated integral R -> I(R) as finite or divergent.

    Finite when the last doubling changes the value by < 1%, or when the
    shell increments decay geometrically (fitted growth exponent <= -0.1).
    Divergent when the increments stay positive with growth exponent
    >= -0.02; this catches power growth as well as the borderline
    logarithmic case, whose increments are asymptotically constant.
    Anything in between is reported as inconclusive.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    vals = np.array([float(integral_at_radius(r)) for r in radii])
    trace = tuple(zip(radii, (float(v) for v in vals)))
    deltas = np.diff(vals)
    scale = max(abs(vals[-1]), 1e-300)

    if abs(deltas[-1]) / scale < 1e-2:
        return ScanResult("finite", trace, -math.inf if deltas[-1] == 0 else math.nan)

    tail = deltas[-3:] if len(deltas) >= 3 else deltas
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.abs(deltas[1:]) / np.abs(deltas[:-1])
    last_ratios = ratios[-3:] if len(ratios) >= 3 else ratios
    if len(last_ratios) == 0 or np.any(~np.isfinite(last_ratios)):
        return ScanResult("inconclusive", trace)
    p_hat = float(np.median(np.log2(last_ratios)))

    if np.all(tail > 0) and p_hat >= -0.02:
        return ScanResult("divergent", trace, p_hat)
    if p_hat <= -0.1:
        return ScanResult("finite", trace, p_hat)
    return ScanResult("inconclusive", trace, p_hat)
