"""Rank-k kernel machinery: sum-of-rank-1 sampling, the Fourier
factorization, and the exponent-bookkeeping certificates.

A rank-k orbit point is reached almost surely by adding k independent rank-1
points, and the Fourier transform of the rank-k kernel measure factors into
the k-th power of the rank-1 transform.  Pointwise evaluation of the rank-k
kernel itself (a fiber integral over a homogeneous space) is deliberately
not implemented; the measure-level identities are what the verification
needs, and the certificates record the exponent arithmetic that powers the
square-integrability proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import models
from .engine import Estimate, QuadratureSpec, batch_means, child_rng, divergence_scan, half_line_edges, panel_nodes
from .kernels import BesselKernel, upsilon, _radial_weights
from .models import AlgebraElement, CaseDescriptor
from .registry import bessel_parameter, lookup_case


@dataclass(frozen=True)
class Rank1Sampler:
    """Inverse-CDF sampler for the normalized rank-1 radial law
    upsilon(z) z^(dn-1) / mass."""

    case: CaseDescriptor
    z_grid: np.ndarray
    cdf: np.ndarray
    mass: float
    seed: int

    @property
    def radial_cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        return self.z_grid, self.cdf


def build_rank1_sampler(case: CaseDescriptor, seed: int = 0, table_size: int = 4096) -> Rank1Sampler:
    """Tabulate the radial CDF on a log-spaced grid with sub-1e-10 tail mass
    outside [z_min, z_max]."""
    kern = BesselKernel.for_case(case)
    a = case.d * case.n - 1

    def dens(z: np.ndarray) -> np.ndarray:
        return upsilon(kern, z) * z**a

    z_lo, z_hi = 1e-7, 80.0
    grid = np.geomspace(z_lo, z_hi, table_size)
    cdf = np.zeros(table_size)
    x16, w16 = np.polynomial.legendre.leggauss(16)
    lo = np.concatenate([[0.0], grid[:-1]])
    hi = grid
    mid = 0.5 * (hi + lo)[:, None] + 0.5 * (hi - lo)[:, None] * x16[None, :]
    pw = 0.5 * (hi - lo)[:, None] * w16[None, :]
    # the integrand is integrable at 0 (z^{d(n-1)+e} up to a log), so the
    # first panel starting at 0 is handled by open Gauss nodes
    panel = np.sum(pw * dens(mid.ravel()).reshape(mid.shape), axis=1)
    cdf = np.cumsum(panel)
    mass = float(cdf[-1])
    cdf = cdf / mass
    if np.any(np.diff(cdf) <= 0):
        raise ArithmeticError("radial CDF table is not strictly monotone")
    return Rank1Sampler(case=case, z_grid=grid, cdf=cdf, mass=mass, seed=seed)


def sample_radii(sampler: Rank1Sampler, rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    return np.interp(u, sampler.cdf, sampler.z_grid)


def sample_rank1_batch(sampler: Rank1Sampler, rng: np.random.Generator, size: int) -> np.ndarray:
    """Stacked matrices of z * (m . y1) with z from the radial law, m Haar."""
    case = sampler.case
    z = sample_radii(sampler, rng, size)
    factors = models.haar_sample_batch(case, rng, size)
    return models.orbit_points_batch(case, factors, z[:, None])


def sample_rank1(sampler: Rank1Sampler, rng: np.random.Generator) -> AlgebraElement:
    return AlgebraElement(sampler.case, sample_rank1_batch(sampler, rng, 1)[0])


def sum_sample_rankk_batch(
    case: CaseDescriptor, k: int, rng: np.random.Generator, size: int, sampler: Rank1Sampler | None = None
) -> np.ndarray:
    if not 1 <= k <= case.n:
        raise ValueError(f"k must be in [1, {case.n}]")
    if sampler is None:
        sampler = build_rank1_sampler(case)
    out = sample_rank1_batch(sampler, rng, size)
    for _ in range(k - 1):
        out = out + sample_rank1_batch(sampler, rng, size)
    return out


def sum_sample_rankk(case: CaseDescriptor, k: int, rng: np.random.Generator) -> AlgebraElement:
    """Sum of k independent rank-1 samples; lands on the rank-k orbit a.s."""
    return AlgebraElement(case, sum_sample_rankk_batch(case, k, rng, 1)[0])


def rankk_fourier_mc(
    case: CaseDescriptor,
    k: int,
    x: AlgebraElement,
    nsamples: int,
    seed: int,
) -> Estimate:
    """mass^k times the Monte Carlo mean of exp(-i <x, Y>) over sums Y of k
    independent rank-1 draws; the factorization predicts rank1_fourier(x)^k."""
    if x.case != case:
        raise models.CaseMismatchError("element does not belong to the case")
    sampler = build_rank1_sampler(case, seed=seed)
    chunk = 1 << 14
    vals = np.empty(nsamples, dtype=complex)
    pos, i = 0, 0
    while pos < nsamples:
        size = min(chunk, nsamples - pos)
        rng = child_rng(seed, i)
        y = sum_sample_rankk_batch(case, k, rng, size, sampler)
        c = models.pairing_batch(case, np.broadcast_to(x.entries, y.shape), y)
        vals[pos : pos + size] = np.exp(-1j * c)
        pos += size
        i += 1
    mean, se = batch_means(vals)
    scale = sampler.mass**k
    value = complex(mean) * scale
    return Estimate(
        value=value,
        std_error=se * scale,
        samples_used=nsamples,
        truncation_trace=((80.0, value),),
    )


# ---------------------------------------------------------------------------
# exponent bookkeeping

@dataclass(frozen=True)
class L2Certificate:
    """Machine-checked exponent arithmetic behind the square-integrability
    proof for the rank-k kernel, k < n.

    t is the power of the sub-algebra norm under the measure change,
    s = t + 2(e+1-d) > 0 splits as l1 + l2 with both parts admissible
    (the complex symmetric family needs l1, l2 >= 1)."""

    case_id: str
    n: int
    k: int
    t: int
    s: int
    l1: int
    l2: int
    branch: str

    def __post_init__(self) -> None:
        if not 1 <= self.k < self.n:
            raise ValueError("certificates exist for 1 <= k < n")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.l1 + self.l2 != self.s:
            raise ValueError("l1 + l2 must equal s")
        if self.branch == "sp_c" and (self.l1 < 1 or self.l2 < 1):
            raise ValueError("the sp_c branch needs l1, l2 >= 1")
        if self.branch == "generic" and self.l1 != 0:
            raise ValueError("the generic branch sets l1 = 0")


def l2_certificate(case: CaseDescriptor, k: int) -> L2Certificate:
    """Exact-arithmetic certificate for the rank-k square-integrability
    bookkeeping; rejects k = n (open orbit, different statement)."""
    if k == case.n:
        raise ValueError("k = n is out of scope: the certificate covers non-open orbits")
    if not 1 <= k < case.n:
        raise ValueError(f"k must be in [1, {case.n - 1}]")
    d, e, n = case.d, case.e, case.n
    t = d * (n - k + 1) - (e + 1)
    s = d * (n - k - 1) + (e + 1)
    assert s == t + 2 * (e + 1 - d)
    branch = "sp_c" if case.case_id == "sp_c" else "generic"
    if branch == "sp_c":
        l1, l2 = 1, s - 1
    else:
        l1, l2 = 0, s
    return L2Certificate(case_id=case.case_id, n=n, k=k, t=t, s=s, l1=l1, l2=l2, branch=branch)


# ---------------------------------------------------------------------------
# rank-1 square integral and stability

def g_l2_rank1(case: CaseDescriptor, quad: QuadratureSpec) -> dict:
    """Square integral of the rank-1 kernel against its orbit measure,
    computed directly and through the measure-change exponent dictionary.

    Both routes must be finite and agree; for the real full model at n = 2
    the direct value is the classical 1/2.
    """
    if case.n < 2:
        raise ValueError("needs n >= 2 (rank-1 orbit must be non-open)")
    kern = BesselKernel.for_case(case)
    a = case.d * case.n - 1

    def direct(z: np.ndarray) -> np.ndarray:
        return upsilon(kern, z) ** 2 * z**a

    # measure-change route: |upsilon|^2 |phi~|^t against the rank-1
    # sub-algebra Lebesgue density z^e, with t = d(n-1+1) - (e+1)
    t = case.d * case.n - (case.e + 1)

    def reduced(z: np.ndarray) -> np.ndarray:
        return upsilon(kern, z) ** 2 * z**t * z**case.e

    edges = half_line_edges(rmax=quad.truncation_radii[-1], r0=1.0, inner=1e-7)
    z, w = panel_nodes(edges, quad.points_per_axis)
    cum_direct = np.cumsum(w * direct(z))
    cums = {}
    for r in quad.truncation_radii:
        idx = np.searchsorted(z, r)
        cums[float(r)] = float(cum_direct[idx - 1]) if idx > 0 else 0.0
    scan = divergence_scan(cums.__getitem__, quad.truncation_radii)
    val_direct = float(np.sum(w * direct(z)))
    val_reduced = float(np.sum(w * reduced(z)))
    ratio = val_direct / val_reduced
    ok = scan.verdict == "finite" and abs(ratio - 1.0) < 1e-12
    return {
        "value": val_direct,
        "reduced_value": val_reduced,
        "ratio": ratio,
        "scan": scan.verdict,
        "verdict": "pass" if ok else ("inconclusive" if scan.verdict == "inconclusive" else "fail"),
    }


def stability_restriction_check(case: CaseDescriptor, k: int, n_grid: int = 100) -> dict:
    """Kernel-level stability: the rank-1 kernel of the rank-k leading
    subalgebra (same multiplicities) coincides with the ambient one.

    Checks that the Bessel order agrees exactly and the kernels are equal
    pointwise on a grid."""
    if not 1 <= k < case.n:
        raise ValueError(f"k must be in [1, {case.n - 1}]")
    sub = lookup_case(case.case_id, k)
    tau_big = bessel_parameter(case)
    tau_sub = bessel_parameter(sub)
    grid = np.geomspace(0.05, 20.0, n_grid)
    big = upsilon(BesselKernel(case, tau_big), grid)
    small = upsilon(BesselKernel(sub, tau_sub), grid)
    dev = float(np.max(np.abs(big / small - 1.0)))
    ok = tau_big == tau_sub and dev <= 1e-12
    return {
        "tau_ambient": tau_big,
        "tau_sub": tau_sub,
        "max_rel_deviation": dev,
        "verdict": "pass" if ok else "fail",
    }
