"""Polar densities of the equivariant orbit measures and their integrators.

The radial coordinate of the rank-k orbit is an ordered tuple
z_1 > ... > z_k > 0.  With P = prod z_i and V = prod_{i<j} (z_i^2 - z_j^2),
the Lebesgue measure has radial density P^(e+1) V^d dz/P and the rank-k
equivariant measure has density [P^(n-k+1) V]^d dz/P.  The overall constants
relating polar and flat integrals are never computed; every verification here
is a ratio in which they cancel.

Cone integrals run in ratio coordinates z_i = z_1 u_2 ... u_i, which turn the
ordered cone into a box and keep the integrand smooth (no |V| kink), with the
outermost coordinate z_1 carrying the truncation radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import models
from .engine import (
    CapabilityError,
    Estimate,
    QuadratureSpec,
    batch_means,
    child_rng,
    divergence_scan,
    panel_nodes,
)
from .models import CaseDescriptor, LeviElement

_CHUNK_ROWS = 1 << 18  # max matrices materialized at once


class IntegralDivergenceError(ArithmeticError):
    """The truncation trace of an integral keeps growing."""

    def __init__(self, trace):
        self.trace = tuple(trace)
        super().__init__(f"integral diverges under domain doubling: trace={self.trace}")


@dataclass(frozen=True)
class ConePoint:
    """Strictly decreasing positive radial coordinates."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise ValueError("cone point cannot be empty")
        if vals[-1] <= 0 or any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("entries must be strictly decreasing and positive")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DensityValue:
    """Log of a radial density weight relative to prod dz_i."""

    log_value: float

    @property
    def boundary(self) -> bool:
        return self.log_value == -math.inf

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if not self.boundary else 0.0


def _log_PV(z: Sequence[float]) -> tuple[float, float]:
    z = np.asarray(z, dtype=float)
    logP = float(np.sum(np.log(z))) if np.all(z > 0) else -math.inf
    diffs = z[:, None] ** 2 - z[None, :] ** 2
    iu = np.triu_indices(len(z), k=1)
    vals = diffs[iu]
    if len(vals) == 0:
        return logP, 0.0
    if np.any(vals <= 0):
        return logP, -math.inf
    return logP, float(np.sum(np.log(vals)))


def density_open(case: CaseDescriptor, z: ConePoint) -> DensityValue:
    """Radial density of the Lebesgue measure: P^e V^d relative to dz."""
    if len(z) != case.n:
        raise ValueError(f"open-orbit density needs length n={case.n}")
    logP, logV = _log_PV(z.values)
    if logP == -math.inf or logV == -math.inf:
        return DensityValue(-math.inf)
    return DensityValue(case.e * logP + case.d * logV)


def density_rank_k(case: CaseDescriptor, k: int, z: ConePoint) -> DensityValue:
    """Radial density of the rank-k orbit measure: P^(d(n-k+1)-1) V^d."""
    if not 1 <= k <= case.n:
        raise ValueError(f"k must be in [1, {case.n}]")
    if len(z) != k:
        raise ValueError(f"rank-{k} density needs length {k}")
    logP, logV = _log_PV(z.values)
    if logP == -math.inf or logV == -math.inf:
        return DensityValue(-math.inf)
    a = case.d * (case.n - k + 1) - 1
    return DensityValue(a * logP + case.d * logV)


def jacobian_Ta(case: CaseDescriptor, a_exponents: Sequence[float]) -> float:
    """|det T_a| up to a fixed constant, for a = exp(sum c_i h_i).

    Provided for documentation and the indirect change-of-variables test;
    its standalone constant is not determined.
    """
    c = np.asarray(a_exponents, dtype=float)
    if len(c) != case.n:
        raise ValueError(f"need {case.n} exponents")
    total = float(np.sum(c))
    diffs = np.exp(4.0 * c[:, None]) - np.exp(4.0 * c[None, :])
    iu = np.triu_indices(case.n, k=1)
    prod = float(np.prod(np.abs(diffs[iu]))) if case.n > 1 else 1.0
    return math.exp(-2.0 * case.d * (case.n - 1) * total) * prod**case.d


# ---------------------------------------------------------------------------
# radial grids (ratio coordinates)

def _radial_exponent(case: CaseDescriptor, k: int, density: str) -> int:
    if density == "orbit":
        return case.d * (case.n - k + 1) - 1
    if density == "lebesgue":
        if k != case.n:
            raise ValueError("the Lebesgue density lives at k = n")
        return case.e
    raise ValueError(f"unknown density {density!r}")


def cone_grid(
    case: CaseDescriptor,
    k: int,
    quad: QuadratureSpec,
    density: str = "orbit",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes Z (N, k), weights W (N,) and outer radii z_1 (N,) such that
    sum W f(z) approximates the density integral over the ordered cone."""
    radii = quad.truncation_radii
    pts = quad.points_per_axis
    edges = [0.0, radii[0] / 4.0, radii[0] / 2.0] + list(radii)
    z1, w1 = panel_nodes(edges, pts)
    if k == 1:
        Z = z1[:, None]
        W = w1.copy()
    else:
        u, wu = panel_nodes([0.0, 0.5, 1.0], pts)
        axes = [z1] + [u] * (k - 1)
        wts = [w1] + [wu] * (k - 1)
        mesh = np.meshgrid(*axes, indexing="ij")
        wmesh = np.meshgrid(*wts, indexing="ij")
        Z = np.empty(mesh[0].shape + (k,))
        Z[..., 0] = mesh[0]
        for i in range(1, k):
            Z[..., i] = Z[..., i - 1] * mesh[i]
        W = np.ones_like(mesh[0])
        for wm in wmesh:
            W = W * wm
        # dz_1..dz_k = (z_1 ... z_{k-1}) dz_1 du_2..du_k
        W = W * np.prod(Z[..., : k - 1], axis=-1)
        Z = Z.reshape(-1, k)
        W = W.reshape(-1)
    a = _radial_exponent(case, k, density)
    P = np.prod(Z, axis=1)
    V = np.ones(len(Z))
    for i in range(k):
        for j in range(i + 1, k):
            V *= Z[:, i] ** 2 - Z[:, j] ** 2
    W = W * P**a * V**case.d
    return Z, W, Z[:, 0]


# ---------------------------------------------------------------------------
# quadrature over the compact group M

@dataclass(frozen=True)
class MQuadrature:
    factors: tuple[np.ndarray, ...]  # stacked (count, size, size) per slot
    weights: np.ndarray  # (count,)
    deterministic: bool

    @property
    def count(self) -> int:
        return len(self.weights)


def _rotations(theta: np.ndarray, sector: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    m = np.empty(theta.shape + (2, 2))
    m[..., 0, 0] = c
    m[..., 1, 0] = s
    m[..., 0, 1] = -s * sector
    m[..., 1, 1] = c * sector
    return m


def m_quadrature_deterministic(
    case: CaseDescriptor, n_angles: int = 16, n_theta: int = 12
) -> MQuadrature:
    """Exact-Haar product grids over M; available for the rank-2 real full
    model (two O(2) factors) and the rank-2 complex symmetric model (U(2))."""
    if case.case_id == "gl_r" and case.n == 2:
        th = 2.0 * np.pi * np.arange(n_angles) / n_angles
        sec = np.array([1.0, -1.0])
        Ta, Sa, Tb, Sb = np.meshgrid(th, sec, th, sec, indexing="ij")
        A = _rotations(Ta.ravel(), Sa.ravel())
        B = _rotations(Tb.ravel(), Sb.ravel())
        n = len(A)
        return MQuadrature((A, B), np.full(n, 1.0 / n), True)
    if case.case_id == "sp_c" and case.n == 2:
        ang = 2.0 * np.pi * np.arange(n_angles) / n_angles
        tg, tw = panel_nodes([0.0, np.pi / 2.0], n_theta)
        Al, Ps, Ch, Th = np.meshgrid(ang, ang, ang, tg, indexing="ij")
        Wt = np.broadcast_to(tw, Th.shape) * np.sin(2.0 * Th)
        ca, sa = np.cos(Th), np.sin(Th)
        m = np.empty(Th.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = np.exp(1j * (Al + Ps)) * ca
        m[..., 0, 1] = np.exp(1j * (Al + Ch)) * sa
        m[..., 1, 0] = -np.exp(1j * (Al - Ch)) * sa
        m[..., 1, 1] = np.exp(1j * (Al - Ps)) * ca
        w = Wt.ravel()
        return MQuadrature((m.reshape(-1, 2, 2),), w / w.sum(), True)
    raise CapabilityError(
        f"no deterministic M-grid for case {case.case_id!r} at n={case.n}; "
        "use hybrid or monte_carlo mode"
    )


def m_quadrature_haar(case: CaseDescriptor, rng: np.random.Generator, count: int) -> MQuadrature:
    factors = models.haar_sample_batch(case, rng, count)
    return MQuadrature(factors, np.full(count, 1.0 / count), False)


def _outer_basis(case: CaseDescriptor, mq: MQuadrature, k: int) -> np.ndarray:
    """Rank-1 building blocks: for each compact element m the matrices
    m . y_a, stacked as (count, k, size, size); then m . z = sum_a z_a (m . y_a)."""
    if case.model_kind == "full_matrix":
        A, B = mq.factors
        at = np.swapaxes(A[:, :, :k], 1, 2)
        bt = np.swapaxes(B[:, :, :k], 1, 2)
        return at[:, :, :, None] * bt[:, :, None, :]
    (U,) = mq.factors
    if case.model_kind == "symmetric_matrix":
        ut = np.swapaxes(U[:, :, :k], 1, 2)
        return ut[:, :, :, None] * ut[:, :, None, :]
    et = np.swapaxes(U[:, :, 0 : 2 * k : 2], 1, 2)
    ot = np.swapaxes(U[:, :, 1 : 2 * k + 1 : 2], 1, 2)
    x = et[:, :, :, None] * ot[:, :, None, :]
    return x - np.swapaxes(x, -1, -2)


def _orbit_entries(case: CaseDescriptor, mq: MQuadrature, Z: np.ndarray) -> np.ndarray:
    """Matrices of m_i . z_j, shape (count, nz, size, size)."""
    k = Z.shape[1]
    size = models.matrix_size(case)
    basis = _outer_basis(case, mq, k).reshape(mq.count, k, size * size)
    flat = np.matmul(Z[None, :, :].astype(basis.dtype), basis)
    return flat.reshape(mq.count, len(Z), size, size)


Integrand = Callable[[np.ndarray], np.ndarray]


def _m_average(
    case: CaseDescriptor, f: Integrand, mq: MQuadrature, Z: np.ndarray
) -> np.ndarray:
    """g(z) = sum_m w_m f(m . z) for each cone node, chunked over z."""
    nz = len(Z)
    k = Z.shape[1]
    size = models.matrix_size(case)
    basis = _outer_basis(case, mq, k).reshape(mq.count, k, size * size)
    out = np.empty(nz, dtype=complex)
    chunk = max(1, _CHUNK_ROWS // max(mq.count, 1))
    for lo in range(0, nz, chunk):
        hi = min(nz, lo + chunk)
        flat = np.matmul(Z[lo:hi][None, :, :].astype(basis.dtype), basis)
        ent = flat.reshape(mq.count * (hi - lo), size, size)
        vals = np.asarray(f(ent), dtype=complex).reshape(mq.count, hi - lo)
        out[lo:hi] = mq.weights @ vals
    if np.allclose(out.imag, 0.0, atol=1e-300):
        return out.real
    return out


def _trace_from_bins(z1: np.ndarray, contrib: np.ndarray, radii: Sequence[float]):
    return tuple(
        (float(r), complex(np.sum(contrib[z1 <= r]))) for r in radii
    )


def integrate_polar(
    case: CaseDescriptor,
    k: int,
    f: Integrand,
    quad: QuadratureSpec,
    density: str = "orbit",
    m_angles: Optional[int] = None,
) -> Estimate:
    """Polar integral of f against the rank-k orbit density (or the Lebesgue
    density at k = n), with the overall constant fixed to 1.

    The integrand is a vectorized callable on stacked model matrices.  The
    M-average uses the deterministic grid where one exists, Haar Monte Carlo
    otherwise (mode='hybrid'), or joint importance sampling
    (mode='monte_carlo').  ``m_angles`` overrides the angular resolution of
    the deterministic grid (trapezoid rules are exact once it exceeds the
    trigonometric degree of the integrand).
    """
    if not 1 <= k <= case.n:
        raise ValueError(f"k must be in [1, {case.n}]")
    if quad.mode == "monte_carlo":
        return _integrate_polar_mc(case, k, f, quad, density)
    Z, W, z1 = cone_grid(case, k, quad, density)
    if quad.mode == "deterministic":
        mq = m_quadrature_deterministic(case, n_angles=m_angles or max(16, quad.points_per_axis))
    else:
        count = int(np.clip(quad.mc_samples // max(len(Z), 1), 64, 8192))
        mq = m_quadrature_haar(case, rng=child_rng(quad.seed, 0), count=count)
    g = _m_average(case, f, mq, Z)
    contrib = W * g
    trace = _trace_from_bins(z1, contrib, quad.truncation_radii)
    cums = {r: float(np.real(v)) for r, v in trace}
    scan = divergence_scan(cums.__getitem__, quad.truncation_radii)
    if scan.verdict == "divergent":
        raise IntegralDivergenceError(trace)
    value = complex(np.sum(contrib))
    if mq.deterministic:
        se, nsamp = 0.0, len(Z) * mq.count
    else:
        # std error over Haar batches of the full radial sum
        nb = min(32, mq.count)
        cuts = np.array_split(np.arange(mq.count), nb)
        batch_vals = []
        for idx in cuts:
            wsub = mq.weights[idx]
            gsub = _m_average(
                case, f, MQuadrature(tuple(F[idx] for F in mq.factors), wsub / wsub.sum(), False), Z
            )
            batch_vals.append(np.sum(W * gsub))
        bv = np.asarray(batch_vals)
        se = float(np.sqrt(np.sum(np.abs(bv - bv.mean()) ** 2) / (nb * max(nb - 1, 1))))
        nsamp = len(Z) * mq.count
    if value.imag == 0.0:
        value = value.real
    return Estimate(value=value, std_error=se, samples_used=nsamp, truncation_trace=trace)


def _importance_cone_sampler(case: CaseDescriptor, k: int, density: str):
    """Radial importance law z_i = sqrt(2 Gamma(alpha)) matching the P-power
    of the density; returns (sampler, log-weight function)."""
    a = _radial_exponent(case, k, density)
    alpha = (a + 1) / 2.0
    log_const = k * (math.lgamma(alpha) + (alpha - 1.0) * math.log(2.0)) - math.lgamma(k + 1)

    def sample_z(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.sqrt(2.0 * rng.gamma(alpha, 1.0, size=(size, k)))

    def log_weight(z: np.ndarray) -> np.ndarray:
        logv = np.zeros(len(z))
        for i in range(k):
            for j in range(i + 1, k):
                logv = logv + np.log(np.abs(z[:, i] ** 2 - z[:, j] ** 2))
        return case.d * logv + 0.5 * np.sum(z**2, axis=1) + log_const

    return sample_z, log_weight


def _integrate_polar_mc(
    case: CaseDescriptor, k: int, f: Integrand, quad: QuadratureSpec, density: str
) -> Estimate:
    sample_z, log_weight = _importance_cone_sampler(case, k, density)
    n = quad.mc_samples
    chunk = 1 << 14
    vals = np.empty(n, dtype=complex)
    pos = 0
    i = 0
    while pos < n:
        size = min(chunk, n - pos)
        rng = child_rng(quad.seed, i)
        z = sample_z(rng, size)
        factors = models.haar_sample_batch(case, rng, size)
        ent = models.orbit_points_batch(case, factors, z)
        fv = np.asarray(f(ent), dtype=complex)
        vals[pos : pos + size] = fv * np.exp(log_weight(z))
        pos += size
        i += 1
    mean, se = batch_means(vals)
    value = complex(mean)
    if value.imag == 0.0:
        value = value.real
    rmax = quad.truncation_radii[-1]
    return Estimate(value=value, std_error=se, samples_used=n, truncation_trace=((rmax, value),))


# ---------------------------------------------------------------------------
# direct Lebesgue integration (the independent oracle side)

def integrate_lebesgue_direct(
    case: CaseDescriptor,
    f: Integrand,
    quad: QuadratureSpec,
    box_radius: float = 6.5,
    even_axes: bool = False,
) -> Estimate:
    """Direct integral over the flat coordinate space.

    Tensor-product Gauss panels for ambient dimension <= 6; importance-sampled
    Monte Carlo with a Gaussian proposal beyond that.  The integrand must
    decay inside the box radius (Gaussian-type decay assumed).

    ``even_axes`` asserts that f is even in every stored coordinate, which
    lets the grid cover one orthant only (64x fewer points in 6 dimensions);
    the caller is responsible for the symmetry claim.
    """
    dim = models.coordinate_dim(case)
    split = min(2.0, box_radius / 2.0)  # resolves Gaussians a few widths wide
    if dim <= 6:
        if even_axes:
            xs, ws = panel_nodes([0.0, split, box_radius], quad.points_per_axis)
            ws = ws * 2.0
        else:
            xs, ws = panel_nodes([-box_radius, -split, 0.0, split, box_radius], quad.points_per_axis)
        npts = len(xs)
        # chunk over leading axes so at most _CHUNK_ROWS points materialize
        lead = 0
        while npts ** (dim - lead) > _CHUNK_ROWS and lead < dim - 1:
            lead += 1
        tail_axes = [xs] * (dim - lead)
        tail_mesh = np.stack(
            [g.ravel() for g in np.meshgrid(*tail_axes, indexing="ij")], axis=-1
        )
        tail_w = np.prod(
            np.stack([g.ravel() for g in np.meshgrid(*([ws] * (dim - lead)), indexing="ij")], axis=-1),
            axis=1,
        )
        total = 0.0 + 0.0j
        if lead == 0:
            ent = models.entries_from_coordinates(case, tail_mesh)
            total = np.sum(tail_w * np.asarray(f(ent), dtype=complex))
        else:
            lead_mesh = np.stack(
                [g.ravel() for g in np.meshgrid(*([xs] * lead), indexing="ij")], axis=-1
            )
            lead_w = np.prod(
                np.stack([g.ravel() for g in np.meshgrid(*([ws] * lead), indexing="ij")], axis=-1),
                axis=1,
            )
            coords = np.empty((len(tail_mesh), dim))
            for row_idx in range(len(lead_mesh)):
                coords[:, :lead] = lead_mesh[row_idx]
                coords[:, lead:] = tail_mesh
                ent = models.entries_from_coordinates(case, coords)
                total += lead_w[row_idx] * np.sum(tail_w * np.asarray(f(ent), dtype=complex))
        value = complex(total)
        if value.imag == 0.0:
            value = value.real
        return Estimate(
            value=value,
            std_error=0.0,
            samples_used=npts**dim,
            truncation_trace=((box_radius, value),),
        )
    # Monte Carlo with Gaussian importance
    sigma = 0.8
    log_norm = 0.5 * dim * math.log(2.0 * math.pi * sigma**2)
    n = quad.mc_samples
    chunk = 1 << 14
    vals = np.empty(n, dtype=complex)
    pos, i = 0, 0
    while pos < n:
        size = min(chunk, n - pos)
        rng = child_rng(quad.seed, 1_000_000 + i)
        c = sigma * rng.standard_normal((size, dim))
        ent = models.entries_from_coordinates(case, c)
        logw = log_norm + 0.5 * np.sum(c**2, axis=1) / sigma**2
        vals[pos : pos + size] = np.asarray(f(ent), dtype=complex) * np.exp(logw)
        pos += size
        i += 1
    mean, se = batch_means(vals)
    value = complex(mean)
    if value.imag == 0.0:
        value = value.real
    return Estimate(value=value, std_error=se, samples_used=n, truncation_trace=((box_radius, value),))


# ---------------------------------------------------------------------------
# equivariance verification

def compose_levi(l: LeviElement, f: Integrand) -> Integrand:
    """The integrand x -> f(l . x), vectorized over stacked matrices."""
    case = l.case
    if case.model_kind == "full_matrix":
        a, b = l.factors

        def fl(entries: np.ndarray) -> np.ndarray:
            return f(a @ entries @ b.T)

    else:
        (g,) = l.factors

        def fl(entries: np.ndarray) -> np.ndarray:
            return f(g @ entries @ g.T)

    return fl


def frobenius_gaussian(width: float = 1.0) -> Integrand:
    """exp(-width ||x||_F^2); invariant under the compact group action."""

    def f(entries: np.ndarray) -> np.ndarray:
        return np.exp(-width * np.sum(np.abs(entries) ** 2, axis=(-2, -1)))

    return f


def coordinate_gaussian(case: CaseDescriptor, width: float = 1.0) -> Integrand:
    """exp(-width * sum of squared stored coordinates)."""

    def f(entries: np.ndarray) -> np.ndarray:
        frob = np.sum(np.abs(entries) ** 2, axis=(-2, -1))
        if case.model_kind == "symmetric_matrix":
            diag = np.sum(np.abs(np.diagonal(entries, axis1=-2, axis2=-1)) ** 2, axis=-1)
            return np.exp(-width * (frob + diag) / 2.0)
        if case.model_kind == "skew_matrix":
            return np.exp(-width * frob / 2.0)
        return np.exp(-width * frob)

    return f


def entry_moment_gaussian(i: int = 0, j: int = 0, width: float = 1.0) -> Integrand:
    """|x_ij|^2 exp(-width ||x||_F^2); anisotropic test integrand."""

    def f(entries: np.ndarray) -> np.ndarray:
        frob = np.sum(np.abs(entries) ** 2, axis=(-2, -1))
        return np.abs(entries[..., i, j]) ** 2 * np.exp(-width * frob)

    return f


def averaged_entry_moment_gaussian(case: CaseDescriptor, width: float = 1.0) -> Integrand:
    """Exact compact-group average of ``entry_moment_gaussian``.

    The compact group acts irreducibly on the full and skew models, so all
    entry second moments are equal and determined by the Frobenius norm:
    E|x_ij|^2 = ||x||_F^2 / n^2 (full), and for off-diagonal skew entries
    E|x_ij|^2 = ||x||_F^2 / (2 n (2n-1)).  Substituting this average makes
    the polar side of the ratio checks deterministic on backends without an
    angle grid.
    """
    if case.model_kind == "full_matrix":
        c = 1.0 / models.matrix_size(case) ** 2
    elif case.model_kind == "skew_matrix":
        c = 1.0 / (2.0 * case.n * (2 * case.n - 1))
    else:
        raise CapabilityError("closed-form entry average implemented for full/skew models")

    def f(entries: np.ndarray) -> np.ndarray:
        frob = np.sum(np.abs(entries) ** 2, axis=(-2, -1))
        return c * frob * np.exp(-width * frob)

    return f


def _ratio_batch_error(num: np.ndarray, den: np.ndarray, n_batches: int = 32) -> tuple[float, float]:
    """Ratio estimate with a delta-method standard error over batches."""
    n = len(num)
    nb = min(n_batches, n)
    usable = (n // nb) * nb
    nb_means = num[:usable].reshape(nb, -1).mean(axis=1)
    db_means = den[:usable].reshape(nb, -1).mean(axis=1)
    ratio = float(np.sum(num) / np.sum(den))
    if nb < 2:
        return ratio, 0.0
    resid = (nb_means - ratio * db_means) / np.mean(db_means)
    se = float(np.sqrt(np.sum(resid**2) / (nb * (nb - 1))))
    return ratio, se


def pushforward_ratio(
    case: CaseDescriptor,
    k: int,
    l: LeviElement,
    f: Integrand,
    quad: QuadratureSpec,
) -> tuple[float, float]:
    """Measured ratio  integral f(l . x) dmu / integral f dmu  and its
    standard error (zero on the deterministic path).

    The stochastic path shares one tensor radial grid and one Haar sample of
    the compact group between numerator and denominator, so the ratio noise
    comes only from the angular average of the transformed integrand."""
    if quad.mode == "deterministic":
        fl = compose_levi(l, f)
        est_num = integrate_polar(case, k, fl, quad, m_angles=32)
        est_den = integrate_polar(case, k, f, quad, m_angles=32)
        return float(np.real(est_num.value / est_den.value)), 0.0
    Z, W, _ = cone_grid(case, k, quad, "orbit")
    count = int(np.clip(quad.mc_samples // max(len(Z), 1), 8192, 65536))
    mq = m_quadrature_haar(case, child_rng(quad.seed, 0), count)
    fl = compose_levi(l, f)
    size = models.matrix_size(case)
    basis = _outer_basis(case, mq, k).reshape(count, k, size * size)
    g_num = np.zeros(count)
    g_den = np.zeros(count)
    chunk = max(1, _CHUNK_ROWS // count)
    for lo in range(0, len(Z), chunk):
        hi = min(len(Z), lo + chunk)
        flat = np.matmul(Z[lo:hi][None, :, :].astype(basis.dtype), basis)
        ent = flat.reshape(count * (hi - lo), size, size)
        wv = W[lo:hi]
        g_num += np.real(fl(ent)).reshape(count, hi - lo) @ wv
        g_den += np.real(f(ent)).reshape(count, hi - lo) @ wv
    return _ratio_batch_error(g_num, g_den)


def check_equivariance(
    case: CaseDescriptor,
    k: int,
    l: LeviElement,
    f: Optional[Integrand],
    quad: QuadratureSpec,
    tolerance: Optional[float] = None,
) -> dict:
    """Compare the measured pushforward ratio with the predicted character
    value chi(l) = character_nu(l)^(2 d k).

    Returns a plain mapping consumed by the report layer.
    """
    from .registry import equivariance_exponent

    if f is None:
        f = frobenius_gaussian()
    if tolerance is None:
        tolerance = 0.002 if quad.mode == "deterministic" else 0.02
    chi = models.character_nu(l) ** equivariance_exponent(case, k)
    measured, se = pushforward_ratio(case, k, l, f, quad)
    passed = abs(measured / chi - 1.0) <= tolerance
    return {
        "predicted": chi,
        "measured": measured,
        "std_error": se,
        "tolerance": tolerance,
        "verdict": "pass" if passed else "fail",
    }
