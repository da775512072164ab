"""Spherical vectors, the K-Bessel kernel, and the Cayley operator checks.

The spherical vector with induction parameter t restricts to
prod (1 + z_i^2)^(t/2) on ordered radial coordinates, so on the matrix
models it is a function of the singular spectrum alone.  The rank-1 orbit
carries the kernel upsilon(z) = K_tau(z) / z^tau with tau = (d-e-1)/2; its
Fourier transform against the rank-1 orbit measure reproduces the spherical
vector at parameter -d, which is what ``rank1_fourier`` probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import models
from .engine import (
    Estimate,
    QuadratureSpec,
    child_rng,
    divergence_scan,
    half_line_edges,
    panel_nodes,
)
from .measures import MQuadrature, m_quadrature_deterministic, m_quadrature_haar
from .models import AlgebraElement, CaseDescriptor
from .registry import bessel_parameter, l2_threshold


@dataclass(frozen=True)
class SphericalParams:
    case: CaseDescriptor
    t: float


@dataclass(frozen=True)
class BesselKernel:
    case: CaseDescriptor
    tau: float

    @classmethod
    def for_case(cls, case: CaseDescriptor) -> "BesselKernel":
        return cls(case, bessel_parameter(case))


# ---------------------------------------------------------------------------
# spherical vector

def phi_spectrum(t: float, sigma: np.ndarray) -> np.ndarray:
    """prod (1 + sigma_i^2)^(t/2) along the last axis."""
    return np.prod((1.0 + np.asarray(sigma) ** 2) ** (t / 2.0), axis=-1)


def phi_t(params: SphericalParams, x: AlgebraElement) -> float:
    if x.case != params.case:
        raise models.CaseMismatchError("spherical parameter / element case mismatch")
    return float(phi_spectrum(params.t, models.singular_spectrum(x)))


def phi_integrand(case: CaseDescriptor, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized x -> Phi_t(x) on stacked model matrices."""

    def f(entries: np.ndarray) -> np.ndarray:
        return phi_spectrum(t, models.spectra_batch(case, entries))

    return f


def phi_power_identity(
    case: CaseDescriptor,
    k: int,
    points: Sequence[AlgebraElement] | None = None,
    seed: int = 0,
    n_points: int = 100,
    tol: float = 1e-12,
) -> dict:
    """Check Phi_{-dk} = (Phi_{-d})^k pointwise.

    Random points are Gaussian in the stored coordinates when none are given.
    """
    if not 1 <= k <= case.n:
        raise ValueError(f"k must be in [1, {case.n}]")
    if points is None:
        rng = child_rng(seed, 77)
        coords = rng.standard_normal((n_points, case.ambient_dim))
        entries = models.entries_from_coordinates(case, coords)
    else:
        entries = np.stack([p.entries for p in points])
    sig = models.spectra_batch(case, entries)
    lhs = phi_spectrum(-case.d * k, sig)
    rhs = phi_spectrum(-case.d, sig) ** k
    dev = float(np.max(np.abs(lhs / rhs - 1.0)))
    return {
        "max_rel_deviation": dev,
        "tolerance": tol,
        "verdict": "pass" if dev <= tol else "fail",
        "points": len(entries),
    }


# ---------------------------------------------------------------------------
# square-integrability scan

def _phi_l2_shellsums(
    case: CaseDescriptor, t: float, radii: Sequence[float], pts: int
) -> np.ndarray:
    """Cumulative orthant-tensor integrals of |Phi_t|^2 against the Lebesgue
    radial density, with panel edges aligned to the truncation radii.

    The integrand prod z^e (1+z^2)^t prod |z_i^2-z_j^2|^d / n! is evaluated on
    a geometric tensor grid; the |V| kink only crosses diagonal cells, whose
    contribution is negligible at scan accuracy.
    """
    n, d, e = case.n, case.d, case.e
    base = [0.0, radii[0] / 8.0, radii[0] / 4.0, radii[0] / 2.0] + list(radii)
    edges: list[float] = []
    for a, b in zip(base[:-1], base[1:]):
        edges += [a, 0.5 * (a + b)]
    edges.append(base[-1])
    zs, ws = panel_nodes(edges, pts)
    radial = zs**e * (1.0 + zs**2) ** t
    sums = np.zeros(len(radii))
    npts = len(zs)
    # chunk along the first axis to bound memory for n = 3
    chunk = max(1, (1 << 22) // (npts ** (n - 1)))
    tail_axes = np.meshgrid(*([zs] * (n - 1)), indexing="ij") if n > 1 else []
    tail_w = np.ones(1)
    if n > 1:
        tail_w = np.ones_like(tail_axes[0])
        for g in np.meshgrid(*([ws] * (n - 1)), indexing="ij"):
            tail_w = tail_w * g
        tail_rad = np.ones_like(tail_axes[0])
        for g in tail_axes:
            tail_rad = tail_rad * (g**e * (1.0 + g**2) ** t)
        tail_max = np.maximum.reduce(tail_axes) if n > 2 else tail_axes[0]
    for lo in range(0, npts, chunk):
        hi = min(npts, lo + chunk)
        z0 = zs[lo:hi]
        if n == 1:
            f = ws[lo:hi] * radial[lo:hi]
            zmax = z0
        else:
            shape = (hi - lo,) + tail_axes[0].shape
            f = np.ones(shape)
            f *= (ws[lo:hi] * radial[lo:hi]).reshape((-1,) + (1,) * (n - 1))
            f = f * tail_w * tail_rad
            z0b = z0.reshape((-1,) + (1,) * (n - 1))
            vfac = np.ones(shape)
            vfac = vfac * np.abs(z0b**2 - tail_axes[0] ** 2) ** d
            if n == 3:
                vfac = vfac * np.abs(z0b**2 - tail_axes[1] ** 2) ** d
                vfac = vfac * np.abs(tail_axes[0] ** 2 - tail_axes[1] ** 2) ** d
            f = f * vfac
            zmax = np.maximum(z0b, tail_max)
        for ri, r in enumerate(radii):
            sums[ri] += float(np.sum(f[zmax <= r]))
    return sums / math.factorial(n)


def phi_l2_verdict(params: SphericalParams, quad: QuadratureSpec) -> dict:
    """Scan the truncated squared-norm integral of the spherical vector and
    compare the finite/divergent verdict with the exponent prediction
    (finite iff 2t + e + 2d(n-1) < -1)."""
    case, t = params.case, params.t
    if case.n > 3:
        raise ValueError("square-norm scans are implemented for n <= 3")
    radii = quad.truncation_radii
    sums = _phi_l2_shellsums(case, t, radii, quad.points_per_axis)
    cums = dict(zip((float(r) for r in radii), sums))
    scan = divergence_scan(cums.__getitem__, radii)
    exponent = 2.0 * t + case.e + 2.0 * case.d * (case.n - 1)
    predicted = "finite" if exponent < -1.0 else "divergent"
    verdict = "pass" if scan.verdict == predicted else (
        "inconclusive" if scan.verdict == "inconclusive" else "fail"
    )
    return {
        "predicted": predicted,
        "measured": scan.verdict,
        "threshold_t": l2_threshold(case),
        "growth_exponent": scan.growth_exponent,
        "trace": scan.trace,
        "verdict": verdict,
    }


# ---------------------------------------------------------------------------
# one-variable K-Bessel function

def bessel_k(tau: float, z) -> np.ndarray | float:
    """Modified Bessel function of the second kind, by panel quadrature of
    the cosh integral representation.

    Accurate to ~1e-12 relative for z in [1e-6, 60], |tau| <= 5.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0.0):
        raise ValueError("argument must be positive")
    zmin = float(z_arr.min())
    # integrand e^{-z cosh u} cosh(tau u) is negligible once z cosh u > 745
    umax = math.acosh(max(745.0 / zmin, 2.0)) + 1.0
    edges = np.linspace(0.0, umax, max(8, int(math.ceil(umax / 0.5))) + 1)
    u, w = panel_nodes(list(edges), 24)
    ch = np.cosh(u)
    vals = np.exp(-np.outer(z_arr, ch)) * np.cosh(tau * u)
    out = vals @ w
    return out if np.ndim(z) else float(out[0])


def upsilon(kernel: BesselKernel, z) -> np.ndarray | float:
    """The rank-1 kernel K_tau(z) / z^tau.

    For tau = 0 this is K_0 with its logarithmic blow-up at zero; for
    tau > 0 the pole has order 2*tau.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = bessel_k(kernel.tau, z_arr) / z_arr**kernel.tau
    return out if np.ndim(z) else float(out[0])


# ---------------------------------------------------------------------------
# rank-1 mass and Fourier transform

def _radial_weights(
    case: CaseDescriptor, quad: Optional[QuadratureSpec] = None, max_freq: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Shared nodes z and weights w * upsilon(z) z^(dn-1) for radial
    integrals of the rank-1 orbit; panels shrink near 0 (kernel singularity)
    and are capped at half an oscillation wavelength when max_freq > 1."""
    pts = quad.points_per_axis if quad is not None else 16
    max_len = math.inf if max_freq <= 1.0 else math.pi / max_freq
    edges = half_line_edges(rmax=60.0, r0=1.0, inner=1e-6, max_len=max_len)
    z, w = panel_nodes(edges, max(pts, 12))
    kern = BesselKernel.for_case(case)
    dens = upsilon(kern, z) * z ** (case.d * case.n - 1)
    return z, w * dens


def rank1_mass(case: CaseDescriptor, quad: Optional[QuadratureSpec] = None) -> Estimate:
    """Total mass of the rank-1 kernel against its orbit measure:
    integral of upsilon(z) z^(dn-1) dz over the half line."""
    z, wd = _radial_weights(case, quad)
    value = float(np.sum(wd))
    return Estimate(value=value, std_error=0.0, samples_used=len(z), truncation_trace=((60.0, value),))


def rank1_fourier(
    case: CaseDescriptor,
    x: AlgebraElement,
    quad: QuadratureSpec,
) -> Estimate:
    """Fourier transform of the rank-1 kernel measure at the point x:
    integral over (z, m) of exp(-i z <x, m.y1>) upsilon(z) z^(dn-1).

    Equals rank1_mass at x = 0 by construction (shared radial rule); the
    claim under test elsewhere is that its ratio to Phi_{-d}(x) is constant.
    """
    if x.case != case:
        raise models.CaseMismatchError("element does not belong to the case")
    if quad.mode == "deterministic":
        mq = m_quadrature_deterministic(case, n_angles=max(32, quad.points_per_axis))
    else:
        count = max(256, min(quad.mc_samples, 65536))
        mq = m_quadrature_haar(case, child_rng(quad.seed, 3), count)
    # frequencies c_m = <x, m.y1>
    ones = np.ones((mq.count, 1))
    y1 = models.orbit_points_batch(case, mq.factors, ones)[:, 0]
    c = models.pairing_batch(case, np.broadcast_to(x.entries, y1.shape), y1)
    z, wd = _radial_weights(case, quad, max_freq=float(np.max(np.abs(c))))
    mass = float(np.sum(wd))
    # h(c) = sum_z wd(z) e^{-izc}, averaged over the M rule
    chunk = max(1, (1 << 22) // len(z))
    acc = np.empty(mq.count, dtype=complex)
    for lo in range(0, mq.count, chunk):
        hi = min(mq.count, lo + chunk)
        phase = np.exp(-1j * np.outer(c[lo:hi], z))
        acc[lo:hi] = phase @ wd
    if float(np.max(np.abs(c))) == 0.0:
        value: complex = mass  # exp(0) = 1 exactly; avoid rounding in the dot
        se = 0.0
    else:
        wsum = float(np.sum(mq.weights))
        value = complex(np.sum(mq.weights * acc) / wsum)
        se = 0.0
        if not mq.deterministic:
            nb = min(32, mq.count)
            splits = np.array_split(acc, nb)
            bm = np.array([s.mean() for s in splits])
            se = float(np.sqrt(np.sum(np.abs(bm - bm.mean()) ** 2) / (nb * (nb - 1))))
    return Estimate(
        value=value,
        std_error=se,
        samples_used=len(z) * mq.count,
        truncation_trace=((60.0, value),),
    )


def rank1_fourier_profile(
    case: CaseDescriptor,
    xs: Sequence[AlgebraElement],
    quad: QuadratureSpec,
    tolerance: float = 0.02,
) -> dict:
    """Constancy check of rank1_fourier(x) / Phi_{-d}(x) across points."""
    params = SphericalParams(case, -float(case.d))
    ratios = []
    for x in xs:
        est = rank1_fourier(case, x, quad)
        ratios.append(float(np.real(est.value)) / phi_t(params, x))
    ratios_arr = np.asarray(ratios)
    spread = float(np.max(np.abs(ratios_arr / ratios_arr[0] - 1.0)))
    return {
        "ratios": ratios,
        "max_rel_spread": spread,
        "tolerance": tolerance,
        "verdict": "pass" if spread <= tolerance else "fail",
    }


# ---------------------------------------------------------------------------
# Cayley operator (complex symmetric model, desk scale n <= 2)

def _sym_symbols(n: int):
    import sympy as sp

    u = sp.Matrix(n, n, lambda i, j: sp.Symbol(f"u{min(i,j)+1}{max(i,j)+1}"))
    return u


def cayley_operator(n: int):
    """det(d/du) with half-weighted off-diagonal derivatives, as a callable
    on sympy expressions in the entries of the symmetric matrix u."""
    import sympy as sp

    if n == 1:
        u11 = sp.Symbol("u11")
        return lambda expr: sp.diff(expr, u11)
    if n == 2:
        u11, u12, u22 = sp.symbols("u11 u12 u22")
        return lambda expr: sp.diff(expr, u11, u22) - sp.Rational(1, 4) * sp.diff(expr, u12, 2)
    raise ValueError("the symbolic Cayley operator is implemented for n <= 2")


def cayley_operator_apply(
    case: CaseDescriptor,
    f,
    x: AlgebraElement,
    scheme: str = "symbolic_polynomial",
    fd_step: float = 1e-4,
) -> complex:
    """Apply the determinant-symbol operator to f at the point x.

    ``symbolic_polynomial`` expects a sympy expression in u11, u12, u22 (or a
    callable producing one from the symbol matrix); ``finite_difference``
    expects a vectorized callable on stacked matrices.
    """
    import sympy as sp

    if case.case_id != "sp_c" or case.n > 2:
        raise ValueError("the Cayley operator is exposed for the complex symmetric model, n <= 2")
    n = case.n
    if scheme == "symbolic_polynomial":
        u = _sym_symbols(n)
        expr = f(u) if callable(f) else sp.sympify(f)
        out = cayley_operator(n)(expr)
        subs = {sp.Symbol(f"u{i+1}{j+1}"): complex(x.entries[i, j]) for i in range(n) for j in range(i, n)}
        return complex(sp.N(out.subs(subs)))
    if scheme == "finite_difference":
        return _cayley_fd(case, f, x.entries, fd_step)
    raise ValueError(f"unknown scheme {scheme!r}")


def _cayley_fd(case: CaseDescriptor, f, u0: np.ndarray, h: float) -> complex:
    """Central finite differences for det(d) on 1x1 or 2x2 symmetric input."""
    n = case.n

    def ev(mat: np.ndarray) -> complex:
        return complex(np.asarray(f(mat[None]))[0])

    if n == 1:
        e = np.array([[1.0]], dtype=complex)
        return (ev(u0 + h * e) - ev(u0 - h * e)) / (2.0 * h)
    e11 = np.zeros((2, 2), dtype=complex)
    e11[0, 0] = 1.0
    e22 = np.zeros((2, 2), dtype=complex)
    e22[1, 1] = 1.0
    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = e12[1, 0] = 1.0
    # d11 d22
    cross = (
        ev(u0 + h * e11 + h * e22)
        - ev(u0 + h * e11 - h * e22)
        - ev(u0 - h * e11 + h * e22)
        + ev(u0 - h * e11 - h * e22)
    ) / (4.0 * h * h)
    # d12^2 on the stored coordinate (matrix steps move both symmetric slots)
    second = (ev(u0 + h * e12) - 2.0 * ev(u0) + ev(u0 - h * e12)) / (h * h)
    return cross - 0.25 * second


def cayley_det_power_constants(smax: int = 4) -> list:
    """Exact constants in det(d) det(u)^s = c_s det(u)^(s-1) for the 2x2
    symmetric matrix, by symbolic differentiation."""
    import sympy as sp

    u = _sym_symbols(2)
    D = cayley_operator(2)
    det = u.det()
    out = []
    for s in range(1, smax + 1):
        ratio = sp.simplify(D(det**s) / det ** (s - 1))
        out.append(sp.nsimplify(ratio))
    return out


def cayley_symbol_identity() -> bool:
    """det(d) e^{tr(u y)} = det(y) e^{tr(u y)} for 2x2 symmetric u, y."""
    import sympy as sp

    u = _sym_symbols(2)
    p, q, r = sp.symbols("p q r")
    y = sp.Matrix([[p, q], [q, r]])
    expr = sp.exp(sp.trace(u * y))
    out = sp.simplify(cayley_operator(2)(expr) / expr - y.det())
    return out == 0


def cayley_check(
    s: int = 3,
    points: int = 5,
    seed: int = 0,
    fd_step: float = 1e-4,
) -> dict:
    """Finite-difference verification of det(d_u) det(1+wu)^s =
    c_s det(w) det(1+wu)^(s-1) at random symmetric (w, u).

    The fitted constants must agree across points and match the symbolic
    c_s = s (s + 1/2).
    """
    from .registry import lookup_case

    case = lookup_case("sp_c", 2)
    rng = child_rng(seed, 11)
    fitted = []
    for _ in range(points):
        w = rng.standard_normal((2, 2)) * 0.5
        w = w + w.T
        u0 = rng.standard_normal((2, 2)) * 0.5
        u0 = (u0 + u0.T).astype(complex)

        def fpow(mats: np.ndarray) -> np.ndarray:
            return np.linalg.det(np.eye(2) + w @ mats) ** s

        val = _cayley_fd(case, fpow, u0, fd_step)
        denom = np.linalg.det(w) * np.linalg.det(np.eye(2) + w @ u0) ** (s - 1)
        fitted.append(complex(val / denom))
    arr = np.asarray(fitted)
    spread = float(np.max(np.abs(arr / arr[0] - 1.0)))
    c_exact = s * (s + 0.5)
    err_vs_exact = float(np.max(np.abs(arr / c_exact - 1.0)))
    ok = spread < 1e-4 and err_vs_exact < 1e-3
    return {
        "s": s,
        "fitted": [complex(v) for v in fitted],
        "exact": c_exact,
        "spread": spread,
        "error_vs_exact": err_vs_exact,
        "verdict": "pass" if ok else "fail",
    }


def bessel_selftest(tol_recurrence: float = 1e-9) -> dict:
    """Internal consistency of the Bessel evaluator: half-integer closed
    forms, symmetry in the order, and the three-term recurrence."""
    zg = np.array([0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0])
    half = bessel_k(0.5, zg)
    closed = np.sqrt(np.pi / (2.0 * zg)) * np.exp(-zg)
    err_half = float(np.max(np.abs(half / closed - 1.0)))
    sym = float(np.max(np.abs(bessel_k(-1.5, zg) / bessel_k(1.5, zg) - 1.0)))
    errs = []
    for tau in (0.0, 0.5, 1.0, 1.5, 2.5):
        lhs = bessel_k(tau + 1.0, zg) - bessel_k(tau - 1.0, zg)
        rhs = (2.0 * tau / zg) * bessel_k(tau, zg)
        scale = np.abs(bessel_k(tau + 1.0, zg))
        errs.append(float(np.max(np.abs(lhs - rhs) / scale)))
    err_rec = max(errs)
    ok = err_half < 1e-10 and sym < 1e-12 and err_rec < tol_recurrence
    return {
        "half_integer_error": err_half,
        "symmetry_error": sym,
        "recurrence_error": err_rec,
        "verdict": "pass" if ok else "fail",
    }
