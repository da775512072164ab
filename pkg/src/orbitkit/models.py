"""Concrete matrix models of the Jordan algebra and its group actions.

Three backends, plus an optional complex one:

* ``full_matrix`` real: all n x n real matrices; the structure group acts by
  (a, b) . x = a x b^T, its maximal compact part is O(n) x O(n).
* ``symmetric_matrix``: complex symmetric n x n matrices; l . x = l x l^T
  (plain transpose), compact part U(n).
* ``skew_matrix``: real skew-symmetric 2n x 2n matrices; l . x = l x l^T,
  compact part O(2n).
* ``full_matrix`` complex: all n x n complex matrices with U(n) x U(n).

The polar map in every backend is the ordered singular spectrum: for the
skew model singular values come in equal pairs and one value per pair is
reported.  The duality pairing is Re trace(x* y) rescaled so the first frame
element pairs to 1 with itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .registry import CaseDescriptor

DEFAULT_RANK_TOL = 1e-8
_MAX_CONDITION = 1.0 / np.sqrt(np.finfo(float).eps)
_ORTHO_TOL = 1e-12


class UnsupportedBackendError(ValueError):
    """Operation needs a matrix model but the case is metadata only."""


class CaseMismatchError(ValueError):
    """Operands belong to different cases."""


class SingularElementError(ValueError):
    """Group element is numerically singular."""


def _require_backend(case: CaseDescriptor) -> None:
    if not case.backend_available:
        raise UnsupportedBackendError(
            f"case {case.case_id!r} ({case.group_name}) has no matrix backend"
        )


def matrix_size(case: CaseDescriptor) -> int:
    """Side length of the model matrices (2n for the skew model)."""
    _require_backend(case)
    return 2 * case.n if case.model_kind == "skew_matrix" else case.n


def _dtype(case: CaseDescriptor):
    return np.complex128 if case.base_field == "complex" else np.float64


def _canonicalize(case: CaseDescriptor, entries: np.ndarray) -> np.ndarray:
    size = matrix_size(case)
    a = np.asarray(entries, dtype=_dtype(case))
    if a.shape != (size, size):
        raise ValueError(f"expected shape {(size, size)}, got {a.shape}")
    if case.model_kind == "symmetric_matrix":
        a = (a + a.T) / 2.0
    elif case.model_kind == "skew_matrix":
        a = (a - a.T) / 2.0
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AlgebraElement:
    """A point of the Jordan algebra, stored canonically."""

    case: CaseDescriptor
    entries: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _canonicalize(self.case, self.entries))


def _check_factor(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} factor must be square")
    if not np.all(np.isfinite(m)):
        raise SingularElementError(f"{name} factor has non-finite entries")
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > _MAX_CONDITION:
        raise SingularElementError(f"{name} factor is numerically singular")
    return m


@dataclass(frozen=True)
class LeviElement:
    """Structure group element: a pair (a, b) for full models, a single
    invertible matrix for the congruence models."""

    case: CaseDescriptor
    factors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        _require_backend(self.case)
        want = 2 if self.case.model_kind == "full_matrix" else 1
        if len(self.factors) != want:
            raise ValueError(f"expected {want} factor(s), got {len(self.factors)}")
        size = matrix_size(self.case)
        checked = []
        for f in self.factors:
            f = _check_factor(np.asarray(f, dtype=_dtype(self.case)), "Levi")
            if f.shape != (size, size):
                raise ValueError(f"factor shape {f.shape} != {(size, size)}")
            checked.append(f)
        object.__setattr__(self, "factors", tuple(checked))


@dataclass(frozen=True)
class CompactElement:
    """Element of the maximal compact subgroup M of the structure group."""

    case: CaseDescriptor
    factors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        _require_backend(self.case)
        want = 2 if self.case.model_kind == "full_matrix" else 1
        if len(self.factors) != want:
            raise ValueError(f"expected {want} factor(s), got {len(self.factors)}")
        size = matrix_size(self.case)
        checked = []
        for f in self.factors:
            f = np.asarray(f, dtype=_dtype(self.case))
            if f.shape != (size, size):
                raise ValueError(f"factor shape {f.shape} != {(size, size)}")
            resid = np.linalg.norm(f.conj().T @ f - np.eye(size))
            if resid > _ORTHO_TOL:
                raise ValueError(f"factor not orthogonal/unitary (residual {resid:.2e})")
            checked.append(f)
        object.__setattr__(self, "factors", tuple(checked))

    def as_levi(self) -> LeviElement:
        return LeviElement(self.case, self.factors)


# ---------------------------------------------------------------------------
# frames and orbit points

def frame(case: CaseDescriptor) -> tuple[AlgebraElement, ...]:
    """The standard frame: diagonal units, or diagonal 2x2 J-blocks for the
    skew model."""
    _require_backend(case)
    size = matrix_size(case)
    out = []
    for i in range(case.n):
        m = np.zeros((size, size), dtype=_dtype(case))
        if case.model_kind == "skew_matrix":
            m[2 * i, 2 * i + 1] = 1.0
            m[2 * i + 1, 2 * i] = -1.0
        else:
            m[i, i] = 1.0
        out.append(AlgebraElement(case, m))
    return tuple(out)


def _diag_point(case: CaseDescriptor, z: Sequence[float]) -> np.ndarray:
    """Matrix of z_1 y_1 + ... + z_k y_k (zero-padded to rank n)."""
    size = matrix_size(case)
    m = np.zeros((size, size), dtype=_dtype(case))
    for i, zi in enumerate(z):
        if case.model_kind == "skew_matrix":
            m[2 * i, 2 * i + 1] = zi
            m[2 * i + 1, 2 * i] = -zi
        else:
            m[i, i] = zi
    return m


def _cone_values(z) -> tuple[float, ...]:
    vals = tuple(float(v) for v in (z.values if hasattr(z, "values") else z))
    if any(b >= a for a, b in zip(vals, vals[1:])) or (vals and vals[-1] <= 0):
        raise ValueError("cone point must be strictly decreasing and positive")
    return vals


def orbit_point(m: CompactElement, z, k: int) -> AlgebraElement:
    """The point m . z = Ad(m)(z_1 y_1 + ... + z_k y_k) of the rank-k orbit."""
    case = m.case
    vals = _cone_values(z)
    if len(vals) != k or not 1 <= k <= case.n:
        raise ValueError(f"need k={k} ordered positive values with k <= n={case.n}")
    diag = _diag_point(case, vals)
    if case.model_kind == "full_matrix":
        a, b = m.factors
        return AlgebraElement(case, a @ diag @ b.T)
    (u,) = m.factors
    return AlgebraElement(case, u @ diag @ u.T)


# ---------------------------------------------------------------------------
# group actions

def levi_act(l: LeviElement, x: AlgebraElement) -> AlgebraElement:
    """Structure-group action on the algebra."""
    if l.case != x.case:
        raise CaseMismatchError("Levi element and algebra element case mismatch")
    if x.case.model_kind == "full_matrix":
        a, b = l.factors
        return AlgebraElement(x.case, a @ x.entries @ b.T)
    (g,) = l.factors
    return AlgebraElement(x.case, g @ x.entries @ g.T)


def compact_act(m: CompactElement, x: AlgebraElement) -> AlgebraElement:
    return levi_act(m.as_levi(), x)


def pfaffian(a: np.ndarray) -> float:
    """Pfaffian of a real skew-symmetric matrix via the real Schur form."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] % 2 == 1:
        return 0.0
    if a.shape[0] == 0:
        return 1.0
    t, q = scipy.linalg.schur(a, output="real")
    return float(np.prod(np.diag(t, 1)[::2]) * np.linalg.det(q))


def jordan_norm(x: AlgebraElement) -> complex | float:
    """Determinant for the full and symmetric models, Pfaffian for the skew
    model; a degree-n polynomial in the entries."""
    if x.case.model_kind == "skew_matrix":
        return pfaffian(x.entries)
    det = np.linalg.det(x.entries)
    return complex(det) if x.case.base_field == "complex" else float(det)


def pairing_constant(case: CaseDescriptor) -> float:
    """Rescaling making the first frame element pair to 1 with itself."""
    f1 = frame(case)[0].entries
    return 1.0 / float(np.real(np.sum(np.conj(f1) * f1)))


def pairing(x: AlgebraElement, y: AlgebraElement) -> float:
    """Duality pairing Re trace(x* y), frame-normalized."""
    if x.case != y.case:
        raise CaseMismatchError("pairing operands case mismatch")
    return pairing_constant(x.case) * float(np.real(np.sum(np.conj(x.entries) * y.entries)))


# ---------------------------------------------------------------------------
# polar map

def singular_spectrum(x: AlgebraElement) -> np.ndarray:
    """Descending nonnegative spectrum of length n; inverse of the polar
    parametrization: orbit_point(m, z, n) maps back to z."""
    s = np.linalg.svd(x.entries, compute_uv=False)
    if x.case.model_kind == "skew_matrix":
        s = s[::2]  # values come in equal pairs
    return s


def orbit_rank(x: AlgebraElement, tol: float = DEFAULT_RANK_TOL) -> int:
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = singular_spectrum(x)
    cutoff = tol * max(float(s[0]) if len(s) else 0.0, 1.0)
    return int(np.sum(s > cutoff))


def peirce_restrict(x: AlgebraElement, k: int) -> AlgebraElement:
    """Leading block of x, tagged with the rank-k case of the same family."""
    from .registry import lookup_case

    case = x.case
    if not 1 <= k <= case.n:
        raise ValueError(f"k must be in [1, {case.n}], got {k}")
    sub = lookup_case(case.case_id, k)
    sz = 2 * k if case.model_kind == "skew_matrix" else k
    return AlgebraElement(sub, x.entries[:sz, :sz])


# ---------------------------------------------------------------------------
# characters

def adjoint_determinant(l: LeviElement) -> float:
    """|det| of the action x -> l . x on the real coordinate space, in closed
    form per model."""
    case = l.case
    n = case.n
    if case.model_kind == "full_matrix":
        a, b = l.factors
        dets = abs(np.linalg.det(a) * np.linalg.det(b))
        power = 2 * n if case.base_field == "complex" else n
        return float(dets**power)
    (g,) = l.factors
    det = abs(np.linalg.det(g))
    if case.model_kind == "symmetric_matrix":
        return float(det ** (2 * (n + 1)))
    return float(det ** (2 * n - 1))  # skew: 2n x 2n, exterior square


def adjoint_determinant_dense(l: LeviElement) -> float:
    """Same determinant from the dense matrix of the action; cross-check."""
    case = l.case
    dim = case.ambient_dim
    mat = np.empty((dim, dim))
    for j in range(dim):
        c = np.zeros(dim)
        c[j] = 1.0
        mat[:, j] = coordinates(levi_act(l, from_coordinates(case, c)))
    return float(abs(np.linalg.det(mat)))


def character_nu(l: LeviElement) -> float:
    """The canonical positive character |det Ad|^(-1/(2r))."""
    return adjoint_determinant(l) ** (-1.0 / (2.0 * l.case.r))


# ---------------------------------------------------------------------------
# real coordinates (used by the direct Lebesgue oracle and dense cross-checks)

def _coordinate_index(case: CaseDescriptor) -> list[tuple[int, int]]:
    size = matrix_size(case)
    if case.model_kind == "full_matrix":
        return [(i, j) for i in range(size) for j in range(size)]
    if case.model_kind == "symmetric_matrix":
        return [(i, j) for i in range(size) for j in range(i, size)]
    return [(i, j) for i in range(size) for j in range(i + 1, size)]  # skew


def coordinates(x: AlgebraElement) -> np.ndarray:
    """Flatten to real coordinates (Re/Im interleaved for complex entries)."""
    idx = _coordinate_index(x.case)
    vals = np.array([x.entries[i, j] for i, j in idx])
    if x.case.base_field == "complex":
        return np.concatenate([vals.real, vals.imag])
    return vals.real


def from_coordinates(case: CaseDescriptor, coords: np.ndarray) -> AlgebraElement:
    return AlgebraElement(case, entries_from_coordinates(case, np.asarray(coords)[None, :])[0])


def entries_from_coordinates(case: CaseDescriptor, coords: np.ndarray) -> np.ndarray:
    """Batched inverse of ``coordinates``: (batch, ambient_dim) -> matrices."""
    _require_backend(case)
    idx = _coordinate_index(case)
    size = matrix_size(case)
    coords = np.asarray(coords, dtype=float)
    batch = coords.shape[0]
    if case.base_field == "complex":
        half = len(idx)
        vals = coords[:, :half] + 1j * coords[:, half:]
    else:
        vals = coords
    m = np.zeros((batch, size, size), dtype=_dtype(case))
    for k, (i, j) in enumerate(idx):
        m[:, i, j] = vals[:, k]
        if case.model_kind == "symmetric_matrix" and i != j:
            m[:, j, i] = vals[:, k]
        elif case.model_kind == "skew_matrix":
            m[:, j, i] = -vals[:, k]
    return m


def coordinate_dim(case: CaseDescriptor) -> int:
    idx = _coordinate_index(case)
    return 2 * len(idx) if case.base_field == "complex" else len(idx)


# ---------------------------------------------------------------------------
# Haar sampling

def _haar_orthogonal(rng: np.random.Generator, size: int, count: int) -> np.ndarray:
    g = rng.standard_normal((count, size, size))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return q * d[:, None, :]


def _haar_unitary(rng: np.random.Generator, size: int, count: int) -> np.ndarray:
    g = (rng.standard_normal((count, size, size)) + 1j * rng.standard_normal((count, size, size))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[:, None, :]


def haar_sample_batch(case: CaseDescriptor, rng: np.random.Generator, count: int) -> tuple[np.ndarray, ...]:
    """Stacked Haar factors for ``count`` elements of M."""
    _require_backend(case)
    size = matrix_size(case)
    if case.model_kind == "full_matrix":
        if case.base_field == "complex":
            return _haar_unitary(rng, size, count), _haar_unitary(rng, size, count)
        return _haar_orthogonal(rng, size, count), _haar_orthogonal(rng, size, count)
    if case.model_kind == "symmetric_matrix":
        return (_haar_unitary(rng, size, count),)
    return (_haar_orthogonal(rng, size, count),)


def haar_sample_M(case: CaseDescriptor, rng: np.random.Generator) -> CompactElement:
    """One Haar-distributed element of M (QR of a Gaussian matrix with the
    sign/phase correction that makes the law exactly Haar)."""
    factors = haar_sample_batch(case, rng, 1)
    return CompactElement(case, tuple(f[0] for f in factors))


# ---------------------------------------------------------------------------
# batched orbit geometry (internal plumbing for the integrators)

def orbit_points_batch(case: CaseDescriptor, factors: tuple[np.ndarray, ...], z: np.ndarray) -> np.ndarray:
    """Matrices of m_i . z_i for stacked compact factors and cone rows.

    ``z`` has shape (batch, k); factor arrays have shape (batch, size, size).
    """
    k = z.shape[1]
    size = matrix_size(case)
    diag = np.zeros((z.shape[0], size, size), dtype=_dtype(case))
    if case.model_kind == "skew_matrix":
        for i in range(k):
            diag[:, 2 * i, 2 * i + 1] = z[:, i]
            diag[:, 2 * i + 1, 2 * i] = -z[:, i]
    else:
        for i in range(k):
            diag[:, i, i] = z[:, i]
    if case.model_kind == "full_matrix":
        a, b = factors
        return a @ diag @ np.swapaxes(b, -1, -2)
    (u,) = factors
    return u @ diag @ np.swapaxes(u, -1, -2)


def spectra_batch(case: CaseDescriptor, entries: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(entries, compute_uv=False)
    if case.model_kind == "skew_matrix":
        s = s[..., ::2]
    return s


def pairing_batch(case: CaseDescriptor, x_entries: np.ndarray, y_entries: np.ndarray) -> np.ndarray:
    c = pairing_constant(case)
    prod = np.conj(x_entries) * y_entries
    return c * np.real(prod.sum(axis=(-2, -1)))
