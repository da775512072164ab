"""Registry of the group/Jordan-algebra cases and their structural constants.

Every case is described by its Jordan rank ``n`` and the two root
multiplicities ``(d, e)``.  All densities, thresholds and kernel parameters
used elsewhere are derived from these three integers, so this module is the
single source of truth for them.

The registry is embedded as a constant table.  Four families have a concrete
matrix model (backend): real n x n matrices, real skew-symmetric 2n x 2n
matrices, complex symmetric n x n matrices and complex n x n matrices.  The
remaining families are carried as metadata only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class UnknownCaseError(KeyError):
    """Requested family identifier is not in the registry."""


class AdmissibilityError(ValueError):
    """Requested a family that is excluded from the theory."""


class RankError(ValueError):
    """Requested rank is invalid for the family."""


_BASE_FIELDS = ("real", "complex", "quaternion")
_MODEL_KINDS = ("full_matrix", "symmetric_matrix", "skew_matrix", "metadata_only")


@dataclass(frozen=True)
class CaseDescriptor:
    """One instantiated row of the group table.

    ``ambient_dim`` is the real dimension of the Jordan algebra, which always
    equals ``n*(e+1) + d*n*(n-1)``.
    """

    case_id: str
    group_name: str
    base_field: str
    model_kind: str
    n: int
    d: int
    e: int
    ambient_dim: int
    backend_available: bool

    def __post_init__(self) -> None:
        if self.base_field not in _BASE_FIELDS:
            raise ValueError(f"unknown base field {self.base_field!r}")
        if self.model_kind not in _MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.n < 1:
            raise RankError(f"rank must be >= 1, got {self.n}")
        if self.d < 0 or self.e < 0:
            raise ValueError("multiplicities must be nonnegative")
        expected = self.n * (self.e + 1) + self.d * self.n * (self.n - 1)
        if self.ambient_dim != expected:
            raise ValueError(
                f"ambient_dim {self.ambient_dim} != {expected} implied by (n,d,e)"
            )
        if self.backend_available != (self.model_kind != "metadata_only"):
            raise ValueError("backend_available must match model_kind")

    @property
    def r(self) -> int:
        """The constant d*(n-1) + (e+1) entering the canonical character."""
        return self.d * (self.n - 1) + (self.e + 1)


# Family table: case_id -> (group name template, base_field, model_kind,
# d, e, fixed rank or None for variable rank).
#
# The two families whose short multiplicity is a free parameter p are pinned
# at p = 3 and rank 2; they carry no matrix model, so only their derived
# constants matter and those are representative.
_FAMILIES: dict[str, tuple[str, str, str, int, int, Optional[int]]] = {
    "gl_r": ("GL(2n,R)", "real", "full_matrix", 1, 0, None),
    "o_2n2n": ("O(2n,2n)", "real", "skew_matrix", 2, 0, None),
    "e7_split": ("E7(7)", "real", "metadata_only", 4, 0, 3),
    "o_p2p2": ("O(p+2,p+2), p=3", "real", "metadata_only", 3, 0, 2),
    "sp_c": ("Sp(n,C)", "complex", "symmetric_matrix", 1, 1, None),
    "gl_c": ("GL(2n,C)", "complex", "full_matrix", 2, 1, None),
    "o_4nc": ("O(4n,C)", "complex", "metadata_only", 4, 1, None),
    "e7_c": ("E7(C)", "complex", "metadata_only", 8, 1, 3),
    "o_p4c": ("O(p+4,C), p=3", "complex", "metadata_only", 3, 1, 2),
    "sp_nn": ("Sp(n,n)", "quaternion", "metadata_only", 2, 2, None),
    "gl_2nh": ("GL(2n,H)", "quaternion", "metadata_only", 4, 3, None),
}

# Families excluded from the theory: O(p,q) with p != q has two distinct
# rank-2 multiplicities, so no single (d, e) pair exists for it.
_EXCLUDED = {"o_pq_unequal": "O(p,q), p != q"}

BACKEND_CASE_IDS = ("gl_r", "o_2n2n", "sp_c", "gl_c")

_DEFAULT_RANK = 2  # display rank for variable-rank families in list_cases()


def _make(case_id: str, n: int) -> CaseDescriptor:
    group, field, kind, d, e, fixed = _FAMILIES[case_id]
    ambient = n * (e + 1) + d * n * (n - 1)
    return CaseDescriptor(
        case_id=case_id,
        group_name=group,
        base_field=field,
        model_kind=kind,
        n=n,
        d=d,
        e=e,
        ambient_dim=ambient,
        backend_available=kind != "metadata_only",
    )


def lookup_case(case_id: str, n: Optional[int] = None) -> CaseDescriptor:
    """Return the descriptor for a family at rank ``n``.

    Families with a fixed table rank reject any other ``n`` (and accept
    ``n=None`` as "use the fixed rank").  Variable-rank families require an
    explicit ``n >= 1``.
    """
    if case_id in _EXCLUDED:
        raise AdmissibilityError(
            f"{_EXCLUDED[case_id]} is excluded: its rank-2 root system has two "
            "unequal multiplicities, so no single (d, e) pair exists"
        )
    if case_id not in _FAMILIES:
        raise UnknownCaseError(case_id)
    fixed = _FAMILIES[case_id][5]
    if fixed is not None:
        if n is not None and n != fixed:
            raise RankError(
                f"family {case_id!r} has fixed rank {fixed}, got n={n}"
            )
        n = fixed
    else:
        if n is None:
            raise RankError(f"family {case_id!r} needs an explicit rank n")
        if n < 1:
            raise RankError(f"rank must be >= 1, got {n}")
    return _make(case_id, n)


def list_cases() -> tuple[CaseDescriptor, ...]:
    """All table rows, variable-rank families instantiated at rank 2."""
    rows = []
    for case_id, (_, _, _, _, _, fixed) in _FAMILIES.items():
        rows.append(_make(case_id, fixed if fixed is not None else _DEFAULT_RANK))
    return tuple(rows)


def l2_threshold(case: CaseDescriptor) -> float:
    """Largest induction parameter (exclusive) with square-integrable
    spherical vector: t < -(d*(n-1) + (e+1)/2)."""
    return -(case.d * (case.n - 1) + (case.e + 1) / 2.0)


def equivariance_exponent(case: CaseDescriptor, k: int, measure: str = "orbit") -> int:
    """Multiple of the canonical character in the equivariance law.

    ``measure='orbit'`` gives 2*d*k for the rank-k orbit measure;
    ``measure='lebesgue'`` gives 2*r for the Lebesgue measure (k must be n).
    """
    if not 1 <= k <= case.n:
        raise RankError(f"k must be in [1, {case.n}], got {k}")
    if measure == "orbit":
        return 2 * case.d * k
    if measure == "lebesgue":
        if k != case.n:
            raise RankError("the Lebesgue exponent applies only at k = n")
        return 2 * case.r
    raise ValueError(f"unknown measure {measure!r}")


def bessel_parameter(case: CaseDescriptor) -> float:
    """Order tau = (d - e - 1)/2 of the rank-1 K-Bessel kernel.

    Depends only on (d, e), never on the rank n.
    """
    return (case.d - case.e - 1) / 2.0
