"""Exact arithmetic and linear algebra over prime fields F_q, 2 <= q <= 251.

Everything here is immutable and deterministic. Pivot choice is always the
first nonzero entry scanning left-to-right, top-to-bottom, so reduced forms
are canonical and reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import FieldError

MAX_FIELD_ORDER = 251

_PRIMES = frozenset(
    p for p in range(2, MAX_FIELD_ORDER + 1)
    if all(p % d for d in range(2, int(p ** 0.5) + 1))
)


class FieldOrder(int):
    """A validated prime field order. Behaves as a plain int."""

    def __new__(cls, q) -> "FieldOrder":
        q = int(q)
        if q > MAX_FIELD_ORDER:
            raise FieldError(f"field order {q} exceeds the supported maximum {MAX_FIELD_ORDER}")
        if q not in _PRIMES:
            raise FieldError(f"field order must be prime, got {q}")
        return super().__new__(cls, q)

    def __repr__(self) -> str:
        return f"FieldOrder({int(self)})"


def field_inv(a: int, q: int) -> int:
    """Multiplicative inverse of a in F_q. Raises ZeroDivisionError for a == 0 mod q."""
    q = FieldOrder(q)
    a %= q
    if a == 0:
        raise ZeroDivisionError(f"0 has no multiplicative inverse in F_{int(q)}")
    # Fermat: a^(q-2) = a^(-1) for prime q.
    return pow(a, q - 2, q)


@dataclass(frozen=True)
class GfVector:
    """Immutable vector over F_q; coords are canonical representatives in [0, q)."""

    q: FieldOrder
    coords: tuple[int, ...]

    def __post_init__(self):
        q = FieldOrder(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "coords", tuple(int(c) % q for c in self.coords))

    def __len__(self) -> int:
        return len(self.coords)

    def __add__(self, other: "GfVector") -> "GfVector":
        if self.q != other.q or len(self.coords) != len(other.coords):
            raise ValueError("vectors live in different spaces")
        return GfVector(self.q, tuple((a + b) % self.q for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "GfVector") -> "GfVector":
        if self.q != other.q or len(self.coords) != len(other.coords):
            raise ValueError("vectors live in different spaces")
        return GfVector(self.q, tuple((a - b) % self.q for a, b in zip(self.coords, other.coords)))

    def scale(self, a: int) -> "GfVector":
        a %= self.q
        return GfVector(self.q, tuple((a * c) % self.q for c in self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)


@dataclass(frozen=True)
class GfMatrix:
    """Immutable row-major matrix over F_q. num_cols is explicit so empty matrices keep shape."""

    q: FieldOrder
    rows: tuple[tuple[int, ...], ...]
    num_cols: int

    def __post_init__(self):
        q = FieldOrder(self.q)
        object.__setattr__(self, "q", q)
        rows = tuple(tuple(int(c) % q for c in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        for row in rows:
            if len(row) != self.num_cols:
                raise ValueError(f"row of length {len(row)} in a {self.num_cols}-column matrix")

    @classmethod
    def from_rows(cls, q: int, rows, num_cols: int | None = None) -> "GfMatrix":
        rows = tuple(tuple(r) for r in rows)
        if num_cols is None:
            if not rows:
                raise ValueError("num_cols is required for a matrix with no rows")
            num_cols = len(rows[0])
        return cls(FieldOrder(q), rows, num_cols)

    @classmethod
    def from_cols(cls, q: int, cols, num_rows: int | None = None) -> "GfMatrix":
        cols = [tuple(c) for c in cols]
        if num_rows is None:
            if not cols:
                raise ValueError("num_rows is required for a matrix with no columns")
            num_rows = len(cols[0])
        for c in cols:
            if len(c) != num_rows:
                raise ValueError("ragged columns")
        rows = tuple(tuple(c[i] for c in cols) for i in range(num_rows))
        return cls(FieldOrder(q), rows, len(cols))

    @classmethod
    def identity(cls, q: int, n: int) -> "GfMatrix":
        return cls(FieldOrder(q), tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)), n)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.rows)

    def transpose(self) -> "GfMatrix":
        return GfMatrix(self.q, tuple(self.column(j) for j in range(self.num_cols)), self.num_rows)

    def row_vectors(self) -> list[GfVector]:
        return [GfVector(self.q, row) for row in self.rows]


def rank(m: GfMatrix) -> int:
    """Rank over F_q by forward elimination with normalized pivots.

    Pivot choice: first nonzero entry left-to-right, top-to-bottom.
    """
    q = m.q
    work = [list(row) for row in m.rows]
    n_rows, n_cols = len(work), m.num_cols
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if work[i][col]), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = field_inv(work[r][col], q)
        work[r] = [(inv * c) % q for c in work[r]]
        prow = work[r]
        for i in range(r + 1, n_rows):
            f = work[i][col]
            if f:
                work[i] = [(c - f * p) % q for c, p in zip(work[i], prow)]
        r += 1
        if r == n_rows:
            break
    return r


def _reduce_against(rows: tuple[tuple[int, ...], ...], pivots: tuple[int, ...],
                    vec: list[int], q: int) -> list[int]:
    # Subtract multiples of the RREF rows so vec is zero on every pivot column.
    for row, p in zip(rows, pivots):
        f = vec[p]
        if f:
            vec = [(c - f * r) % q for c, r in zip(vec, row)]
    return vec


@dataclass(frozen=True)
class EchelonBasis:
    """Reduced row echelon basis of a subspace of F_q^dim.

    Rows are fully reduced: each carries a leading 1 on its pivot column and
    every other row is zero there. pivots is strictly increasing, so equal
    subspaces always produce equal bases.
    """

    q: FieldOrder
    dim: int
    rows: tuple[tuple[int, ...], ...] = field(default=())
    pivots: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "q", FieldOrder(self.q))

    @classmethod
    def empty(cls, q: int, dim: int) -> "EchelonBasis":
        return cls(FieldOrder(q), dim)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def vectors(self) -> list[GfVector]:
        return [GfVector(self.q, row) for row in self.rows]


def basis_insert(basis: EchelonBasis, v: GfVector) -> tuple[EchelonBasis, bool]:
    """Insert v; returns (new_basis, grew). grew is False iff v was already in the span."""
    if v.q != basis.q or len(v.coords) != basis.dim:
        raise ValueError("vector does not match basis field or dimension")
    q = basis.q
    reduced = _reduce_against(basis.rows, basis.pivots, list(v.coords), q)
    pivot = next((i for i, c in enumerate(reduced) if c), None)
    if pivot is None:
        return basis, False
    inv = field_inv(reduced[pivot], q)
    new_row = tuple((inv * c) % q for c in reduced)
    # Keep RREF: clear the new pivot column from existing rows, keep pivots sorted.
    rows, pivots = [], []
    inserted = False
    for row, p in zip(basis.rows, basis.pivots):
        if not inserted and p > pivot:
            rows.append(new_row)
            pivots.append(pivot)
            inserted = True
        f = row[pivot]
        if f:
            row = tuple((c - f * n) % q for c, n in zip(row, new_row))
        rows.append(row)
        pivots.append(p)
    if not inserted:
        rows.append(new_row)
        pivots.append(pivot)
    return EchelonBasis(q, basis.dim, tuple(rows), tuple(pivots)), True


def in_span(basis: EchelonBasis, v: GfVector) -> bool:
    """True iff v lies in the span of the basis. The hot call of the search loops."""
    if v.q != basis.q or len(v.coords) != basis.dim:
        raise ValueError("vector does not match basis field or dimension")
    return not any(_reduce_against(basis.rows, basis.pivots, list(v.coords), basis.q))
