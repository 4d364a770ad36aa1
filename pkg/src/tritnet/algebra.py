"""Exact arithmetic for two-input ternary logic gates.

Truth values live in the ternary domain T = {-1, 0, +1}, read as FALSE,
UNKNOWN, TRUE. A two-input gate is a function T x T -> T, so there are
3**9 = 19,683 of them, one per 9-entry truth table. Every such table is
reproduced exactly by a degree-(2, 2) polynomial

    p_w(a, b) = w . m(a, b),
    m(a, b)   = [1, a, b, ab, a^2, b^2, a^2 b, a b^2, a^2 b^2],

because the 9 x 9 matrix V that evaluates the monomials on the 3 x 3
input grid is invertible. This module owns that correspondence: the
canonical grid order, V and its exact inverse, truth-table encoding,
Kleene gate constructors, and the rounding step that turns a trained
polynomial back into a discrete gate.

Conventions fixed here and relied on everywhere else:

* grid order is row-major with `a` outer and `b` inner, so a table
  entry for inputs (a, b) sits at index 3*(a + 1) + (b + 1);
* gate ids are base-3 little-endian: id = sum_i (entries[i] + 1) * 3^i,
  hence id in [0, 19682];
* rounding to a trit maps x to the nearest of {-1, 0, +1} and breaks
  the ties at +-0.5 away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

TRIT_VALUES = (-1, 0, 1)

FALSE = -1
UNKNOWN = 0
TRUE = 1

N_MONOMIALS = 9
N_GATES = 3**9

# Grid points in canonical order: index 3*(a+1) + (b+1).
GRID_POINTS = tuple((a, b) for a in TRIT_VALUES for b in TRIT_VALUES)

# Indices of the four Boolean corners (a, b in {-1, +1}) within the grid.
CORNER_INDICES = (0, 2, 6, 8)


def grid_index(a: int, b: int) -> int:
    """Canonical position of input pair (a, b) in a 9-entry table."""
    if a not in TRIT_VALUES or b not in TRIT_VALUES:
        raise ValueError(f"inputs must be trits, got ({a!r}, {b!r})")
    return 3 * (a + 1) + (b + 1)


def monomials(a: float, b: float) -> np.ndarray:
    """The 9 monomial features of one input pair, in coefficient order."""
    return np.array(
        [1.0, a, b, a * b, a * a, b * b, a * a * b, a * b * b, a * a * b * b]
    )


def _build_vandermonde() -> np.ndarray:
    rows = [monomials(a, b) for a, b in GRID_POINTS]
    return np.array(rows)


def _exact_inverse(mat: np.ndarray) -> np.ndarray:
    """Invert an integer matrix by Gauss-Jordan elimination over Q.

    The result is converted to float64 at the end. For the Vandermonde
    matrix below every entry of the inverse is a dyadic rational with
    denominator at most 4, so the conversion is exact.
    """
    n = mat.shape[0]
    work = [
        [Fraction(int(mat[i, j])) for j in range(n)]
        + [Fraction(1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        pivot = next(r for r in range(col, n) if work[r][col] != 0)
        work[col], work[pivot] = work[pivot], work[col]
        inv_p = 1 / work[col][col]
        work[col] = [v * inv_p for v in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [v - factor * p for v, p in zip(work[r], work[col])]
    return np.array([[float(v) for v in row[n:]] for row in work])


#: V[g, i] = i-th monomial evaluated at the g-th grid point, so that a
#: coefficient vector w has truth-table values V @ w.
VANDERMONDE = _build_vandermonde()

#: Exact inverse of V, computed once over the rationals.
VANDERMONDE_INV = _exact_inverse(VANDERMONDE)


def eval_poly(w, a: float, b: float) -> float:
    """Evaluate p_w(a, b) with 8 multiplications and 8 additions.

    Nested Horner form: the coefficients are grouped by the power of
    `a`, each group is a quadratic in `b`.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {w.shape}")
    c0 = (w[5] * b + w[2]) * b + w[0]
    c1 = (w[7] * b + w[3]) * b + w[1]
    c2 = (w[8] * b + w[6]) * b + w[4]
    return float(c0 + a * (c1 + a * c2))


def eval_poly_many(coeffs: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized p_w for per-neuron coefficients and batched inputs.

    `coeffs` has shape (n, 9); `a` and `b` have shape (..., n) and hold
    the two parent values of each neuron. Returns an array of shape
    (..., n). Uses the same Horner scheme as `eval_poly`.
    """
    w = coeffs.T
    c0 = (w[5] * b + w[2]) * b + w[0]
    c1 = (w[7] * b + w[3]) * b + w[1]
    c2 = (w[8] * b + w[6]) * b + w[4]
    return c0 + a * (c1 + a * c2)


def poly_input_grads(coeffs: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Partial derivatives of p_w with respect to its two inputs.

    Shapes follow `eval_poly_many`. Returns (dp/da, dp/db).
    """
    w = coeffs.T
    da = (w[7] * b + w[3]) * b + w[1] + 2.0 * a * ((w[8] * b + w[6]) * b + w[4])
    db = (w[6] * a + w[3]) * a + w[2] + 2.0 * b * ((w[8] * a + w[7]) * a + w[5])
    return da, db


def table_of(w) -> np.ndarray:
    """Values of p_w on the input grid, as a 9-vector in grid order."""
    w = np.asarray(w, dtype=float)
    if w.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {w.shape}")
    return VANDERMONDE @ w


def coeffs_of_table(table) -> np.ndarray:
    """Coefficients of the unique degree-(2, 2) interpolant of a table."""
    t = np.asarray(table, dtype=float)
    if t.shape != (9,):
        raise ValueError(f"expected 9 table entries, got shape {t.shape}")
    return VANDERMONDE_INV @ t


def round_to_trit(x: float) -> int:
    """Round to the nearest trit; ties at +-0.5 go away from zero."""
    v = math.copysign(math.floor(abs(x) + 0.5), x)
    return int(min(1.0, max(-1.0, v)))


def round_table(values: np.ndarray) -> np.ndarray:
    """Elementwise `round_to_trit` over an array, returned as int8."""
    v = np.sign(values) * np.floor(np.abs(values) + 0.5)
    return np.clip(v, -1, 1).astype(np.int8)


def encode_table(entries) -> int:
    """Pack 9 trits (grid order) into a gate id, base-3 little-endian."""
    entries = tuple(int(e) for e in entries)
    if len(entries) != 9:
        raise ValueError(f"expected 9 entries, got {len(entries)}")
    gid = 0
    for i, e in enumerate(entries):
        if e not in TRIT_VALUES:
            raise ValueError(f"entry {i} is {e}, not a trit")
        gid += (e + 1) * 3**i
    return gid


def decode_table(gate_id: int) -> tuple[int, ...]:
    """Inverse of `encode_table`."""
    gid = int(gate_id)
    if not 0 <= gid < N_GATES:
        raise ValueError(f"gate id {gate_id} out of range [0, {N_GATES - 1}]")
    entries = []
    for _ in range(9):
        entries.append(gid % 3 - 1)
        gid //= 3
    return tuple(entries)


def all_tables() -> np.ndarray:
    """All 19,683 truth tables as an int8 array of shape (3^9, 9)."""
    ids = np.arange(N_GATES)
    digits = (ids[:, None] // 3 ** np.arange(9)[None, :]) % 3
    return (digits - 1).astype(np.int8)


def encode_tables(tables: np.ndarray) -> np.ndarray:
    """Vectorized `encode_table` over an (n, 9) trit array."""
    t = np.asarray(tables)
    return ((t + 1) * 3 ** np.arange(9)).sum(axis=-1)


def harden_neuron(w) -> int:
    """Gate id of the discrete gate nearest to the polynomial p_w."""
    return int(encode_tables(round_table(table_of(w))))


@dataclass(frozen=True)
class TruthTable9:
    """A two-input ternary truth table in canonical grid order."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != 9 or any(e not in TRIT_VALUES for e in self.entries):
            raise ValueError(f"not a valid 9-trit table: {self.entries!r}")

    @property
    def gate_id(self) -> int:
        return encode_table(self.entries)

    @classmethod
    def from_gate_id(cls, gate_id: int) -> "TruthTable9":
        return cls(decode_table(gate_id))

    def value(self, a: int, b: int) -> int:
        return self.entries[grid_index(a, b)]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int8)


@dataclass(frozen=True)
class LatticeGeometry:
    """Distances of the uniform q-point lattice on [-1, 1].

    spacing is the gap between adjacent lattice values, epsilon the
    largest rounding error, covering_radius their product with q (the
    radius within which every point of the segment has a lattice value).
    """

    q: int
    spacing: float
    epsilon: float
    covering_radius: float


def lattice_geometry(q: int) -> LatticeGeometry:
    """Geometry of q equally spaced values spanning [-1, 1]."""
    if q < 2:
        raise ValueError(f"lattice needs at least 2 points, got q={q}")
    spacing = 2.0 / (q - 1)
    return LatticeGeometry(
        q=q, spacing=spacing, epsilon=spacing / 2.0, covering_radius=q / (q - 1)
    )


def _kleene_not(x: int) -> int:
    return -x


def _kleene_and(a: int, b: int) -> int:
    return min(a, b)


def _kleene_or(a: int, b: int) -> int:
    return max(a, b)


def _kleene_xor(a: int, b: int) -> int:
    return max(min(a, -b), min(-a, b))


_KLEENE_KINDS = {
    "min": _kleene_and,
    "max": _kleene_or,
    "neg_a": lambda a, b: -a,
    "neg_b": lambda a, b: -b,
    "pass_a": lambda a, b: a,
    "pass_b": lambda a, b: b,
}


def kleene_gate(kind: str, value: int | None = None) -> TruthTable9:
    """Truth table of a named Kleene gate.

    kind is one of min, max, neg_a, neg_b, pass_a, pass_b, const; the
    const kind requires `value`, a trit emitted for every input.
    """
    kind = kind.lower()
    if kind == "const":
        if value not in TRIT_VALUES:
            raise ValueError(f"const gate needs a trit value, got {value!r}")
        return TruthTable9(tuple(value for _ in GRID_POINTS))
    if kind not in _KLEENE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    fn = _KLEENE_KINDS[kind]
    return TruthTable9(tuple(fn(a, b) for a, b in GRID_POINTS))


def _table_from(fn) -> TruthTable9:
    return TruthTable9(tuple(fn(a, b) for a, b in GRID_POINTS))


#: Curated gates by name. AND/OR are Kleene min/max; the derived gates
#: are built from min, max and negation in the usual strong-Kleene way.
NAMED_GATES: dict[str, TruthTable9] = {
    "false": kleene_gate("const", FALSE),
    "unknown": kleene_gate("const", UNKNOWN),
    "true": kleene_gate("const", TRUE),
    "a": kleene_gate("pass_a"),
    "b": kleene_gate("pass_b"),
    "not_a": kleene_gate("neg_a"),
    "not_b": kleene_gate("neg_b"),
    "and": kleene_gate("min"),
    "or": kleene_gate("max"),
    "nand": _table_from(lambda a, b: -_kleene_and(a, b)),
    "nor": _table_from(lambda a, b: -_kleene_or(a, b)),
    "xor": _table_from(_kleene_xor),
    "xnor": _table_from(lambda a, b: -_kleene_xor(a, b)),
    "implies": _table_from(lambda a, b: max(-a, b)),
    "implied_by": _table_from(lambda a, b: max(a, -b)),
}

_GATE_NAMES = {t.gate_id: name for name, t in NAMED_GATES.items()}


def gate_name(gate_id: int) -> str | None:
    """Name of a curated gate, or None if the id is not curated."""
    return _GATE_NAMES.get(int(gate_id))
