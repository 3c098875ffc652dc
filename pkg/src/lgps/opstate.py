"""Operator-state kernel.

Operators are dense complex matrices; an operator ``O`` viewed as a vector
``|O)`` carries the Hilbert-Schmidt inner product ``(A|B) = Tr(A^dag B)``.
Multipartite operators live on labeled slots (``LabeledOperator``) so that
contractions can name the factor they act on.

The maximally entangled link is kept unnormalized,
``Phi = sum_ij |i><j| (x) |i><j|``, so contracting ``(rho*|`` on one half
returns ``rho`` on the other half with no rescaling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from lgps.errors import DomainError, LabelError, ShapeError

DEFAULT_TOL = 1e-10


def default_tol() -> float:
    """Residual threshold used when a call does not pass ``tol``.

    The ``LGPS_TOL`` environment variable overrides the built-in 1e-10.
    """
    raw = os.environ.get("LGPS_TOL")
    if raw is None or raw == "":
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise DomainError(f"LGPS_TOL must be a float, got {raw!r}") from None
    if not tol > 0:
        raise DomainError(f"LGPS_TOL must be positive, got {tol}")
    return tol


def _tol(tol: float | None) -> float:
    return default_tol() if tol is None else tol


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    return m


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

def is_hermitian(m: np.ndarray, tol: float | None = None) -> bool:
    m = as_matrix(m, square=True)
    return bool(np.abs(m - m.conj().T).max() <= _tol(tol))


def is_unitary(u: np.ndarray, tol: float | None = None) -> bool:
    u = as_matrix(u, square=True)
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= _tol(tol))


def min_eigenvalue(m: np.ndarray) -> float:
    m = as_matrix(m, square=True)
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])


def is_density_matrix(m: np.ndarray, tol: float | None = None) -> bool:
    tol = _tol(tol)
    m = as_matrix(m, square=True)
    return (
        is_hermitian(m, tol)
        and abs(np.trace(m) - 1.0) <= tol
        and min_eigenvalue(m) >= -tol
    )


# ---------------------------------------------------------------------------
# single-space operator states
# ---------------------------------------------------------------------------

def op_inner(a, b) -> complex:
    """``(a|b) = Tr(a^dag b)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ShapeError(f"inner product of shapes {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def basis_operator(i: int, j: int, d: int) -> np.ndarray:
    """The matrix unit ``|i><j|`` in dimension ``d``."""
    if not (0 <= i < d and 0 <= j < d):
        raise DomainError(f"matrix unit ({i}, {j}) outside dimension {d}")
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def expand(op) -> np.ndarray:
    """Coefficients ``c[i, j] = (Pi_ij | op)`` over the matrix-unit basis."""
    op = as_matrix(op, square=True)
    d = op.shape[0]
    return np.array(
        [[op_inner(basis_operator(i, j, d), op) for j in range(d)] for i in range(d)]
    )


def reconstruct(coeffs) -> np.ndarray:
    """Inverse of :func:`expand`: ``sum_ij c[i, j] Pi_ij``."""
    coeffs = as_matrix(coeffs, square=True)
    d = coeffs.shape[0]
    out = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out += coeffs[i, j] * basis_operator(i, j, d)
    return out


def max_entangled_link(d: int) -> np.ndarray:
    """Unnormalized ``Phi = sum_ij Pi_ij (x) Pi_ij`` on two ``d``-level slots."""
    if int(d) != d or d < 1:
        raise DomainError(f"link dimension must be a positive integer, got {d}")
    d = int(d)
    v = np.eye(d, dtype=complex).reshape(d * d)
    return np.outer(v, v)


def choi_state(kraus: Sequence, d_in: int) -> np.ndarray:
    """Choi state of ``rho -> sum_k K rho K^dag``.

    The channel acts on the second half of the link, so the result is
    ordered (input copy, output).  Trace equals ``d_in`` for trace-preserving
    maps.
    """
    if len(kraus) == 0:
        raise ShapeError("at least one Kraus operator is required")
    ks = [as_matrix(k, name="Kraus operator") for k in kraus]
    d_out = ks[0].shape[0]
    for k in ks:
        if k.shape != (d_out, d_in):
            raise ShapeError(
                f"Kraus operator shape {k.shape} does not map dimension {d_in} to {d_out}"
            )
    phi = max_entangled_link(d_in)
    out = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in ks:
        lifted = np.kron(np.eye(d_in), k)
        out += lifted @ phi @ lifted.conj().T
    return out


def is_trace_nonincreasing(kraus: Sequence, tol: float | None = None) -> bool:
    total = sum(as_matrix(k).conj().T @ as_matrix(k) for k in kraus)
    return min_eigenvalue(np.eye(total.shape[0]) - total) >= -_tol(tol)


def orthonormal_basis(vectors, tol: float | None = None) -> np.ndarray:
    """Return ``vectors`` as the columns of a unitary matrix, validating orthonormality.

    ``vectors`` is a sequence of basis vectors (one per row of the input).
    """
    b = np.asarray(vectors, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ShapeError(f"a basis needs d vectors of length d, got shape {b.shape}")
    cols = b.T
    tol = 1e-12 if tol is None else tol
    if np.abs(cols.conj().T @ cols - np.eye(cols.shape[0])).max() > tol:
        raise DomainError("basis vectors are not orthonormal")
    return cols


def projectors(basis_cols: np.ndarray) -> list[np.ndarray]:
    return [np.outer(basis_cols[:, x], basis_cols[:, x].conj()) for x in range(basis_cols.shape[1])]


# ---------------------------------------------------------------------------
# labeled multipartite operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabeledOperator:
    """Square operator on an ordered tuple of labeled slots.

    ``matrix`` is indexed with the first label as the most significant
    tensor factor.
    """

    labels: tuple[str, ...]
    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims):
            raise ShapeError(f"{len(labels)} labels for {len(dims)} dimensions")
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate slot labels in {labels}")
        if any(d < 1 for d in dims):
            raise ShapeError(f"slot dimensions must be positive, got {dims}")
        m = np.array(self.matrix, dtype=complex)
        total = int(np.prod(dims)) if dims else 1
        if m.shape != (total, total):
            raise ShapeError(f"matrix shape {m.shape} does not match slot dims {dims}")
        m.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown slot {label!r}; slots are {self.labels}") from None

    def tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.dims + self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def with_matrix(self, matrix) -> "LabeledOperator":
        return LabeledOperator(self.labels, self.dims, matrix)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        _same_slots(self, other)
        return self.with_matrix(self.matrix + other.matrix)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        _same_slots(self, other)
        return self.with_matrix(self.matrix - other.matrix)

    def scaled(self, c: complex) -> "LabeledOperator":
        return self.with_matrix(c * self.matrix)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


def _same_slots(a: LabeledOperator, b: LabeledOperator) -> None:
    if a.labels != b.labels or a.dims != b.dims:
        raise LabelError(f"slot mismatch: {a.labels}{a.dims} vs {b.labels}{b.dims}")


def labeled(labels: Iterable[str], dims: Iterable[int], matrix) -> LabeledOperator:
    return LabeledOperator(tuple(labels), tuple(dims), matrix)


def tensor_product(*ops: LabeledOperator) -> LabeledOperator:
    """Kronecker product with concatenated slot metadata."""
    if not ops:
        raise ShapeError("tensor_product needs at least one operand")
    labels: list[str] = []
    for op in ops:
        clash = set(labels) & set(op.labels)
        if clash:
            raise LabelError(f"slot labels {sorted(clash)} appear in more than one factor")
        labels.extend(op.labels)
    dims = tuple(d for op in ops for d in op.dims)
    matrix = reduce(np.kron, (op.matrix for op in ops))
    return LabeledOperator(tuple(labels), dims, matrix)


def permute(op: LabeledOperator, order: Sequence[str]) -> LabeledOperator:
    """Reorder slots to ``order`` (a permutation of ``op.labels``)."""
    order = tuple(order)
    if sorted(order) != sorted(op.labels):
        raise LabelError(f"{order} is not a permutation of {op.labels}")
    if order == op.labels:
        return op
    perm = [op.index(lab) for lab in order]
    k = len(perm)
    t = op.tensor().transpose(perm + [p + k for p in perm])
    dims = tuple(op.dims[p] for p in perm)
    return LabeledOperator(order, dims, t.reshape(op.total_dim, op.total_dim))


def _front(op: LabeledOperator, slots: Sequence[str]) -> tuple[LabeledOperator, int, int]:
    slots = tuple(slots)
    if len(set(slots)) != len(slots):
        raise LabelError(f"duplicate slots in {slots}")
    for s in slots:
        op.index(s)
    rest = tuple(lab for lab in op.labels if lab not in slots)
    moved = permute(op, slots + rest)
    da = int(np.prod([op.dim(s) for s in slots]))
    return moved, da, op.total_dim // da


def partial_contract(op: LabeledOperator, slots, dual="trace") -> LabeledOperator:
    """Contract ``(dual|`` against the named slot(s) and drop them.

    ``slots`` is one label or a sequence of labels; ``dual`` is a matrix on
    those slots (in the given order) or ``"trace"`` for the identity.  The
    result is ``Tr_slots[(dual^dag (x) I) op]``; it is linear in ``op``.
    """
    if isinstance(slots, str):
        slots = (slots,)
    moved, da, dr = _front(op, slots)
    if isinstance(dual, str):
        if dual != "trace":
            raise DomainError(f"unknown dual {dual!r}")
        dual = np.eye(da)
    dual = as_matrix(dual, name="dual")
    if dual.shape != (da, da):
        raise ShapeError(f"dual of shape {dual.shape} for slots {tuple(slots)} of dimension {da}")
    t = moved.matrix.reshape(da, dr, da, dr)
    out = np.einsum("ab,arbs->rs", dual.conj(), t)
    rest_labels = moved.labels[len(slots):]
    rest_dims = moved.dims[len(slots):]
    return LabeledOperator(rest_labels, rest_dims, out)


def partial_trace(op: LabeledOperator, slots) -> LabeledOperator:
    return partial_contract(op, slots, "trace")


def contract_all(op: LabeledOperator, dual) -> complex:
    """Full contraction ``(dual|op)``; ``dual`` is a matrix on ``op``'s slots in order."""
    dual = as_matrix(dual, name="dual")
    if dual.shape != op.matrix.shape:
        raise ShapeError(f"dual shape {dual.shape} vs operator shape {op.matrix.shape}")
    return op_inner(dual, op.matrix)


def sandwich(op: LabeledOperator, slots, k) -> LabeledOperator:
    """``(K (x) I) op (K (x) I)^dag`` with ``K`` acting on ``slots`` (in that order)."""
    if isinstance(slots, str):
        slots = (slots,)
    moved, da, dr = _front(op, slots)
    k = as_matrix(k, square=True, name="operator")
    if k.shape[0] != da:
        raise ShapeError(f"operator of dimension {k.shape[0]} for slots {tuple(slots)} of dimension {da}")
    t = moved.matrix.reshape(da, dr, da, dr)
    out = np.einsum("ab,bscu,dc->asdu", k, t, k.conj())
    return permute(moved.with_matrix(out.reshape(op.total_dim, op.total_dim)), op.labels)


def dephase(op: LabeledOperator, slot: str, basis_cols: np.ndarray) -> LabeledOperator:
    """Remove every block of ``op`` that is off-diagonal on ``slot`` in the given basis."""
    out = np.zeros_like(op.matrix)
    for p in projectors(basis_cols):
        out = out + sandwich(op, slot, p).matrix
    return op.with_matrix(out)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def matrix_to_json(m) -> list:
    """Rows of ``[re, im]`` pairs, row-major."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def labeled_to_json(op: LabeledOperator) -> dict:
    return {
        "slots": [{"label": lab, "dim": d} for lab, d in zip(op.labels, op.dims)],
        "matrix": matrix_to_json(op.matrix),
    }
