"""Finite-alphabet probability machinery.

Joint distributions are dense numpy tables with one axis per random
variable. Every information quantity is computed in bits from marginal
entropies of such a table, with the convention ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_ALPHABET",
    "PMF_TOL",
    "PRODUCT_TOL",
    "ValidationError",
    "Alphabet",
    "JointPmf",
    "JointSourceDist",
    "DmChannel",
    "FactoredInputDist",
    "entropy",
    "conditional_entropy",
    "mutual_information",
    "induced_joint",
    "is_strongly_typical",
]

MAX_ALPHABET = 16
PMF_TOL = 1e-12
PRODUCT_TOL = 1e-10

SOURCE_VARS = ("S1", "S2", "W", "W3")
INDUCED_VARS = ("V1", "V2", "X1", "X2", "X3", "Y", "Y3")


class ValidationError(ValueError):
    """A distribution or instance violates its structural invariants."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered, labelled finite alphabet."""

    name: str
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 1:
            raise ValidationError(f"alphabet {self.name!r} is empty")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"alphabet {self.name!r} has duplicate symbols")
        if len(symbols) > MAX_ALPHABET:
            raise ValidationError(
                f"alphabet {self.name!r} has {len(symbols)} symbols (max {MAX_ALPHABET})"
            )

    @property
    def size(self) -> int:
        return len(self.symbols)

    @classmethod
    def range(cls, name: str, size: int) -> "Alphabet":
        return cls(name, tuple(str(i) for i in range(size)))

    def index(self, symbol) -> int:
        return self.symbols.index(str(symbol))


def _check_pmf(table: np.ndarray, what: str, tol: float = PMF_TOL) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    if not np.all(np.isfinite(table)):
        raise ValidationError(f"{what}: non-finite entries")
    if np.any(table < 0):
        raise ValidationError(f"{what}: negative entries")
    total = table.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"{what}: total mass {float(total):.15g} is not 1")
    return table


def _check_conditional(table: np.ndarray, n_cond: int, what: str) -> np.ndarray:
    """Rows over the trailing axes (after the first ``n_cond``) must each sum to 1."""
    table = np.asarray(table, dtype=float)
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        raise ValidationError(f"{what}: entries must be finite and nonnegative")
    sums = table.reshape(table.shape[:n_cond] + (-1,)).sum(axis=-1)
    bad = np.abs(sums - 1.0) > PMF_TOL
    if np.any(bad):
        where = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValidationError(f"{what}: conditional slice {where} sums to {float(sums[where]):.15g}")
    return table


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense joint pmf with named axes."""

    table: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        names = tuple(self.names)
        if table.ndim != len(names):
            raise ValidationError(f"table has {table.ndim} axes but {len(names)} names")
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable names")
        _check_pmf(table, "joint pmf", tol=PRODUCT_TOL)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "names", names)

    def axes(self, variables: Iterable[str | int]) -> tuple[int, ...]:
        out = []
        for v in variables:
            if isinstance(v, (int, np.integer)):
                if not 0 <= v < len(self.names):
                    raise ValueError(f"axis {v} out of range")
                out.append(int(v))
            elif v in self.names:
                out.append(self.names.index(v))
            else:
                raise ValueError(f"unknown variable {v!r}; have {self.names}")
        return tuple(out)

    def marginal(self, variables: Sequence[str | int]) -> np.ndarray:
        """Marginal table over ``variables``, axes in the given order."""
        keep = self.axes(variables)
        drop = tuple(i for i in range(self.table.ndim) if i not in keep)
        m = self.table.sum(axis=drop)
        order = sorted(keep)
        return np.transpose(m, [order.index(k) for k in keep])


@dataclass(frozen=True, eq=False)
class JointSourceDist(JointPmf):
    """Joint pmf of (S1, S2, W, W3): the two sources and the destination and
    relay side information."""

    table: np.ndarray
    names: tuple[str, ...] = SOURCE_VARS
    alphabets: tuple[Alphabet, ...] | None = None

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 4:
            raise ValidationError(f"source pmf must have 4 axes (S1, S2, W, W3), got {table.ndim}")
        alphabets = self.alphabets
        if alphabets is None:
            alphabets = tuple(Alphabet.range(n, k) for n, k in zip(SOURCE_VARS, table.shape))
        alphabets = tuple(alphabets)
        if tuple(a.size for a in alphabets) != table.shape:
            raise ValidationError(
                f"alphabet sizes {[a.size for a in alphabets]} do not match pmf shape {table.shape}"
            )
        _check_pmf(table, "source pmf")
        object.__setattr__(self, "names", SOURCE_VARS)
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "table", table)
        super().__post_init__()

    @property
    def pmf(self) -> np.ndarray:
        return self.table


@dataclass(frozen=True, eq=False)
class DmChannel:
    """Memoryless channel law p(y, y3 | x1, x2, x3).

    ``kernel`` has axes (X1, X2, X3, Y, Y3).
    """

    kernel: np.ndarray
    inputs: tuple[Alphabet, Alphabet, Alphabet] | None = None
    outputs: tuple[Alphabet, Alphabet] | None = None

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=float)
        if kernel.ndim != 5:
            raise ValidationError(f"channel kernel must have 5 axes, got {kernel.ndim}")
        inputs = self.inputs or tuple(
            Alphabet.range(n, k) for n, k in zip(("X1", "X2", "X3"), kernel.shape[:3])
        )
        outputs = self.outputs or tuple(
            Alphabet.range(n, k) for n, k in zip(("Y", "Y3"), kernel.shape[3:])
        )
        if tuple(a.size for a in (*inputs, *outputs)) != kernel.shape:
            raise ValidationError("channel alphabets do not match kernel shape")
        _check_conditional(kernel, 3, "channel kernel")
        kernel.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "inputs", tuple(inputs))
        object.__setattr__(self, "outputs", tuple(outputs))

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return self.kernel.shape[:3]

    @classmethod
    def from_function(cls, sizes_in, sizes_out, fn) -> "DmChannel":
        """Build a deterministic channel from ``fn(x1, x2, x3) -> (y, y3)``."""
        kernel = np.zeros(tuple(sizes_in) + tuple(sizes_out))
        for x in np.ndindex(*sizes_in):
            kernel[x + tuple(fn(*x))] = 1.0
        return cls(kernel)


@dataclass(frozen=True, eq=False)
class FactoredInputDist:
    """p(v1) p(x1|v1) p(v2) p(x2|v2) p(x3|v1,v2)."""

    p_v1: np.ndarray
    p_x1_given_v1: np.ndarray
    p_v2: np.ndarray
    p_x2_given_v2: np.ndarray
    p_x3_given_v1v2: np.ndarray

    def __post_init__(self):
        v1 = _check_pmf(self.p_v1, "p(v1)")
        v2 = _check_pmf(self.p_v2, "p(v2)")
        x1 = _check_conditional(self.p_x1_given_v1, 1, "p(x1|v1)")
        x2 = _check_conditional(self.p_x2_given_v2, 1, "p(x2|v2)")
        x3 = _check_conditional(self.p_x3_given_v1v2, 2, "p(x3|v1,v2)")
        if v1.ndim != 1 or v2.ndim != 1 or x1.ndim != 2 or x2.ndim != 2 or x3.ndim != 3:
            raise ValidationError("factor tables have the wrong number of axes")
        if x1.shape[0] != v1.size or x2.shape[0] != v2.size or x3.shape[:2] != (v1.size, v2.size):
            raise ValidationError("auxiliary alphabet sizes disagree across factors")
        for name, arr in zip(
            ("p_v1", "p_x1_given_v1", "p_v2", "p_x2_given_v2", "p_x3_given_v1v2"),
            (v1, x1, v2, x2, x3),
        ):
            if max(arr.shape) > MAX_ALPHABET:
                raise ValidationError(f"{name}: alphabet larger than {MAX_ALPHABET}")
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.p_x1_given_v1.shape[1], self.p_x2_given_v2.shape[1], self.p_x3_given_v1v2.shape[2])

    @property
    def aux_shape(self) -> tuple[int, int]:
        return (self.p_v1.size, self.p_v2.size)

    @classmethod
    def uniform(cls, input_shape, aux_shape=None) -> "FactoredInputDist":
        """Independent uniform factors; |Vi| defaults to |Xi|."""
        n1, n2, n3 = input_shape
        k1, k2 = aux_shape if aux_shape is not None else (n1, n2)
        return cls(
            np.full(k1, 1 / k1),
            np.full((k1, n1), 1 / n1),
            np.full(k2, 1 / k2),
            np.full((k2, n2), 1 / n2),
            np.full((k1, k2, n3), 1 / n3),
        )

    def joint_inputs(self) -> np.ndarray:
        """Joint table over (V1, V2, X1, X2, X3)."""
        return np.einsum(
            "a,ai,b,bj,abk->abijk",
            self.p_v1, self.p_x1_given_v1, self.p_v2, self.p_x2_given_v2, self.p_x3_given_v1v2,
        )


def _plogp_sum(p: np.ndarray, axes) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=axes)


def _table_entropy(table: np.ndarray, keep: Sequence[int], batch: int = 0) -> np.ndarray:
    """Entropy of the marginal over ``keep`` (axes counted after ``batch``
    leading batch axes)."""
    nd = table.ndim - batch
    drop = tuple(batch + i for i in range(nd) if i not in keep)
    marg = table.sum(axis=drop) if drop else table
    return _plogp_sum(marg, tuple(range(batch, marg.ndim)))


def _disjoint(*groups) -> None:
    seen: set = set()
    for g in groups:
        s = set(g)
        if len(s) != len(g) or seen & s:
            raise ValueError("variable groups must be pairwise disjoint")
        seen |= s


def _as_joint(dist) -> JointPmf:
    if isinstance(dist, JointPmf):
        return dist
    table = np.asarray(dist, dtype=float)
    return JointPmf(table, tuple(str(i) for i in range(table.ndim)))


def entropy(dist, variables) -> float:
    """Joint entropy H(variables) in bits."""
    joint = _as_joint(dist)
    return float(_table_entropy(joint.table, joint.axes(variables)))


def conditional_entropy(dist, targets, conditioning=()) -> float:
    """H(targets | conditioning) in bits.

    ``dist`` is a :class:`JointPmf` (variables by name or axis) or a bare
    array (variables by axis). Conditioning values of zero mass are
    excluded automatically by the marginal-entropy form.
    """
    joint = _as_joint(dist)
    a = joint.axes(targets)
    c = joint.axes(conditioning)
    _disjoint(a, c)
    h = _table_entropy(joint.table, a + c) - _table_entropy(joint.table, c)
    return max(float(h), 0.0)


def mutual_information(dist, group_a, group_b, conditioning=()) -> float:
    """I(A; B | C) in bits, clipped at zero against rounding."""
    joint = _as_joint(dist)
    a, b, c = joint.axes(group_a), joint.axes(group_b), joint.axes(conditioning)
    _disjoint(a, b, c)
    return max(float(cond_mi_table(joint.table, a, b, c)), 0.0)


def cond_mi_table(table: np.ndarray, a, b, c, batch: int = 0) -> np.ndarray:
    """Vectorised I(A;B|C) over ``batch`` leading axes of ``table``.

    Uses I = H(A,C) + H(B,C) - H(A,B,C) - H(C); no clipping.
    """
    a, b, c = tuple(a), tuple(b), tuple(c)
    return (
        _table_entropy(table, a + c, batch)
        + _table_entropy(table, b + c, batch)
        - _table_entropy(table, a + b + c, batch)
        - _table_entropy(table, c, batch)
    )


def induced_joint(channel: DmChannel, inputs: FactoredInputDist) -> JointPmf:
    """Joint pmf over (V1, V2, X1, X2, X3, Y, Y3) induced by the factored
    input law and the channel."""
    if tuple(inputs.input_shape) != tuple(channel.input_shape):
        raise ValidationError(
            f"input alphabets {inputs.input_shape} do not match channel inputs {channel.input_shape}"
        )
    table = np.einsum("abijk,ijkyz->abijkyz", inputs.joint_inputs(), channel.kernel)
    return JointPmf(table, INDUCED_VARS)


def is_strongly_typical(sequences, pmf, epsilon: float) -> bool:
    """Strong typicality of a tuple of equal-length sequences.

    ``sequences`` holds integer symbol sequences, one per axis of ``pmf``.
    True iff every joint symbol's empirical frequency is within
    ``epsilon`` of its probability and no zero-probability symbol occurs.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pmf = np.asarray(pmf, dtype=float)
    seqs = [np.asarray(s, dtype=np.int64).ravel() for s in sequences]
    if len(seqs) != pmf.ndim:
        raise ValueError(f"need {pmf.ndim} sequences, got {len(seqs)}")
    m = seqs[0].size
    if m < 1 or any(s.size != m for s in seqs):
        raise ValueError("sequences must share a positive length")
    flat = np.ravel_multi_index(seqs, pmf.shape)
    freq = np.bincount(flat, minlength=pmf.size) / m
    p = pmf.ravel()
    if np.any((freq > 0) & (p <= 0)):
        return False
    return bool(np.all(np.abs(freq - p) <= epsilon + 1e-12))
