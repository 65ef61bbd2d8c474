"""Ising cost Hamiltonians, bitflip gauges and the instance text format.

Conventions used everywhere in the package:

* bit ``b_i`` maps to spin ``s_i = 1 - 2 b_i`` so ``|0...0>`` has all spins +1;
* a bitstring is a 1-D ``uint8`` array, qubit 0 first;
* the integer index of a bitstring is ``sum(b_i << i)`` (qubit 0 is the
  least significant bit), which is also the statevector index.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, InvalidReferenceError, InvalidSizeError, ParseError


@dataclass(frozen=True, eq=False)
class IsingHamiltonian:
    """``H = sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j`` on ``n`` qubits.

    Zero-weight terms are dropped so that two Hamiltonians describing the
    same function compare equal.
    """

    n: int
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidSizeError(f"n must be positive, got {n}")
        lin = {}
        for i, w in self.linear.items():
            i = int(i)
            w = float(w)
            if not 0 <= i < n:
                raise ValueError(f"linear index {i} out of range for n={n}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight on {i}")
            if w != 0.0:
                lin[i] = w
        quad = {}
        for key, w in self.quadratic.items():
            i, j = (int(k) for k in key)
            w = float(w)
            if not (0 <= i < j < n):
                raise ValueError(f"quadratic key {(i, j)} must satisfy 0 <= i < j < {n}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight on {(i, j)}")
            if w != 0.0:
                quad[(i, j)] = w
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "linear", dict(sorted(lin.items())))
        object.__setattr__(self, "quadratic", dict(sorted(quad.items())))

    def __eq__(self, other):
        if not isinstance(other, IsingHamiltonian):
            return NotImplemented
        return (
            self.n == other.n
            and self.linear == other.linear
            and self.quadratic == other.quadratic
        )

    def __hash__(self):
        return hash((self.n, tuple(self.linear.items()), tuple(self.quadratic.items())))

    def __repr__(self):
        return (
            f"IsingHamiltonian(n={self.n}, linear={len(self.linear)} terms, "
            f"quadratic={len(self.quadratic)} terms)"
        )

    @cached_property
    def h(self) -> np.ndarray:
        h = np.zeros(self.n)
        for i, w in self.linear.items():
            h[i] = w
        h.setflags(write=False)
        return h

    @cached_property
    def J(self) -> np.ndarray:
        """Dense strictly upper-triangular coupling matrix."""
        J = np.zeros((self.n, self.n))
        for (i, j), w in self.quadratic.items():
            J[i, j] = w
        J.setflags(write=False)
        return J

    @cached_property
    def J_sym(self) -> np.ndarray:
        J = self.J + self.J.T
        J.setflags(write=False)
        return J

    @property
    def zz_only(self) -> bool:
        return not self.linear

    def constant_energy(self) -> float:
        """Energy of ``|0...0>``, i.e. the sum of all weights."""
        return float(sum(self.linear.values()) + sum(self.quadratic.values()))


def as_bits(x, n: int | None = None) -> np.ndarray:
    """Coerce a string like ``"0110"``, a sequence or an array into a bit array."""
    if isinstance(x, str):
        if not set(x) <= {"0", "1"}:
            raise ValueError(f"not a bitstring: {x!r}")
        bits = np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    else:
        bits = np.asarray(x)
        if bits.ndim != 1:
            raise ValueError("bitstring must be one-dimensional")
        if bits.size and (bits.min() < 0 or bits.max() > 1):
            raise ValueError("bitstring entries must be 0 or 1")
        bits = bits.astype(np.uint8)
    if n is not None and bits.size != n:
        raise DimensionError(f"bitstring has length {bits.size}, expected {n}")
    return bits


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def bits_to_index(bits) -> int:
    bits = np.asarray(bits, dtype=np.int64)
    return int((bits << np.arange(bits.size, dtype=np.int64)).sum())


def index_to_bits(index: int, n: int) -> np.ndarray:
    return ((int(index) >> np.arange(n)) & 1).astype(np.uint8)


def indices_to_bits(indices, n: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    return ((indices[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def spins(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def energy(H: IsingHamiltonian, x) -> float:
    """Energy ``<x|H|x>`` of a single bitstring."""
    s = spins(as_bits(x, H.n))
    return float(H.h @ s + s @ (H.J @ s))


def energies(H: IsingHamiltonian, X) -> np.ndarray:
    """Energies of a batch of bitstrings, shape ``(m, n)``."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != H.n:
        raise DimensionError(f"batch shape {X.shape} incompatible with n={H.n}")
    S = 1.0 - 2.0 * X.astype(np.float64)
    return S @ H.h + np.einsum("mi,mi->m", S @ H.J, S)


def all_energies(H: IsingHamiltonian) -> np.ndarray:
    """Energies of all ``2**n`` basis states, ordered by integer index."""
    if H.n > 26:
        raise ValueError("refusing to enumerate more than 2**26 states")
    out = np.empty(1 << H.n)
    chunk = 1 << min(H.n, 16)
    for start in range(0, out.size, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        out[start:start + chunk] = energies(H, indices_to_bits(idx, H.n))
    return out


class GaugeMask:
    """Bitflip gauge ``P_y``: XOR relabelling of basis states.

    ``provenance`` lists the constituent masks in composition order.
    """

    __slots__ = ("mask", "provenance")

    def __init__(self, mask, provenance: Iterable | None = None):
        m = as_bits(mask).copy()
        m.setflags(write=False)
        self.mask = m
        if provenance is None:
            provenance = (m,)
        self.provenance = tuple(as_bits(p, m.size) for p in provenance)

    @classmethod
    def identity(cls, n: int) -> "GaugeMask":
        return cls(np.zeros(n, dtype=np.uint8), provenance=())

    @property
    def n(self) -> int:
        return self.mask.size

    def compose(self, other) -> "GaugeMask":
        other = other if isinstance(other, GaugeMask) else GaugeMask(other)
        if other.n != self.n:
            raise DimensionError(f"cannot compose masks of length {self.n} and {other.n}")
        return GaugeMask(self.mask ^ other.mask, self.provenance + other.provenance)

    __xor__ = compose

    def apply(self, x) -> np.ndarray:
        return as_bits(x, self.n) ^ self.mask

    def __eq__(self, other):
        if isinstance(other, GaugeMask):
            return np.array_equal(self.mask, other.mask)
        return NotImplemented

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __str__(self):
        return bits_to_str(self.mask)

    def __repr__(self):
        return f"GaugeMask({bits_to_str(self.mask)!r})"


def _mask_bits(y, n):
    if isinstance(y, GaugeMask):
        if y.n != n:
            raise DimensionError(f"gauge has length {y.n}, expected {n}")
        return y.mask
    return as_bits(y, n)


def gauge_transform(H: IsingHamiltonian, y) -> IsingHamiltonian:
    """Return ``H^y = P_y H P_y``.

    ``energy(H^y, x) == energy(H, x ^ y)`` for every ``x``.
    """
    y = _mask_bits(y, H.n)
    lin = {i: (-w if y[i] else w) for i, w in H.linear.items()}
    quad = {(i, j): (-w if y[i] ^ y[j] else w) for (i, j), w in H.quadratic.items()}
    return IsingHamiltonian(H.n, lin, quad)


def generate_sk(n: int, seed) -> IsingHamiltonian:
    """Sherrington-Kirkpatrick instance with i.i.d. uniform +-1 couplings, no fields."""
    if n < 2:
        raise InvalidSizeError(f"SK instances need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    signs = 2 * rng.integers(0, 2, size=iu.size) - 1
    return IsingHamiltonian(
        n, {}, {(int(i), int(j)): float(s) for i, j, s in zip(iu, ju, signs)}
    )


def approximation_ratio(E, E_gs):
    """``E / E_GS`` for a negative reference energy. Works elementwise on arrays."""
    if np.any(np.asarray(E_gs) >= 0):
        raise InvalidReferenceError(f"reference energy must be negative, got {E_gs}")
    return np.asarray(E, dtype=float) / E_gs if np.ndim(E) else float(E) / float(E_gs)


def hamming_weight(X) -> np.ndarray | int:
    X = np.asarray(X)
    hw = X.sum(axis=-1)
    return int(hw) if X.ndim == 1 else hw.astype(np.int64)


def effective_hamming_weight(x_raw, g):
    """Hamming weight of raw sample(s) after unwinding gauge ``g``."""
    X = np.asarray(x_raw, dtype=np.uint8)
    n = X.shape[-1]
    mask = _mask_bits(g, n)
    return hamming_weight(X ^ mask)


# ---------------------------------------------------------------------------
# text format


def serialize_instance(H: IsingHamiltonian) -> str:
    def fmt(w):
        return str(int(w)) if float(w).is_integer() and abs(w) < 2**53 else repr(float(w))

    lines = [f"n {H.n}"]
    lines += [f"{i} {fmt(w)}" for i, w in H.linear.items()]
    lines += [f"{i} {j} {fmt(w)}" for (i, j), w in H.quadratic.items()]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> IsingHamiltonian:
    n = None
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ParseError("expected header 'n <int>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise ParseError(f"bad qubit count {parts[1]!r}", lineno) from None
            if n < 1:
                raise ParseError("qubit count must be positive", lineno)
            continue
        try:
            if len(parts) == 2:
                idx, w = (int(parts[0]),), float(parts[1])
            elif len(parts) == 3:
                idx, w = (int(parts[0]), int(parts[1])), float(parts[2])
            else:
                raise ParseError(f"expected 2 or 3 fields, got {len(parts)}", lineno)
        except ValueError:
            raise ParseError(f"malformed term {line!r}", lineno) from None
        if not math.isfinite(w):
            raise ParseError("non-finite weight", lineno)
        if any(not 0 <= k < n for k in idx):
            raise ParseError(f"index out of range for n={n}", lineno)
        if len(idx) == 1:
            if idx[0] in lin:
                raise ParseError(f"duplicate linear term {idx[0]}", lineno)
            lin[idx[0]] = w
        else:
            i, j = idx
            if i >= j:
                raise ParseError(f"quadratic term needs i < j, got {i} {j}", lineno)
            if idx in quad:
                raise ParseError(f"duplicate quadratic term {i} {j}", lineno)
            quad[idx] = w
    if n is None:
        raise ParseError("missing header 'n <int>'")
    return IsingHamiltonian(n, lin, quad)


def load_instance(path) -> IsingHamiltonian:
    return parse_instance(Path(path).read_text())


def save_instance(H: IsingHamiltonian, path) -> None:
    Path(path).write_text(serialize_instance(H))


def instance_hash(H: IsingHamiltonian) -> str:
    return hashlib.sha256(serialize_instance(H).encode()).hexdigest()[:16]
