"""QAOA circuits compiled onto a linear chain with a SWAP network.

Gates address *chain positions*.  A ``GateList`` remembers which logical
qubit starts at which position (``initial``) and where each one ends up
(``permutation``), both as logical -> position tuples.

Gate kinds and their unitaries:

``RZZ_SWAP(theta, a, b)``  SWAP . exp(-i theta/2 Z_a Z_b)
``MIX(beta, q)``           exp(-i beta X_q) = RX(2 beta)
``RZ(theta, q)``           exp(-i theta/2 Z_q)
``RX_HALF(theta, q)``      RX(theta) with theta = +-pi/2
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, ParseError
from .ising import IsingHamiltonian

RZZ_SWAP = "RZZ_SWAP"
MIX = "MIX"
RZ = "RZ"
RX_HALF = "RX_HALF"
TWO_QUBIT = frozenset({RZZ_SWAP})
KINDS = (RZZ_SWAP, MIX, RZ, RX_HALF)


class Gate(NamedTuple):
    kind: str
    theta: float
    q0: int
    q1: int = -1


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("need p >= 1 and len(gammas) == len(betas)")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def constant(cls, p: int, value: float = 0.1) -> "QaoaParams":
        return cls((value,) * p, (value,) * p)


@dataclass(frozen=True)
class GateOrdering:
    ordering_id: int
    assignment: tuple[int, ...]  # logical qubit -> chain position

    def __post_init__(self):
        a = tuple(int(x) for x in self.assignment)
        if sorted(a) != list(range(len(a))):
            raise ValueError(f"assignment {a} is not a permutation")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def identity(cls, n: int, ordering_id: int = 0) -> "GateOrdering":
        return cls(ordering_id, tuple(range(n)))


@dataclass(frozen=True)
class GateList:
    n: int
    gates: tuple[Gate, ...]
    initial: tuple[int, ...]
    permutation: tuple[int, ...]

    def __len__(self):
        return len(self.gates)

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def __add__(self, other: "GateList") -> "GateList":
        if other.n != self.n or other.initial != self.permutation:
            raise ValueError("gate lists do not chain")
        return GateList(self.n, self.gates + other.gates, self.initial, other.permutation)


def _inverse(assign: Sequence[int]) -> list[int]:
    inv = [0] * len(assign)
    for logical, pos in enumerate(assign):
        inv[pos] = logical
    return inv


def build_phase_network(
    H: IsingHamiltonian,
    gamma: float,
    ordering: GateOrdering | None = None,
    start: Sequence[int] | None = None,
) -> GateList:
    """Phase separator ``exp(-i gamma H)`` as a brick-pattern SWAP network.

    ``start`` overrides the ordering's assignment (used when chaining layers).
    Linear terms become RZ gates in front of the network.
    """
    n = H.n
    if start is None:
        start = ordering.assignment if ordering is not None else tuple(range(n))
    start = tuple(start)
    if len(start) != n:
        raise ValueError("ordering size does not match the Hamiltonian")
    pos2log = _inverse(start)
    gates = [Gate(RZ, float(2.0 * h * gamma), start[i]) for i, h in H.linear.items()]
    J = H.J
    for layer in range(n):
        for a in range(layer % 2, n - 1, 2):
            i, j = pos2log[a], pos2log[a + 1]
            w = J[min(i, j), max(i, j)]
            gates.append(Gate(RZZ_SWAP, float(2.0 * w * gamma), a, a + 1))
            pos2log[a], pos2log[a + 1] = j, i
    return GateList(n, tuple(gates), start, tuple(_inverse(pos2log)))


def build_qaoa_circuit(
    H: IsingHamiltonian, params: QaoaParams, ordering: GateOrdering | None = None
) -> GateList:
    """Full p-layer circuit; the |+>^n input state is the simulator's job."""
    perm = ordering.assignment if ordering is not None else tuple(range(H.n))
    circuit = None
    for gamma, beta in zip(params.gammas, params.betas):
        layer = build_phase_network(H, gamma, start=perm)
        mixer = tuple(Gate(MIX, beta, q) for q in range(H.n))
        layer = GateList(H.n, layer.gates + mixer, layer.initial, layer.permutation)
        circuit = layer if circuit is None else circuit + layer
        perm = layer.permutation
    return circuit


def native_gate_counts(gl: GateList) -> dict[str, int]:
    """Upper-bound native gate counts (iSWAP, RX(+-pi/2), RZ).

    Fused RZZ+SWAP costs 3 iSWAP, at most 4 RX and 5 RZ.  An arbitrary-angle
    RX (the mixer) is RZ.RX.RZ.RX.RZ, i.e. 2 RX + 3 RZ.
    """
    counts = {"iswap": 0, "rx": 0, "rz": 0}
    for g in gl.gates:
        if g.kind == RZZ_SWAP:
            counts["iswap"] += 3
            counts["rx"] += 4
            counts["rz"] += 5
        elif g.kind == MIX:
            counts["rx"] += 2
            counts["rz"] += 3
        elif g.kind == RX_HALF:
            counts["rx"] += 1
        elif g.kind == RZ:
            counts["rz"] += 1
    return counts


def sample_orderings(
    n: int, k: int = 10, seed=None, include_identity: bool = False
) -> list[GateOrdering]:
    """``k`` distinct random initial placements of logical qubits on the chain."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= 12 and k > math.factorial(n):
        raise CapacityError(f"cannot draw {k} distinct orderings of {n} qubits")
    rng = np.random.default_rng(seed)
    seen: list[tuple[int, ...]] = []
    if include_identity:
        seen.append(tuple(range(n)))
    if n <= 8 and k > math.factorial(n) // 2:
        pool = [p for p in permutations(range(n)) if p not in seen]
        picks = rng.choice(len(pool), size=k - len(seen), replace=False)
        seen += [pool[i] for i in picks]
    else:
        found = set(seen)
        while len(seen) < k:
            p = tuple(int(v) for v in rng.permutation(n))
            if p not in found:
                found.add(p)
                seen.append(p)
    return [GateOrdering(idx, p) for idx, p in enumerate(seen)]


def dump_circuit(gl: GateList) -> str:
    """Line-oriented text ``GATE theta q0 [q1]`` with header comments."""
    lines = [
        f"# n {gl.n}",
        "# initial " + " ".join(map(str, gl.initial)),
        "# permutation " + " ".join(map(str, gl.permutation)),
    ]
    for g in gl.gates:
        qs = f"{g.q0} {g.q1}" if g.kind in TWO_QUBIT else f"{g.q0}"
        lines.append(f"{g.kind} {float(g.theta)!r} {qs}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> GateList:
    n = None
    initial = permutation = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "n":
                n = int(parts[1])
            elif parts and parts[0] == "initial":
                initial = tuple(int(v) for v in parts[1:])
            elif parts and parts[0] == "permutation":
                permutation = tuple(int(v) for v in parts[1:])
            continue
        parts = line.split()
        if parts[0] not in KINDS:
            raise ParseError(f"unknown gate {parts[0]!r}", lineno)
        want = 4 if parts[0] in TWO_QUBIT else 3
        if len(parts) != want:
            raise ParseError(f"{parts[0]} expects {want - 2} qubit operand(s)", lineno)
        try:
            gates.append(Gate(parts[0], float(parts[1]), *(int(v) for v in parts[2:])))
        except ValueError:
            raise ParseError(f"malformed gate line {line!r}", lineno) from None
    if n is None or initial is None or permutation is None:
        raise ParseError("missing '# n', '# initial' or '# permutation' header")
    return GateList(n, tuple(gates), initial, permutation)


def replay_permutation(gl: GateList) -> tuple[int, ...]:
    """Recompute the final logical -> position map by applying every swap."""
    pos2log = _inverse(gl.initial)
    for g in gl.gates:
        if g.kind == RZZ_SWAP:
            pos2log[g.q0], pos2log[g.q1] = pos2log[g.q1], pos2log[g.q0]
    return tuple(_inverse(pos2log))
