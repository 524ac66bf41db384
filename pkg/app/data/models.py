from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

# Slot value for an empty memory. Ages are ints >= 0.
EMPTY = None
EMPTY_TOKEN = "EMPTY"

Age = Optional[int]


@dataclass(frozen=True)
class MemoryState:
    """Router memory as N age arrays (party A first), EMPTY or storage age per slot."""

    slots: Tuple[Tuple[Age, ...], ...]

    @staticmethod
    def empty(n_parties: int, mem_per_party: int) -> "MemoryState":
        return MemoryState(tuple((EMPTY,) * mem_per_party for _ in range(n_parties)))

    @staticmethod
    def from_lists(rows: Iterable[Sequence[Age]]) -> "MemoryState":
        return MemoryState(tuple(tuple(r) for r in rows))

    @property
    def n_parties(self) -> int:
        return len(self.slots)

    @property
    def mem_per_party(self) -> int:
        return len(self.slots[0]) if self.slots else 0

    def age(self, party: int, slot: int) -> Age:
        return self.slots[party][slot]

    def filled(self, party: int) -> List[int]:
        return [j for j, a in enumerate(self.slots[party]) if a is not EMPTY]

    def max_age(self) -> Optional[int]:
        ages = [a for row in self.slots for a in row if a is not EMPTY]
        return max(ages) if ages else None

    def clear(self, cells: Iterable[Tuple[int, int]]) -> "MemoryState":
        rows = [list(r) for r in self.slots]
        for party, slot in cells:
            rows[party][slot] = EMPTY
        return MemoryState.from_lists(rows)

    def to_json(self) -> List[List[object]]:
        return [[EMPTY_TOKEN if a is EMPTY else a for a in row] for row in self.slots]


@dataclass(frozen=True)
class BitConfiguration:
    """Concatenated filled/empty flags (a, b1, ..., b_{N-1}), each block of length m."""

    bits: Tuple[int, ...]
    n_parties: int
    mem_per_party: int

    def __post_init__(self) -> None:
        if len(self.bits) != self.n_parties * self.mem_per_party:
            raise ValueError(
                f"bit configuration length {len(self.bits)} != N*m = {self.n_parties * self.mem_per_party}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bit configuration entries must be 0 or 1")

    @staticmethod
    def from_rows(rows: Sequence[Sequence[int]]) -> "BitConfiguration":
        m = len(rows[0])
        bits = tuple(int(b) for r in rows for b in r)
        return BitConfiguration(bits, len(rows), m)

    @staticmethod
    def from_index(index: int, n_parties: int, mem_per_party: int) -> "BitConfiguration":
        n = n_parties * mem_per_party
        bits = tuple((index >> (n - 1 - i)) & 1 for i in range(n))
        return BitConfiguration(bits, n_parties, mem_per_party)

    @property
    def index(self) -> int:
        # bit 0 of the vector is the most significant bit
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def row(self, party: int) -> Tuple[int, ...]:
        m = self.mem_per_party
        return self.bits[party * m:(party + 1) * m]

    def filled(self, party: int) -> List[int]:
        return [j for j, b in enumerate(self.row(party)) if b]

    def filled_counts(self) -> List[int]:
        return [sum(self.row(k)) for k in range(self.n_parties)]

    def clear(self, cells: Iterable[Tuple[int, int]]) -> "BitConfiguration":
        bits = list(self.bits)
        for party, slot in cells:
            bits[party * self.mem_per_party + slot] = 0
        return BitConfiguration(tuple(bits), self.n_parties, self.mem_per_party)


@dataclass(frozen=True, order=True)
class Hyperedge:
    """One 0-based slot index per party, party A first."""

    members: Tuple[int, ...]

    @property
    def a(self) -> int:
        return self.members[0]

    def cells(self) -> List[Tuple[int, int]]:
        return list(enumerate(self.members))

    def labels(self) -> Tuple[int, ...]:
        return tuple(j + 1 for j in self.members)

    def b1_first_labels(self) -> Tuple[int, ...]:
        """1-based labels in flow order B1, A, B2, ..."""
        lab = self.labels()
        if len(lab) < 2:
            return lab
        return (lab[1], lab[0]) + lab[2:]


@dataclass(frozen=True)
class Matching:
    edges: Tuple[Hyperedge, ...] = ()

    def __len__(self) -> int:
        return len(self.edges)

    def cells(self) -> List[Tuple[int, int]]:
        return [c for e in self.edges for c in e.cells()]

    def is_disjoint(self) -> bool:
        cells = self.cells()
        return len(cells) == len(set(cells))

    def canonical(self) -> "Matching":
        return Matching(tuple(sorted(self.edges)))


@dataclass(frozen=True)
class RoundRecord:
    round: int
    num_measurements: int
    age_tuples: Tuple[Tuple[int, ...], ...] = ()
    attempted: int = 0
    snapshot: Optional[MemoryState] = field(default=None, compare=False)


def to_bit_configuration(state: MemoryState) -> BitConfiguration:
    bits = tuple(0 if a is EMPTY else 1 for row in state.slots for a in row)
    return BitConfiguration(bits, state.n_parties, state.mem_per_party)
