from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from app.data.models import BitConfiguration, Hyperedge, Matching, MemoryState

logger = logging.getLogger("qrouter")


@dataclass(frozen=True)
class HypergraphInstance:
    filled: BitConfiguration
    w: int
    hyperedges: Tuple[Hyperedge, ...]

    @property
    def n_parties(self) -> int:
        return self.filled.n_parties

    @property
    def mem_per_party(self) -> int:
        return self.filled.mem_per_party


@dataclass(frozen=True)
class WeightedHyperedge:
    edge: Hyperedge
    w1: int   # sum over B_i of |delta_bi - delta_a|
    w2: int   # sum of all member ages


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    reason: str
    lower: int
    upper: int
    size: int


def _partners(config: BitConfiguration, w: int) -> List[Dict[int, List[int]]]:
    """For each B_i (list position i-1): A slot -> filled B_i slots within w."""
    a_slots = config.filled(0)
    out: List[Dict[int, List[int]]] = []
    for k in range(1, config.n_parties):
        b_slots = config.filled(k)
        out.append({a: [b for b in b_slots if abs(b - a) <= w] for a in a_slots})
    return out


def enumerate_hyperedges(config: BitConfiguration, w: int) -> Tuple[Hyperedge, ...]:
    """All valid hyperedges in lexicographic (A, B1, ..., B_{N-1}) order."""
    partners = _partners(config, w)
    edges: List[Hyperedge] = []
    for a in config.filled(0):
        lists = [p[a] for p in partners]
        for combo in itertools.product(*lists):
            edges.append(Hyperedge((a,) + tuple(combo)))
    return tuple(edges)


def build_instance(config: BitConfiguration, w: int) -> HypergraphInstance:
    return HypergraphInstance(filled=config, w=w, hyperedges=enumerate_hyperedges(config, w))


def cardinality_bounds(config: BitConfiguration, w: int) -> Tuple[int, int]:
    """
    (lower, upper) of the matching size for a graph instance.
    lower: min over parties of nodes with positive degree on the bipartite A-B_i edges.
    upper: min over parties of the filled-memory count.
    """
    counts = config.filled_counts()
    upper = min(counts) if counts else 0

    a_slots = config.filled(0)
    a_connected = set()
    positive = []
    for k in range(1, config.n_parties):
        connected_b = 0
        for b in config.filled(k):
            hit = [a for a in a_slots if abs(b - a) <= w]
            if hit:
                connected_b += 1
                a_connected.update(hit)
        positive.append(connected_b)
    positive.insert(0, len(a_connected))
    lower = min(positive) if positive else 0
    return lower, upper


def check_bounds(config: BitConfiguration, w: int, size: int) -> BoundCheck:
    lower, upper = cardinality_bounds(config, w)
    if size > upper:
        return BoundCheck(False, "above_upper_bound", lower, upper, size)
    if size < lower:
        # The degree-based lower bound is not achievable in every graph.
        logger.info(
            "BOUND_LOWER_VIOLATION | w=%d | size=%d | lower=%d | upper=%d | bits=%s",
            w, size, lower, upper, "".join(map(str, config.bits)),
        )
        return BoundCheck(False, "below_lower_bound", lower, upper, size)
    return BoundCheck(True, "ok", lower, upper, size)


# -------------------------
# Weights
# -------------------------

def edge_ages(edge: Hyperedge, ages: MemoryState) -> Tuple[int, ...]:
    out = []
    for party, slot in edge.cells():
        a = ages.age(party, slot)
        if a is None:
            raise ValueError(f"hyperedge {edge.labels()} uses empty slot of party {party}")
        out.append(a)
    return tuple(out)


def weigh(edge: Hyperedge, ages: MemoryState) -> WeightedHyperedge:
    d = edge_ages(edge, ages)
    w1 = sum(abs(db - d[0]) for db in d[1:])
    return WeightedHyperedge(edge=edge, w1=w1, w2=sum(d))


def matching_weights(matching: Matching, ages: MemoryState) -> Tuple[int, int]:
    ws = [weigh(e, ages) for e in matching.edges]
    return sum(x.w1 for x in ws), sum(x.w2 for x in ws)


# -------------------------
# Debug listing
# -------------------------

def adjacency_listing(config: BitConfiguration, w: int, names: Optional[Sequence[str]] = None) -> str:
    n = config.n_parties
    names = list(names) if names else ["A"] + [f"B{i}" for i in range(1, n)]
    a_slots = config.filled(0)
    lines = [f"# w={w} N={n} m={config.mem_per_party} (1-based slots)"]
    for party in range(n):
        for slot in config.filled(party):
            if party == 0:
                partners = [
                    f"{names[k]}:{b + 1}"
                    for k in range(1, n)
                    for b in config.filled(k)
                    if abs(b - slot) <= w
                ]
            else:
                partners = [f"{names[0]}:{a + 1}" for a in a_slots if abs(a - slot) <= w]
            lines.append(f"{names[party]} {slot + 1} -> {', '.join(partners) if partners else '-'}")
    return "\n".join(lines)
