from __future__ import annotations

from typing import Dict, Optional

import networkx as nx
import networkx.algorithms.flow as flow

from app.config import Strategy
from app.data.models import BitConfiguration, Hyperedge, Matching, MemoryState
from app.matching.base import MatchingSolver

SOURCE = ("s", 0)
SINK = ("t", 0)


def flow_network(config: BitConfiguration, w: int) -> nx.DiGraph:
    """
    source -> B1 -> A -> A' -> B2 -> sink, unit capacities.
    The A layer is doubled so each A memory carries at most one unit of flow.
    """
    g = nx.DiGraph()
    g.add_node(SOURCE)
    g.add_node(SINK)
    a_slots = config.filled(0)
    b1_slots = config.filled(1)
    b2_slots = config.filled(2)

    for b in b1_slots:
        g.add_edge(SOURCE, ("b1", b), capacity=1)
    for a in a_slots:
        g.add_edge(("a", a), ("a2", a), capacity=1)
        for b in b1_slots:
            if abs(b - a) <= w:
                g.add_edge(("b1", b), ("a", a), capacity=1)
        for b in b2_slots:
            if abs(b - a) <= w:
                g.add_edge(("a2", a), ("b2", b), capacity=1)
    for b in b2_slots:
        g.add_edge(("b2", b), SINK, capacity=1)
    return g


def max_matching_flow3(config: BitConfiguration, w: int) -> Matching:
    if config.n_parties != 3:
        raise ValueError(f"network-flow matching needs N = 3, got N = {config.n_parties}")
    g = flow_network(config, w)
    value, fd = flow.maximum_flow(g, SOURCE, SINK)

    edges = []
    for a in config.filled(0):
        if fd.get(("a", a), {}).get(("a2", a), 0) < 1:
            continue
        b1 = _carrier(fd, config.filled(1), lambda b: (("b1", b), ("a", a)))
        b2 = _carrier(fd, config.filled(2), lambda b: (("a2", a), ("b2", b)))
        if b1 is None or b2 is None:
            raise RuntimeError(f"inconsistent flow through A slot {a}")
        edges.append(Hyperedge((a, b1, b2)))

    if len(edges) != int(round(value)):
        raise RuntimeError(f"flow value {value} != extracted matching size {len(edges)}")
    return Matching(tuple(edges))


def _carrier(fd: Dict, slots, arc) -> Optional[int]:
    for b in slots:
        u, v = arc(b)
        if fd.get(u, {}).get(v, 0) >= 1:
            return b
    return None


class Flow3Solver(MatchingSolver):
    name = "flow3"

    def supports(self, config: BitConfiguration, w: int, strategy: Strategy) -> bool:
        # returns *a* maximum matching, not the canonical one
        return False

    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
    ) -> Matching:
        return max_matching_flow3(config, w)
