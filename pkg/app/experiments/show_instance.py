from __future__ import annotations

from typing import Sequence, Tuple

from app.config import Strategy
from app.data.models import BitConfiguration
from app.experiments.spec import ExperimentSpec
from app.matching.hypergraph import adjacency_listing, cardinality_bounds, enumerate_hyperedges
from app.matching.router import SolverRouter

# a = (1,0,1,0), b1 = (1,1,0,1), b2 = (0,0,1,1)
EXAMPLE_ROWS = ((1, 0, 1, 0), (1, 1, 0, 1), (0, 0, 1, 1))


def parse_bits(raw: str) -> Tuple[Tuple[int, ...], ...]:
    """'1010,1101,0011' -> ((1,0,1,0), (1,1,0,1), (0,0,1,1)); one group per party, A first."""
    rows = tuple(tuple(int(ch) for ch in grp.strip()) for grp in raw.split(","))
    if len({len(r) for r in rows}) != 1 or any(b not in (0, 1) for r in rows for b in r):
        raise ValueError(f"bad configuration {raw!r}: equal-length groups of 0/1 expected")
    return rows


def describe_instance(config: BitConfiguration, ws: Sequence[int], router: SolverRouter) -> str:
    out = []
    for w in ws:
        edges = enumerate_hyperedges(config, w)
        lower, upper = cardinality_bounds(config, w)
        matching = router.solve(config, w, Strategy.S0)
        out.append(adjacency_listing(config, w))
        out.append("hyperedges (A,B1,..): " + (" ".join("{" + ",".join(map(str, e.labels())) + "}" for e in edges) or "-"))
        out.append("hyperedges (B1,A,B2..): " + (" ".join("{" + ",".join(map(str, e.b1_first_labels())) + "}" for e in edges) or "-"))
        out.append(f"bounds: lower={lower} upper={upper} | l={len(matching)}")
        out.append("")
    return "\n".join(out)


def cmd_show_instance(spec: ExperimentSpec) -> str:
    rows = spec.bits or EXAMPLE_ROWS
    config = BitConfiguration.from_rows(rows)
    m = config.mem_per_party
    text = describe_instance(config, range(m - 1, -1, -1), SolverRouter(spec.match_limit))
    print(text)
    return text
