from __future__ import annotations
from abc import ABC, abstractmethod
from typing import Optional

from app.config import Strategy
from app.data.models import BitConfiguration, Matching, MemoryState


class MatchingSolver(ABC):
    name: str

    @abstractmethod
    def supports(self, config: BitConfiguration, w: int, strategy: Strategy) -> bool:
        """True when this solver returns the strategy's matching for the instance."""

    @abstractmethod
    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
    ) -> Matching: ...
