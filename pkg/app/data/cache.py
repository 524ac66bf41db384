from __future__ import annotations

import threading
from collections import OrderedDict
from typing import Any, Callable, Hashable, Optional


class TableCache:
    """
    In-process cache for derived tables (measurement maps, fidelity lookups).
    Keys are plain tuples of the parameters a table depends on, so two Params
    that share (N, m, w) share one measurement table.
    Bounded by entry count; oldest entries are evicted first.
    """
    def __init__(self, max_entries: int = 64) -> None:
        self._store: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._max = max_entries
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        with self._lock:
            val = self._store.get(key)
            if val is not None:
                self._store.move_to_end(key)
                self.hits += 1
            return val

    def set(self, key: Hashable, value: Any) -> None:
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self._max:
                self._store.popitem(last=False)

    def get_or_build(self, key: Hashable, builder: Callable[[], Any]) -> Any:
        cached = self.get(key)
        if cached is not None:
            return cached
        # built outside the lock: builders can be slow and are pure
        value = builder()
        with self._lock:
            self.misses += 1
        self.set(key, value)
        return value

    def __len__(self) -> int:
        return len(self._store)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0


# shared by the analytic engine and key-rate lookups
TABLES = TableCache()
