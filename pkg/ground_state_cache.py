import logging
import threading
from collections import OrderedDict
from typing import Any, Callable, Hashable, Optional

from config import GROUND_CACHE_SIZE

logger = logging.getLogger("susy_chain")


class GroundStateCache:
    """Read-mostly cache of zero-energy states keyed by (ell, L)"""
    def __init__(self, max_entries: int = GROUND_CACHE_SIZE):
        self.entries: "OrderedDict[Hashable, Any]" = OrderedDict()
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Optional[Any]:
        """Return a cached entry or None"""
        with self._lock:
            value = self.entries.get(key)
            if value is not None:
                self.hits += 1
            return value

    def add(self, key: Hashable, value: Any) -> Any:
        """Store an entry thread-safely; the first writer wins"""
        with self._lock:
            if key in self.entries:
                return self.entries[key]
            self.entries[key] = value

            # Trim cache if too large
            while len(self.entries) > self.max_entries:
                self.entries.popitem(last=False)
            return value

    def get_or_compute(self, key: Hashable, factory: Callable[[], Any]) -> Any:
        cached = self.get(key)
        if cached is not None:
            return cached
        with self._lock:
            self.misses += 1
        logger.debug(f"Ground state cache miss for {key}")
        return self.add(key, factory())

    def clear(self):
        """Clear cache"""
        with self._lock:
            self.entries = OrderedDict()
            self.hits = 0
            self.misses = 0

    def __len__(self):
        with self._lock:
            return len(self.entries)
