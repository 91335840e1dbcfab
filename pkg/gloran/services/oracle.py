"""
Brute-force shadow oracle.

Replays operations against a plain dict and answers with the semantically
correct latest visible value. Used as ground truth by tests and by
``bench run --verify``.
"""

import bisect
from typing import Dict, List, Optional, Tuple

from gloran.models.operation import OpKind, Operation


class ShadowOracle:
    """Map key -> (seq, value) of live keys, replayed in operation order."""

    def __init__(self):
        self._live: Dict[int, Tuple[int, bytes]] = {}
        self._keys: List[int] = []
        self._seq = 0

    def _remove(self, key: int) -> None:
        if self._live.pop(key, None) is not None:
            index = bisect.bisect_left(self._keys, key)
            del self._keys[index]

    def apply(self, op: Operation) -> None:
        if op.kind == OpKind.UPDATE:
            self._seq += 1
            if op.key not in self._live:
                bisect.insort(self._keys, op.key)
            self._live[op.key] = (self._seq, op.value)
        elif op.kind == OpKind.DELETE:
            self._seq += 1
            self._remove(op.key)
        elif op.kind == OpKind.RANGE_DELETE:
            self._seq += 1
            start = bisect.bisect_left(self._keys, op.lo)
            end = bisect.bisect_left(self._keys, op.hi)
            for key in self._keys[start:end]:
                del self._live[key]
            del self._keys[start:end]

    def get(self, key: int) -> Optional[bytes]:
        """Latest visible value, or None when not found."""
        hit = self._live.get(key)
        return hit[1] if hit is not None else None

    def scan(self, lo: int, hi: int) -> List[Tuple[int, bytes]]:
        start = bisect.bisect_left(self._keys, lo)
        end = bisect.bisect_left(self._keys, hi)
        return [(key, self._live[key][1]) for key in self._keys[start:end]]

    def live_keys(self) -> List[int]:
        return list(self._keys)

    def __len__(self) -> int:
        return len(self._keys)


def oracle_apply(oracle: ShadowOracle, op: Operation) -> None:
    oracle.apply(op)


def oracle_get(oracle: ShadowOracle, key: int) -> Optional[bytes]:
    return oracle.get(key)
