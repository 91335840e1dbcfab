"""
Effective areas in the (key x sequence) working space.

A range delete issued at sequence ``s`` over ``[lo, hi)`` invalidates every
entry ``(key, seq)`` with ``lo <= key < hi`` and ``seq_lo <= seq < s``. Both
dimensions are half-open.
"""

from dataclasses import dataclass
from typing import Any, Dict


@dataclass(frozen=True, order=True)
class EffectiveArea:
    """Rectangle [key_lo, key_hi) x [seq_lo, seq_hi)."""
    key_lo: int
    key_hi: int
    seq_lo: int
    seq_hi: int

    def __post_init__(self):
        if self.key_lo >= self.key_hi:
            raise ValueError(f"empty key range [{self.key_lo}, {self.key_hi})")
        if self.seq_lo >= self.seq_hi:
            raise ValueError(f"empty seq range [{self.seq_lo}, {self.seq_hi})")

    def covers(self, key: int, seq: int) -> bool:
        return covers(self, key, seq)

    def overlaps_keys(self, other: "EffectiveArea") -> bool:
        return self.key_lo < other.key_hi and other.key_lo < self.key_hi

    def with_keys(self, key_lo: int, key_hi: int) -> "EffectiveArea":
        """Fragment of this area over a narrower key range; seq bounds inherited."""
        return EffectiveArea(key_lo, key_hi, self.seq_lo, self.seq_hi)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "key_lo": self.key_lo,
            "key_hi": self.key_hi,
            "seq_lo": self.seq_lo,
            "seq_hi": self.seq_hi
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EffectiveArea":
        return cls(data["key_lo"], data["key_hi"], data["seq_lo"], data["seq_hi"])


@dataclass(frozen=True)
class RangeRecord:
    """A range delete as issued: its area with seq_lo at the GC floor."""
    area: EffectiveArea

    @classmethod
    def issue(cls, lo: int, hi: int, seq_lo: int, seq: int) -> "RangeRecord":
        return cls(EffectiveArea(lo, hi, min(seq_lo, seq - 1), seq))

    @property
    def seq(self) -> int:
        return self.area.seq_hi


def covers(area: EffectiveArea, key: int, seq: int) -> bool:
    """True iff (key, seq) lies inside the area."""
    return area.key_lo <= key < area.key_hi and area.seq_lo <= seq < area.seq_hi
