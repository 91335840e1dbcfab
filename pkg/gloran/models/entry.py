"""Entries, range tombstones and lookup outcomes"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple, Optional


class EntryKind(IntEnum):
    """On-disk kind byte of an entry."""
    VALUE = 0
    TOMBSTONE = 1


@dataclass(frozen=True)
class Entry:
    """A versioned key-value record or point tombstone."""
    key: int
    seq: int
    kind: EntryKind
    value: bytes = b""

    def __post_init__(self):
        if self.kind == EntryKind.TOMBSTONE and self.value:
            raise ValueError("tombstones carry no value")

    @property
    def is_tombstone(self) -> bool:
        return self.kind == EntryKind.TOMBSTONE

    @classmethod
    def put(cls, key: int, seq: int, value: bytes) -> "Entry":
        return cls(key, seq, EntryKind.VALUE, value)

    @classmethod
    def tombstone(cls, key: int, seq: int) -> "Entry":
        return cls(key, seq, EntryKind.TOMBSTONE)


class RangeTombstone(NamedTuple):
    """A local range tombstone [start_key, end_key) issued at seq."""
    start_key: int
    end_key: int
    seq: int

    def covers(self, key: int, seq: int) -> bool:
        return self.start_key <= key < self.end_key and seq < self.seq


class LookupOutcome(Enum):
    FOUND = "found"
    NOT_FOUND = "not_found"
    DELETED_BY_TOMBSTONE = "deleted_by_tombstone"
    DELETED_BY_RANGE = "deleted_by_range"


@dataclass(frozen=True)
class LookupResult:
    """Outcome of a point lookup. Exactly one outcome per result."""
    outcome: LookupOutcome
    value: Optional[bytes] = None
    seq: Optional[int] = None

    @property
    def found(self) -> bool:
        return self.outcome == LookupOutcome.FOUND

    @classmethod
    def of_found(cls, entry: Entry) -> "LookupResult":
        return cls(LookupOutcome.FOUND, entry.value, entry.seq)

    def to_dict(self):
        return {
            "outcome": self.outcome.value,
            "value": self.value.hex() if self.value is not None else None,
            "seq": self.seq
        }


NOT_FOUND = LookupResult(LookupOutcome.NOT_FOUND)
DELETED_BY_TOMBSTONE = LookupResult(LookupOutcome.DELETED_BY_TOMBSTONE)
DELETED_BY_RANGE = LookupResult(LookupOutcome.DELETED_BY_RANGE)


def resolve(entry: Entry, covering_seq: int = 0) -> LookupResult:
    """Decide the outcome for the newest version of a key found in a level."""
    if entry.seq == covering_seq:
        raise AssertionError(f"entry and range tombstone share seq {entry.seq}")
    if entry.seq < covering_seq:
        return DELETED_BY_RANGE
    if entry.is_tombstone:
        return DELETED_BY_TOMBSTONE
    return LookupResult.of_found(entry)
