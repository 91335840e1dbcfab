"""
Trace operations and the trace file format.

One operation per line, space separated:
    U <key> <valhex>    put
    G <key>             point lookup
    D <key>             point delete
    R <lo> <hi>         range delete over [lo, hi)
    S <lo> <hi>         range lookup over [lo, hi)
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Union

from gloran.utils.error_handling import TraceParseError


class OpKind(str, Enum):
    UPDATE = "U"
    GET = "G"
    DELETE = "D"
    RANGE_DELETE = "R"
    SCAN = "S"

    @property
    def is_mutation(self) -> bool:
        return self in (OpKind.UPDATE, OpKind.DELETE, OpKind.RANGE_DELETE)


@dataclass(frozen=True)
class Operation:
    """A single trace operation."""
    kind: OpKind
    key: int
    hi: Optional[int] = None
    value: bytes = b""

    @classmethod
    def update(cls, key: int, value: bytes) -> "Operation":
        return cls(OpKind.UPDATE, key, value=value)

    @classmethod
    def get(cls, key: int) -> "Operation":
        return cls(OpKind.GET, key)

    @classmethod
    def delete(cls, key: int) -> "Operation":
        return cls(OpKind.DELETE, key)

    @classmethod
    def range_delete(cls, lo: int, hi: int) -> "Operation":
        return cls(OpKind.RANGE_DELETE, lo, hi)

    @classmethod
    def scan(cls, lo: int, hi: int) -> "Operation":
        return cls(OpKind.SCAN, lo, hi)

    @property
    def lo(self) -> int:
        return self.key

    def to_line(self) -> str:
        if self.kind == OpKind.UPDATE:
            return f"U {self.key} {self.value.hex()}"
        if self.kind in (OpKind.GET, OpKind.DELETE):
            return f"{self.kind.value} {self.key}"
        return f"{self.kind.value} {self.key} {self.hi}"


_ARITY = {
    OpKind.UPDATE: 2,
    OpKind.GET: 1,
    OpKind.DELETE: 1,
    OpKind.RANGE_DELETE: 2,
    OpKind.SCAN: 2,
}


def parse_line(line: str, number: int) -> Optional[Operation]:
    """
    Parse one trace line. Blank lines yield None.

    Raises:
        TraceParseError: If the line is malformed
    """
    parts = line.split()
    if not parts:
        return None

    try:
        kind = OpKind(parts[0])
    except ValueError:
        raise TraceParseError(f"unknown operation '{parts[0]}'", number)

    if len(parts) - 1 != _ARITY[kind]:
        raise TraceParseError(
            f"'{kind.value}' takes {_ARITY[kind]} arguments, got {len(parts) - 1}", number
        )

    try:
        key = int(parts[1])
        if key < 0:
            raise ValueError("negative key")
        if kind == OpKind.UPDATE:
            return Operation.update(key, bytes.fromhex(parts[2]))
        if kind in (OpKind.RANGE_DELETE, OpKind.SCAN):
            hi = int(parts[2])
            if hi <= key:
                raise ValueError(f"empty range [{key}, {hi})")
            return Operation(kind, key, hi)
        return Operation(kind, key)
    except ValueError as e:
        raise TraceParseError(str(e), number) from e


def iter_trace(lines: Iterable[str]) -> Iterator[Operation]:
    for number, line in enumerate(lines, start=1):
        op = parse_line(line, number)
        if op is not None:
            yield op


def read_trace(path: Union[str, Path]) -> List[Operation]:
    with open(path, "r", encoding="utf-8") as handle:
        return list(iter_trace(handle))


def write_trace(path: Union[str, Path], operations: Iterable[Operation]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for op in operations:
            handle.write(op.to_line())
            handle.write("\n")
            count += 1
    return count
