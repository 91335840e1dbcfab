"""
Block device with I/O accounting.

Store files are real files on disk. Every transfer is charged to one counter
in units of ceil(bytes / B) blocks, so counts stay deterministic while the
store remains persistent.
"""

import logging
import os
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Dict, Union

from gloran.utils.error_handling import CorruptFileError, ErrorContext

logger = logging.getLogger(__name__)


class IOCategory(str, Enum):
    DATA_READ = "data_block_reads"
    DATA_WRITE = "data_block_writes"
    TOMBSTONE_READ = "tombstone_block_reads"
    INDEX_READ = "index_node_reads"
    INDEX_WRITE = "index_node_writes"


@dataclass
class IOCounters:
    """Block transfer counters. Counters never decrease."""
    data_block_reads: int = 0
    data_block_writes: int = 0
    tombstone_block_reads: int = 0
    index_node_reads: int = 0
    index_node_writes: int = 0

    def charge(self, category: IOCategory, blocks: int) -> None:
        setattr(self, category.value, getattr(self, category.value) + blocks)

    def snapshot(self) -> "IOCounters":
        return IOCounters(**self.to_dict())

    def __sub__(self, other: "IOCounters") -> "IOCounters":
        return IOCounters(**{
            f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)
        })

    @property
    def total(self) -> int:
        return sum(self.to_dict().values())

    def to_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def blocks_for(length: int, block_size: int) -> int:
    return -(-length // block_size)


class BlockDevice:
    """Reads and writes store files, charging every transfer to a counter."""

    def __init__(self, block_size: int):
        self.block_size = block_size
        self.counters = IOCounters()
        self._handles: Dict[Path, BinaryIO] = {}

    def _charge(self, category: IOCategory, length: int) -> int:
        blocks = blocks_for(length, self.block_size)
        self.counters.charge(category, blocks)
        return blocks

    def write_file(self, path: Union[str, Path], payload: bytes, category: IOCategory) -> int:
        """Replace a whole file. Returns the number of blocks charged."""
        path = Path(path)
        self.close(path)
        tmp = path.with_name(path.name + ".tmp")
        with ErrorContext(f"write {path.name}", path=path):
            with open(tmp, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, path)
        blocks = self._charge(category, len(payload))
        logger.debug(f"wrote {path.name}: {blocks} blocks ({category.value})")
        return blocks

    def read(self, path: Union[str, Path], offset: int, length: int, category: IOCategory) -> bytes:
        """Read ``length`` bytes at ``offset``; a short read means corruption."""
        path = Path(path)
        if length <= 0:
            return b""
        with ErrorContext(f"read {path.name}", path=path):
            handle = self._handles.get(path)
            if handle is None:
                handle = open(path, "rb")
                self._handles[path] = handle
            handle.seek(offset)
            data = handle.read(length)
        if len(data) != length:
            raise CorruptFileError(
                f"short read from {path.name}: wanted {length} bytes at {offset}, got {len(data)}",
                details={"path": str(path), "offset": offset}
            )
        self._charge(category, length)
        return data

    def read_blocks(self, path: Union[str, Path], first_block: int, count: int,
                    category: IOCategory) -> bytes:
        return self.read(path, first_block * self.block_size, count * self.block_size, category)

    def delete(self, path: Union[str, Path]) -> None:
        path = Path(path)
        self.close(path)
        with ErrorContext(f"delete {path.name}", path=path):
            if path.exists():
                path.unlink()

    def file_size(self, path: Union[str, Path]) -> int:
        path = Path(path)
        return path.stat().st_size if path.exists() else 0

    def close(self, path: Union[str, Path]) -> None:
        handle = self._handles.pop(Path(path), None)
        if handle is not None:
            handle.close()

    def close_all(self) -> None:
        for handle in self._handles.values():
            handle.close()
        self._handles.clear()
