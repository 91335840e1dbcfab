"""
Store configuration.

Settings are read from flat ``key = value`` files, one per line. Blank lines
and ``#`` comments are ignored; unknown keys are rejected.
"""

import math
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

from gloran.utils.error_handling import ConfigError


class Strategy(str, Enum):
    """Range-delete strategy of a store."""
    DECOMP = "DECOMP"
    SCAN_DELETE = "SCAN_DELETE"
    LOOKUP_DELETE = "LOOKUP_DELETE"
    LRR = "LRR"
    GLORAN = "GLORAN"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name.strip().upper())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ConfigError(f"unknown strategy '{name}' (expected one of {valid})")


# Sequence number width on disk
SEQ_BYTES = 8

# key + seq + kind + 2-byte value length
ENTRY_OVERHEAD = SEQ_BYTES + 1 + 2

# DR-tree node: 8-byte node header + slots of {key_lo, key_hi, seq_lo, seq_hi, child}
DRTREE_NODE_HEADER = 8


def drtree_slot_size(key_size: int) -> int:
    return 2 * key_size + 3 * SEQ_BYTES


def parse_flat_file(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parse ``key = value`` lines into a dict of raw strings.

    Raises:
        ConfigError: If a line has no ``=`` or a key repeats
    """
    settings: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{number}: expected 'key = value'",
                details={"line": number}
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if key in settings:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}'", details={"line": number})
        settings[key] = value
    return settings


def format_flat_file(settings: Dict[str, Any]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in settings.items())


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


@dataclass
class StoreConfig:
    """Tunable parameters of a store. Sizes are in bytes unless noted."""
    memtable_capacity: int = 4096          # F, entries
    size_ratio: int = 10                   # T
    block_size: int = 4096                 # B
    key_size: int = 8                      # k
    entry_size: int = 64                   # e
    bloom_bits_per_entry: float = 10.0
    universe: int = 1 << 20                # U
    strategy: Strategy = Strategy.GLORAN
    index_buffer_capacity: int = 0         # F', 0 means F/16
    index_size_ratio: int = 10             # T'
    drtree_fanout: int = 10                # D
    eve_first_capacity: int = 1 << 13
    eve_bits_per_record: float = 10.0
    eve_enabled: bool = True
    eve_segment_width: int = 0             # 0 means automatic
    rtree_node_capacity: int = 8
    max_range_expansion: int = 1 << 16

    def __post_init__(self):
        if isinstance(self.strategy, str) and not isinstance(self.strategy, Strategy):
            self.strategy = Strategy.parse(self.strategy)
        if self.index_buffer_capacity == 0:
            self.index_buffer_capacity = max(1, self.memtable_capacity // 16)
        self.validate()

    # Derived sizes

    @property
    def value_size(self) -> int:
        """Largest value that fits in an entry slot."""
        return self.entry_size - self.key_size - ENTRY_OVERHEAD

    @property
    def entries_per_block(self) -> int:
        return self.block_size // self.entry_size

    @property
    def range_tombstone_size(self) -> int:
        return 2 * self.key_size + SEQ_BYTES

    @property
    def bloom_hash_count(self) -> int:
        return max(1, round(self.bloom_bits_per_entry * math.log(2)))

    @property
    def segment_width(self) -> int:
        """Key width of one EVE virtual-bit-array position."""
        if self.eve_segment_width:
            return self.eve_segment_width
        positions = min(max(1, self.universe >> 6), 1 << 20)
        return max(1, self.universe // positions)

    def level_capacity(self, level: int) -> int:
        return self.memtable_capacity * self.size_ratio ** level

    def index_level_capacity(self, level: int) -> int:
        return self.index_buffer_capacity * self.index_size_ratio ** level

    def validate(self) -> None:
        """
        Check parameter invariants.

        Raises:
            ConfigError: On the first violated invariant
        """
        checks = [
            (self.size_ratio >= 2, "size_ratio must be >= 2"),
            (self.drtree_fanout >= 2, "drtree_fanout must be >= 2"),
            (self.block_size >= self.entry_size, "block_size must be >= entry_size"),
            (self.memtable_capacity >= 1, "memtable_capacity must be >= 1"),
            (self.index_buffer_capacity >= 1, "index_buffer_capacity must be >= 1"),
            (self.index_size_ratio >= 2, "index_size_ratio must be >= 2"),
            (self.key_size >= 1, "key_size must be >= 1"),
            (self.entry_size >= self.key_size + ENTRY_OVERHEAD + 1,
             "entry_size must leave room for at least one value byte"),
            (self.universe >= 2 and self.universe & (self.universe - 1) == 0,
             "universe must be a power of two"),
            (self.universe <= 256 ** self.key_size, "universe does not fit in key_size bytes"),
            (self.bloom_bits_per_entry > 0, "bloom_bits_per_entry must be positive"),
            (self.eve_bits_per_record > 0, "eve_bits_per_record must be positive"),
            (self.eve_first_capacity >= 1, "eve_first_capacity must be >= 1"),
            (self.eve_segment_width == 0
             or self.eve_segment_width & (self.eve_segment_width - 1) == 0,
             "eve_segment_width must be 0 or a power of two"),
            (self.rtree_node_capacity >= 2, "rtree_node_capacity must be >= 2"),
            (self.max_range_expansion >= 1, "max_range_expansion must be >= 1"),
            (DRTREE_NODE_HEADER + self.drtree_fanout * drtree_slot_size(self.key_size) <= self.block_size,
             "a DR-tree node of drtree_fanout slots must fit in one block"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message, details=self.to_dict())

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            data[f.name] = value.value if isinstance(value, Strategy) else value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StoreConfig":
        known = {f.name: f for f in fields(cls) if not f.name.startswith("_")}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", details={"keys": unknown})

        kwargs: Dict[str, Any] = {}
        for name, value in data.items():
            default = known[name].default
            try:
                if not isinstance(value, str):
                    kwargs[name] = value
                elif name == "strategy":
                    kwargs[name] = Strategy.parse(value)
                elif isinstance(default, bool):
                    kwargs[name] = _parse_bool(value)
                elif isinstance(default, float):
                    kwargs[name] = float(value)
                else:
                    kwargs[name] = int(value, 0)
            except ValueError as e:
                raise ConfigError(f"invalid value for {name}: {value!r}", details={"key": name}) from e
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "StoreConfig":
        return cls.from_dict(parse_flat_file(text, source))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "StoreConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}", details={"path": str(path)}) from e
        return cls.from_text(text, source=str(path))

    def to_text(self) -> str:
        return format_flat_file(self.to_dict())

    def to_file(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def replace(self, **changes: Any) -> "StoreConfig":
        data = self.to_dict()
        data.update(changes)
        if "memtable_capacity" in changes and "index_buffer_capacity" not in changes:
            data["index_buffer_capacity"] = 0
        return StoreConfig.from_dict(data)
