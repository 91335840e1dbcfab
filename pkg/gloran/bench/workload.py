"""
Workload generation.

Operation mixes are drawn up front with numpy so that a seed fixes the trace
byte for byte. Keys follow a uniform or a YCSB-style scrambled zipfian
distribution over the key universe.
"""

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Union

import mmh3
import numpy as np

from gloran.models.config import format_flat_file, parse_flat_file
from gloran.models.operation import OpKind, Operation, write_trace
from gloran.utils.error_handling import ConfigError

UNIFORM = "uniform"
ZIPFIAN = "zipfian"

# exact zeta terms before switching to the integral tail
ZETA_EXACT_TERMS = 1 << 20

# (point_lookup, update) shares before range deletes replace updates
PRESETS: Dict[str, Dict[str, float]] = {
    "lookup_heavy": {"point_lookup": 0.9, "update": 0.1},
    "balanced": {"point_lookup": 0.5, "update": 0.5},
    "update_heavy": {"point_lookup": 0.1, "update": 0.9},
}

_MIX_ORDER = (
    (OpKind.UPDATE, "update"),
    (OpKind.GET, "point_lookup"),
    (OpKind.DELETE, "point_delete"),
    (OpKind.RANGE_DELETE, "range_delete"),
    (OpKind.SCAN, "range_lookup"),
)


@dataclass(frozen=True)
class WorkloadSpec:
    """Operation count, mix, range lengths and key distribution of a trace."""
    op_count: int = 100_000
    update: float = 0.5
    point_lookup: float = 0.5
    point_delete: float = 0.0
    range_delete: float = 0.0
    range_lookup: float = 0.0
    range_delete_length: int = 128
    range_lookup_length: int = 100
    distribution: str = UNIFORM
    theta: float = 0.99
    universe: int = 1 << 20
    preload: int = 0
    value_length: int = 16
    seed: int = 42

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        total = sum(self.fractions().values())
        if any(share < 0 for share in self.fractions().values()):
            raise ConfigError("operation fractions must be non-negative", details=self.fractions())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ConfigError(f"operation fractions sum to {total}, expected 1", details=self.fractions())
        if self.range_delete_length < 1 or self.range_lookup_length < 1:
            raise ConfigError("range lengths must be >= 1")
        if max(self.range_delete_length, self.range_lookup_length) > self.universe:
            raise ConfigError("range lengths cannot exceed the universe")
        if self.distribution not in (UNIFORM, ZIPFIAN):
            raise ConfigError(f"unknown key distribution '{self.distribution}'")
        if self.distribution == ZIPFIAN and not 0 < self.theta < 1:
            raise ConfigError("zipfian theta must lie in (0, 1)")
        if self.op_count < 0 or self.preload < 0:
            raise ConfigError("op_count and preload must be non-negative")
        if self.value_length < 1:
            raise ConfigError("value_length must be >= 1")

    def fractions(self) -> Dict[str, float]:
        return {name: getattr(self, name) for _, name in _MIX_ORDER}

    @classmethod
    def preset(cls, name: str, range_delete_ratio: float = 0.0, **overrides: Any) -> "WorkloadSpec":
        """
        A named mix in which ``range_delete_ratio`` of all operations are
        range deletes taken out of the update share.
        """
        if name not in PRESETS:
            raise ConfigError(f"unknown workload preset '{name}'", details={"presets": sorted(PRESETS)})
        mix = dict(PRESETS[name])
        if range_delete_ratio > mix["update"]:
            raise ConfigError(f"range_delete_ratio {range_delete_ratio} exceeds the update share of {name}")
        mix["update"] -= range_delete_ratio
        mix["range_delete"] = range_delete_ratio
        mix.update(overrides)
        return cls(**mix)

    # Spec files

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "WorkloadSpec":
        known = {f.name: f for f in fields(cls)}
        data = dict(data)
        preset = data.pop("preset", None)
        unknown = sorted(set(data) - set(known) - {"range_delete_ratio"})
        if unknown:
            raise ConfigError(f"unknown workload keys: {', '.join(unknown)}", details={"keys": unknown})

        values: Dict[str, Any] = {}
        for name, raw in data.items():
            if name == "range_delete_ratio":
                continue
            default = known[name].default
            try:
                if isinstance(default, str):
                    values[name] = raw.strip().lower()
                elif isinstance(default, float):
                    values[name] = float(raw)
                else:
                    values[name] = int(raw, 0)
            except ValueError as e:
                raise ConfigError(f"invalid value for {name}: {raw!r}", details={"key": name}) from e

        if preset is not None:
            ratio = float(data.get("range_delete_ratio", "0"))
            return cls.preset(preset.strip(), ratio, **values)
        return cls(**values)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "WorkloadSpec":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read workload spec {path}: {e}", details={"path": str(path)}) from e
        return cls.from_dict(parse_flat_file(text, source=str(path)))

    def to_text(self) -> str:
        return format_flat_file({f.name: getattr(self, f.name) for f in fields(self)})

    def with_changes(self, **changes: Any) -> "WorkloadSpec":
        return replace(self, **changes)


def zeta(n: int, theta: float) -> float:
    """Generalized harmonic number sum_{i=1..n} i^-theta."""
    exact = min(n, ZETA_EXACT_TERMS)
    total = float(np.sum(np.arange(1, exact + 1, dtype=np.float64) ** -theta))
    if n > exact:
        total += (n ** (1 - theta) - exact ** (1 - theta)) / (1 - theta)
    return total


class ZipfianGenerator:
    """
    YCSB-style zipfian over [0, n): item 0 is the most popular before
    scrambling, then items are hashed across the universe so hot keys do
    not cluster.
    """

    def __init__(self, n: int, theta: float = 0.99, scramble_seed: int = 0):
        self.n = n
        self.theta = theta
        self.scramble_seed = scramble_seed
        self.zetan = zeta(n, theta)
        self.alpha = 1.0 / (1.0 - theta)
        zeta2 = zeta(2, theta)
        self.eta = (1 - (2.0 / n) ** (1 - theta)) / (1 - zeta2 / self.zetan)

    def ranks(self, uniforms: np.ndarray) -> np.ndarray:
        """Popularity ranks for an array of U(0, 1) draws."""
        uz = uniforms * self.zetan
        tail = (self.n * (self.eta * uniforms - self.eta + 1) ** self.alpha).astype(np.int64)
        ranks = np.where(uz < 1.0, 0, np.where(uz < 1.0 + 0.5 ** self.theta, 1, tail))
        return np.clip(ranks, 0, self.n - 1)

    def scramble(self, ranks: np.ndarray) -> np.ndarray:
        n, seed = self.n, self.scramble_seed
        return np.fromiter(
            (mmh3.hash(int(r).to_bytes(8, "little"), seed, signed=False) % n for r in ranks),
            dtype=np.int64,
            count=len(ranks),
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.scramble(self.ranks(rng.random(size)))


def draw_keys(spec: WorkloadSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if spec.distribution == ZIPFIAN:
        return ZipfianGenerator(spec.universe, spec.theta, spec.seed).sample(rng, size)
    return rng.integers(0, spec.universe, size=size, dtype=np.int64)


def _range_starts(keys: np.ndarray, length: int, universe: int) -> np.ndarray:
    """Clamp range starts so [lo, lo + length) stays inside the universe."""
    return np.minimum(keys, universe - length)


def generate(spec: WorkloadSpec) -> Iterator[Operation]:
    """Deterministic operation stream for a spec."""
    rng = np.random.default_rng(spec.seed)
    kinds_available = [kind for kind, _ in _MIX_ORDER]
    shares = np.array([getattr(spec, name) for _, name in _MIX_ORDER], dtype=np.float64)
    shares = shares / shares.sum()

    preload_keys = draw_keys(spec, rng, spec.preload)
    for key in preload_keys:
        yield Operation.update(int(key), rng.bytes(spec.value_length))

    if spec.op_count == 0:
        return
    kinds = rng.choice(len(kinds_available), size=spec.op_count, p=shares)
    keys = draw_keys(spec, rng, spec.op_count)
    delete_starts = _range_starts(keys, spec.range_delete_length, spec.universe)
    lookup_starts = _range_starts(keys, spec.range_lookup_length, spec.universe)

    for i in range(spec.op_count):
        kind = kinds_available[kinds[i]]
        key = int(keys[i])
        if kind == OpKind.UPDATE:
            yield Operation.update(key, rng.bytes(spec.value_length))
        elif kind == OpKind.GET:
            yield Operation.get(key)
        elif kind == OpKind.DELETE:
            yield Operation.delete(key)
        elif kind == OpKind.RANGE_DELETE:
            lo = int(delete_starts[i])
            yield Operation.range_delete(lo, lo + spec.range_delete_length)
        else:
            lo = int(lookup_starts[i])
            yield Operation.scan(lo, lo + spec.range_lookup_length)


def generate_list(spec: WorkloadSpec) -> List[Operation]:
    return list(generate(spec))


def generate_trace(spec: WorkloadSpec, path: Union[str, Path]) -> int:
    """Write the spec's trace to ``path``; returns the number of operations."""
    return write_trace(path, generate(spec))
