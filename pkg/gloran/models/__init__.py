"""Domain models: entries, effective areas, configuration and trace operations"""

from .entry import (
    EntryKind,
    Entry,
    RangeTombstone,
    LookupOutcome,
    LookupResult,
    NOT_FOUND,
    DELETED_BY_TOMBSTONE,
    DELETED_BY_RANGE,
    resolve
)

from .effective_area import (
    EffectiveArea,
    RangeRecord,
    covers
)

from .config import (
    Strategy,
    StoreConfig,
    parse_flat_file,
    format_flat_file
)

from .operation import (
    OpKind,
    Operation,
    parse_line,
    iter_trace,
    read_trace,
    write_trace
)

__all__ = [
    # Entries
    'EntryKind',
    'Entry',
    'RangeTombstone',
    'LookupOutcome',
    'LookupResult',
    'NOT_FOUND',
    'DELETED_BY_TOMBSTONE',
    'DELETED_BY_RANGE',
    'resolve',
    # Working space
    'EffectiveArea',
    'RangeRecord',
    'covers',
    # Configuration
    'Strategy',
    'StoreConfig',
    'parse_flat_file',
    'format_flat_file',
    # Traces
    'OpKind',
    'Operation',
    'parse_line',
    'iter_trace',
    'read_trace',
    'write_trace'
]
