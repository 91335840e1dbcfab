"""Storage engine: LSM-tree, global range-record index and validity estimator"""

from .block_device import BlockDevice, IOCategory, IOCounters
from .engine import GloranStore, Store, get_store, open_store, reset_store
from .lsm_store import LsmStore
from .oracle import ShadowOracle
from .sequence import SequenceCounter

__all__ = [
    'BlockDevice',
    'IOCategory',
    'IOCounters',
    'GloranStore',
    'Store',
    'open_store',
    'get_store',
    'reset_store',
    'LsmStore',
    'ShadowOracle',
    'SequenceCounter'
]
