"""
Store statistics and maintenance endpoints.
"""

from fastapi import APIRouter
from fastapi.responses import JSONResponse

from gloran.services.engine import get_store

router = APIRouter()


@router.get("/api/stats")
async def get_stats():
    """
    Counters, I/O totals, memory and disk footprint of the store.
    """
    store = get_store()
    return JSONResponse(
        content={
            "success": True,
            "strategy": store.strategy.value,
            "last_seq": store.sequencer.current,
            "io": store.device.counters.to_dict(),
            "memory": store.memory_bytes(),
            "disk_bytes": store.disk_bytes(),
            "stats": store.stats_dict()
        }
    )


@router.post("/api/flush")
async def flush():
    """Flush the memtable into level 1."""
    store = get_store()
    store.flush()
    return JSONResponse(
        content={
            "success": True,
            "message": "Memtable flushed",
            "levels": store.stats_dict()["levels"]
        }
    )
