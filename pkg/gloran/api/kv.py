"""
Key-value API endpoints.

Keys are integers of the store's universe; values travel as hex strings.
"""

from typing import Optional

from fastapi import APIRouter, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from gloran.services.engine import get_store
from gloran.utils.error_handling import logger

router = APIRouter()


class PutRequest(BaseModel):
    """Request model for writing a value."""
    value: str


class RangeDeleteRequest(BaseModel):
    """Request model for deleting [lo, hi)."""
    lo: int
    hi: int


def _decode_value(value: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise HTTPException(status_code=400, detail="value must be a hex string")


@router.put("/api/kv/{key}")
async def put_value(key: int, request: PutRequest):
    """
    Write a value under key.

    Returns:
        JSON response with the sequence number assigned to the write
    """
    value = _decode_value(request.value)
    seq = get_store().put(key, value)
    return JSONResponse(content={"success": True, "key": key, "seq": seq})


@router.get("/api/kv/{key}")
async def get_value(key: int):
    """
    Point lookup.

    Raises:
        HTTPException: 404 if the key is absent or deleted
    """
    result = get_store().get(key)
    if not result.found:
        raise HTTPException(
            status_code=404,
            detail=f"key {key} not found ({result.outcome.value})"
        )
    return JSONResponse(
        content={
            "success": True,
            "key": key,
            "value": result.value.hex(),
            "seq": result.seq
        }
    )


@router.delete("/api/kv/{key}")
async def delete_value(key: int):
    """Write a point tombstone for key."""
    seq = get_store().delete(key)
    return JSONResponse(content={"success": True, "key": key, "seq": seq})


@router.post("/api/kv/range-delete")
async def range_delete(request: RangeDeleteRequest):
    """
    Delete every key in [lo, hi) with the store's range-delete strategy.

    Returns:
        JSON response with the number of sequence numbers the strategy used
    """
    store = get_store()
    consumed = store.range_delete(request.lo, request.hi)
    logger.info(f"range delete [{request.lo}, {request.hi}) via {store.strategy.value}")
    return JSONResponse(
        content={
            "success": True,
            "lo": request.lo,
            "hi": request.hi,
            "strategy": store.strategy.value,
            "consumed": consumed
        }
    )


@router.get("/api/kv")
async def scan(lo: int = Query(...), hi: int = Query(...), limit: Optional[int] = Query(None, ge=1)):
    """
    Live pairs in [lo, hi), ascending by key.

    Args:
        lo: Inclusive lower key
        hi: Exclusive upper key
        limit: Optional cap on returned items
    """
    items = get_store().scan(lo, hi)
    if limit is not None:
        items = items[:limit]
    return JSONResponse(
        content={
            "success": True,
            "count": len(items),
            "items": [{"key": key, "value": value.hex()} for key, value in items]
        }
    )
