"""
Main FastAPI application for gloran.

Serves one key-value store over HTTP. The store directory and its
configuration come from the environment (see SETUP.md).
"""

import os
from contextlib import asynccontextmanager

from dotenv import load_dotenv
from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from gloran.api.kv import router as kv_router
from gloran.api.stats import router as stats_router
from gloran.services.engine import get_store, reset_store
from gloran.utils.error_handling import (
    GloranError,
    format_error_response,
    is_client_error,
    logger
)

# GLORAN_* settings may come from a .env file
load_dotenv()

VERSION = "0.1.0"


@asynccontextmanager
async def lifespan(app: FastAPI):
    yield
    reset_store()


# Create FastAPI app
app = FastAPI(
    title="gloran",
    description="LSM-tree key-value store with global range deletes",
    version=VERSION,
    lifespan=lifespan
)

# Include routers
app.include_router(kv_router)
app.include_router(stats_router)


# Global Exception Handlers

@app.exception_handler(GloranError)
async def gloran_error_handler(request: Request, exc: GloranError):
    """
    Map store errors to HTTP: bad requests are 400, store failures 500.
    """
    client_error = is_client_error(exc)
    if client_error:
        logger.warning(f"{type(exc).__name__} in {request.url.path}: {exc.message}")
    else:
        logger.error(f"{type(exc).__name__} in {request.url.path}: {exc.message}")

    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST if client_error else status.HTTP_500_INTERNAL_SERVER_ERROR,
        content=format_error_response(exc, include_details=client_error)
    )


@app.exception_handler(StarletteHTTPException)
async def http_exception_handler(request: Request, exc: StarletteHTTPException):
    """
    Route-level HTTPExceptions (such as 404 on a missing key) in the common error shape.
    """
    logger.warning(f"HTTP {exc.status_code} in {request.url.path}: {exc.detail}")

    return JSONResponse(
        status_code=exc.status_code,
        content={
            "success": False,
            "error_type": "HTTPException",
            "message": exc.detail
        }
    )


def jsonable_errors(exc: RequestValidationError) -> list:
    return [{"loc": list(e.get("loc", ())), "msg": e.get("msg", "")} for e in exc.errors()]


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """
    Malformed path, query or body parameters are 422 with the failing fields.
    """
    logger.warning(f"Validation error in {request.url.path}: {exc.errors()}")

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "success": False,
            "error_type": "ValidationError",
            "message": "Invalid request data",
            "details": jsonable_errors(exc)
        }
    )


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    """
    Anything that escaped the store as a non-GloranError is a 500.
    """
    logger.error(f"Unexpected error in {request.url.path}: {type(exc).__name__}: {exc}", exc_info=True)

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "success": False,
            "error_type": type(exc).__name__,
            "message": "An unexpected error occurred."
        }
    )

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/api/health")
async def health_check():
    """
    Health check used by App Runner; opens the store if needed.

    Returns:
        JSON response, 503 when the store cannot be opened
    """
    try:
        store = get_store()
        healthy = True
        detail = {"strategy": store.strategy.value, "root": str(store.root)}
    except GloranError as e:
        healthy = False
        detail = {"error": e.message}

    return JSONResponse(
        status_code=status.HTTP_200_OK if healthy else status.HTTP_503_SERVICE_UNAVAILABLE,
        content={
            "status": "healthy" if healthy else "degraded",
            "service": "gloran",
            "version": VERSION,
            "store": detail
        }
    )


@app.get("/api/info")
async def info():
    """
    Get API information.

    Returns:
        JSON response listing the endpoints
    """
    return JSONResponse(
        content={
            "name": "gloran API",
            "version": VERSION,
            "description": "LSM-tree key-value store comparing range-delete strategies",
            "endpoints": {
                "health": "/api/health",
                "kv": "/api/kv/{key} (GET/PUT/DELETE)",
                "range_delete": "/api/kv/range-delete (POST)",
                "scan": "/api/kv?lo=&hi= (GET)",
                "stats": "/api/stats (GET)",
                "flush": "/api/flush (POST)"
            }
        }
    )


if __name__ == "__main__":
    import uvicorn

    port = int(os.getenv("PORT", 8080))
    uvicorn.run(
        "gloran.main:app",
        host="0.0.0.0",
        port=port,
        reload=True
    )
