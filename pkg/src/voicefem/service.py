"""HTTP service exposing the analysis pipeline.

Endpoints:

* ``POST /v1/analyze`` - raw WAV bytes in, analysis JSON out (numeric
  fields rounded to 3 decimals). 400 for undecodable input, 413 for
  oversized uploads, 422 when the recording holds too little speech.
* ``GET /v1/health`` - 200 with model/calibration version tags once both
  are loaded, 503 before that.

One model and one calibration map are loaded per process; requests share
them read-only, so concurrent analyses are safe and idempotent.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .audio import load_wav
from .calibration import CalibrationMap
from .classifier import load_model
from .errors import (
    InsufficientSpeech,
    MalformedContainer,
    UnsupportedEncoding,
    VoicefemError,
)
from .pipeline import PipelineConfig, estimate_vfp
from .vad import VadConfig

LOCALHOST_ORIGIN_REGEX = r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$"


@dataclass(frozen=True)
class ServiceConfig:
    model_path: str = ""
    calibration_path: str = ""
    host: str = "127.0.0.1"
    port: int = 8570
    max_upload_bytes: int = 32 * 1024 * 1024
    request_timeout_s: float = 60.0
    cors_origins: tuple[str, ...] | None = None  # None -> localhost only
    vad: VadConfig = field(default_factory=VadConfig)

    def __post_init__(self):
        if self.max_upload_bytes < 1024 * 1024:
            raise ValueError("max_upload_bytes must be at least 1 MiB")

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        """Load TOML or JSON configuration."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError:
                import tomli as tomllib
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
        vad = VadConfig(**doc.pop("vad", {}))
        if "cors_origins" in doc and doc["cors_origins"] is not None:
            doc["cors_origins"] = tuple(doc["cors_origins"])
        return cls(vad=vad, **doc)

    def with_env_overrides(self, environ=None) -> "ServiceConfig":
        """Apply VFP_PORT / VFP_MODEL / VFP_CALIB environment variables."""
        env = os.environ if environ is None else environ
        updates = {}
        if env.get("VFP_PORT"):
            updates["port"] = int(env["VFP_PORT"])
        if env.get("VFP_MODEL"):
            updates["model_path"] = env["VFP_MODEL"]
        if env.get("VFP_CALIB"):
            updates["calibration_path"] = env["VFP_CALIB"]
        return replace(self, **updates) if updates else self


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:12]


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the FastAPI app; the model loads during startup."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.bundle = load_model(config.model_path)
        with open(config.calibration_path, encoding="utf-8") as fh:
            app.state.cal = CalibrationMap.from_json(fh.read())
        app.state.versions = {
            "model_version": _digest(config.model_path),
            "calibration_version": _digest(config.calibration_path),
        }
        yield

    app = FastAPI(title="voicefem", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.bundle = None
    app.state.cal = None
    app.state.versions = {}

    if config.cors_origins is None:
        app.add_middleware(CORSMiddleware, allow_origin_regex=LOCALHOST_ORIGIN_REGEX,
                           allow_methods=["*"], allow_headers=["*"])
    else:
        app.add_middleware(CORSMiddleware, allow_origins=list(config.cors_origins),
                           allow_methods=["*"], allow_headers=["*"])

    @app.get("/v1/health")
    def health():
        if app.state.bundle is None or app.state.cal is None:
            return JSONResponse({"status": "loading"}, status_code=503)
        return {"status": "ok", **app.state.versions}

    def _analyze(data: bytes) -> dict:
        buf = load_wav(data)
        cfg = PipelineConfig(vad=config.vad)
        return estimate_vfp(buf, app.state.bundle, app.state.cal, cfg).to_dict(ndigits=3)

    @app.post("/v1/analyze")
    async def analyze(request: Request):
        data = await request.body()
        if len(data) > config.max_upload_bytes:
            return _error(413, "too_large", f"body exceeds {config.max_upload_bytes} bytes")
        if app.state.bundle is None:
            return _error(503, "loading", "model not loaded yet")
        headers = dict(app.state.versions)
        try:
            doc = await asyncio.wait_for(
                run_in_threadpool(_analyze, data), timeout=config.request_timeout_s)
        except MalformedContainer as exc:
            return _error(400, "malformed_container", str(exc))
        except UnsupportedEncoding as exc:
            return _error(400, "unsupported_encoding", str(exc))
        except InsufficientSpeech as exc:
            return _error(422, "insufficient_speech", str(exc))
        except asyncio.TimeoutError:
            return _error(500, "timeout", "analysis exceeded the configured timeout")
        except VoicefemError as exc:
            return _error(500, "internal", str(exc))
        return JSONResponse(doc, headers={f"X-{k.replace('_', '-')}": v for k, v in headers.items()})

    return app


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse({"error": code, "detail": detail}, status_code=status)


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI ``serve`` verb."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
