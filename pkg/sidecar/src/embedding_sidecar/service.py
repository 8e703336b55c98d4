"""HTTP surface: POST /embed and GET /healthz."""

import json
import threading

from fastapi import FastAPI, Request, Response

from .config import SidecarConfig
from .embedder import load_embedder


def _json_response(payload, status_code):
    return Response(
        content=json.dumps(payload), status_code=status_code, media_type="application/json"
    )


def create_app(config=None, *, embedder=None, loader=None):
    """Build the FastAPI app; `embedder`/`loader` injectable for tests."""
    config = config or SidecarConfig()
    if embedder is None:
        try:
            embedder = (loader or load_embedder)(config.model_name)
        except Exception:
            embedder = None

    app = FastAPI()
    app.state.config = config
    app.state.embedder = embedder
    inference_lock = threading.Lock()

    @app.post("/embed")
    async def embed(request: Request):
        if embedder is None:
            return _json_response({"error": "model not ready"}, 503)
        raw = await request.body()
        try:
            payload = json.loads(raw)
        except ValueError:
            return _json_response({"error": "body is not valid JSON"}, 400)
        if not isinstance(payload, dict) or "texts" not in payload:
            return _json_response({"error": "body must be an object with 'texts'"}, 400)
        texts = payload["texts"]
        if not isinstance(texts, list) or not all(
            isinstance(t, str) for t in texts
        ):
            return _json_response({"error": "'texts' must be an array of strings"}, 400)
        vectors = []
        with inference_lock:
            for start in range(0, len(texts), config.batch_size):
                vectors.extend(embedder.encode(texts[start : start + config.batch_size]))
        return {"dim": embedder.dim, "embeddings": vectors}

    @app.get("/healthz")
    def healthz():
        if embedder is None:
            return _json_response({"status": "unavailable"}, 503)
        return {"status": "ok", "model": embedder.name, "dim": embedder.dim}

    return app
