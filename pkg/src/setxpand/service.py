"""Read-only expansion service consumed by the web UI.

Endpoints (JSON request/response):

* ``POST /expand``  {seed: [strings], top_n, method} ->
  {candidates: [{term, score, features[10]}], unresolved: [strings]}
* ``GET /vocab?prefix=&limit=``          term completions for seed entry
* ``GET /term/{t}/neighbors?type=&k=``   per-context nearest neighbors
* ``GET /meta``                          model metadata

The service is stateless per request and serves immutable models; a
malformed body or unknown method yields 400, a seed with no resolvable
term yields 422.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .contexts import CONTEXT_TYPES
from .expansion import ExpansionError
from .pipeline import ExpansionEngine


class ExpandRequest(BaseModel):
    seed: list[str] = Field(min_length=1)
    top_n: int = Field(default=10, ge=1, le=1000)
    method: str = "mlp"


def create_app(engine: ExpansionEngine,
               static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="setxpand", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": "malformed request",
                                     "errors": exc.errors()})

    @app.post("/expand")
    def expand(body: ExpandRequest):
        if body.method not in engine.methods():
            return JSONResponse(status_code=400,
                                content={"detail": f"unknown method {body.method!r}",
                                         "methods": engine.methods()})
        try:
            return engine.expand(body.seed, body.top_n, body.method)
        except ExpansionError as exc:
            return JSONResponse(status_code=422,
                                content={"detail": str(exc),
                                         "unresolved": list(body.seed)})

    @app.get("/vocab")
    def vocab(prefix: str = "", limit: int = 10):
        needle = prefix.lower()
        matches = []
        for group in engine.table.groups:
            if group.canonical.lower().startswith(needle):
                matches.append((group.corpus_frequency, group.canonical))
        matches.sort(key=lambda t: (-t[0], t[1]))
        return {"terms": [{"term": name, "frequency": freq}
                          for freq, name in matches[:max(0, limit)]]}

    @app.get("/term/{term}/neighbors")
    def neighbors(term: str, type: str = "lin", k: int = 10):
        if type not in CONTEXT_TYPES:
            return JSONResponse(status_code=400,
                                content={"detail": f"unknown context type {type!r}"})
        gid = engine.table.resolve(term)
        if gid is None:
            return JSONResponse(status_code=404,
                                content={"detail": f"unknown term {term!r}"})
        model = engine.models.get(type)
        if model is None or gid not in model:
            return {"term": engine.table.canonical(gid), "type": type,
                    "neighbors": []}
        return {
            "term": engine.table.canonical(gid),
            "type": type,
            "neighbors": [{"term": engine.table.canonical(g), "cosine": sim}
                          for g, sim in model.nearest(gid, max(1, k))],
        }

    @app.get("/meta")
    def meta():
        models = {
            ctx: {"vocab": len(model), "dim": int(model.vectors.shape[1])}
            for ctx, model in engine.models.items()
        }
        return {
            "context_types": sorted(engine.models),
            "methods": engine.methods(),
            "models": models,
            "params": {ctx: {"k": p.k, "k_prime": p.k_prime}
                       for ctx, p in sorted(engine.params.items())},
            "terms": len(engine.table.groups),
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
