"""HTTP service over a read-only graph store.

Endpoints serve graph JSON for the explorer UI and run retrieval and
question answering. Errors always come back as JSON objects of the shape
{"error": {"code", "message"}}.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import EngineConfig, GraphStore
from .graph import GemGraph, graph_to_dict
from .providers import (
    Embedder,
    Generator,
    ProviderConfig,
    ProviderError,
    build_embedder,
    build_generator,
)
from .retrieval import GEM_GREEDY, RetrievalConfig, assemble_context, retrieve


class RetrieveRequest(BaseModel):
    graph_id: str
    prompt: str
    budget: int | None = None
    strategy: str | None = None
    edge_bias: float | None = None


class AskRequest(BaseModel):
    graph_id: str
    prompt: str
    budget: int | None = None
    strategy: str | None = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


class _GraphCache:
    """Loads graphs once and recreates their build-time providers."""

    def __init__(self, store: GraphStore, config: EngineConfig):
        self.store = store
        self.config = config
        self._lock = threading.Lock()
        self._graphs: dict[str, tuple[GemGraph, Embedder, Generator]] = {}

    def get(self, graph_id: str) -> tuple[GemGraph, Embedder, Generator]:
        with self._lock:
            if graph_id in self._graphs:
                return self._graphs[graph_id]
        graph = self.store.load(graph_id)
        config_block = graph.build_meta.get("config", {})
        embedder = build_embedder(
            ProviderConfig.from_dict(
                config_block.get("embedder", self.config.embedder.to_dict())
            )
        )
        generator = build_generator(
            ProviderConfig.from_dict(
                config_block.get("generator", self.config.generator.to_dict())
            )
        )
        with self._lock:
            self._graphs[graph_id] = (graph, embedder, generator)
        return self._graphs[graph_id]


def create_app(store: GraphStore, config: EngineConfig | None = None) -> FastAPI:
    config = config or EngineConfig()
    cache = _GraphCache(store, config)
    app = FastAPI(title="gem", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc.errors()))

    @app.exception_handler(KeyError)
    async def _key_handler(request: Request, exc: KeyError):
        return _error(404, "graph_not_found", str(exc))

    @app.exception_handler(ProviderError)
    async def _provider_handler(request: Request, exc: ProviderError):
        return _error(502, "provider_failure", f"stage {exc.stage}: {exc}")

    @app.exception_handler(ValueError)
    async def _value_handler(request: Request, exc: ValueError):
        return _error(400, "invalid_request", str(exc))

    @app.get("/graphs")
    def list_graphs():
        return {"graphs": store.list_graphs()}

    @app.get("/graph/{graph_id}")
    def get_graph(graph_id: str, vectors: bool = False):
        try:
            graph, _, _ = cache.get(graph_id)
        except KeyError as exc:
            return _error(404, "graph_not_found", str(exc))
        return graph_to_dict(graph, include_vectors=vectors)

    def _retrieval_config(budget, strategy, edge_bias) -> RetrievalConfig:
        return RetrievalConfig(
            budget_nodes=budget if budget is not None else config.budget_nodes,
            strategy=strategy or GEM_GREEDY,
            edge_bias=edge_bias if edge_bias is not None else 0.0,
        )

    @app.post("/retrieve")
    def post_retrieve(req: RetrieveRequest):
        try:
            graph, embedder, _ = cache.get(req.graph_id)
        except KeyError as exc:
            return _error(404, "graph_not_found", str(exc))
        try:
            rconfig = _retrieval_config(req.budget, req.strategy, req.edge_bias)
            result = retrieve(graph, req.prompt, rconfig, embedder)
        except ValueError as exc:
            return _error(400, "invalid_request", str(exc))
        except ProviderError as exc:
            return _error(502, "provider_failure", f"stage {exc.stage}: {exc}")
        return result.to_dict()

    @app.post("/ask")
    def post_ask(req: AskRequest):
        try:
            graph, embedder, generator = cache.get(req.graph_id)
        except KeyError as exc:
            return _error(404, "graph_not_found", str(exc))
        try:
            rconfig = _retrieval_config(req.budget, req.strategy, None)
            result = retrieve(graph, req.prompt, rconfig, embedder)
            chunk_tokens = int(graph.build_meta.get("chunk_tokens", 100))
            context = assemble_context(
                graph, result, max_tokens=rconfig.budget_nodes * chunk_tokens
            )
            answer = generator.answer(req.prompt, [context] if context else [" "])
        except ValueError as exc:
            return _error(400, "invalid_request", str(exc))
        except ProviderError as exc:
            return _error(502, "provider_failure", f"stage {exc.stage}: {exc}")
        return {"answer": answer, "context": context, "retrieval": result.to_dict()}

    return app
