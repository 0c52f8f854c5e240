"""FastAPI application exposing the provider wire protocol.

POST /embed  {"texts": [...]}                -> {"dim": d, "vectors": [[...]]}
POST /facts  {"sentences": [{doc_id,index,text}]} -> {"facts": [interchange...]}
GET  /health                                 -> {"status": "ok", "dim": d}

Errors: 400 oversize (or empty) batch, 422 empty text entry, 503 models not
loaded yet. Inference is serialized internally; the service is stateless
between requests.
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import SidecarConfig
from .encoder import make_encoder
from .srl import RuleSrl


class EmbedRequest(BaseModel):
    texts: list[str]


class SentenceIn(BaseModel):
    doc_id: str
    index: int
    text: str


class FactsRequest(BaseModel):
    sentences: list[SentenceIn]


def create_app(config: SidecarConfig | None = None) -> FastAPI:
    config = config or SidecarConfig()
    state: dict = {"encoder": None, "srl": None}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state["encoder"] = make_encoder(config.embedding_model)
        state["srl"] = RuleSrl(config.srl_model)
        yield
        state["encoder"] = None
        state["srl"] = None

    app = FastAPI(title="mira-sidecar", lifespan=lifespan)

    def _check_batch(items, texts):
        if state["encoder"] is None or state["srl"] is None:
            raise HTTPException(status_code=503, detail="models not ready")
        if not items or len(items) > config.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch size must be 1..{config.max_batch}, got {len(items)}",
            )
        for i, text in enumerate(texts):
            if not text.strip():
                raise HTTPException(status_code=422, detail=f"empty text at position {i}")
            if len(text) > config.max_text_length:
                raise HTTPException(
                    status_code=422,
                    detail=f"text at position {i} exceeds {config.max_text_length} chars",
                )

    @app.post("/embed")
    def embed(req: EmbedRequest):
        _check_batch(req.texts, req.texts)
        vectors = state["encoder"].encode(req.texts)
        return {"dim": state["encoder"].dim, "vectors": vectors.tolist()}

    @app.post("/facts")
    def facts(req: FactsRequest):
        _check_batch(req.sentences, [s.text for s in req.sentences])
        out = []
        for sent in req.sentences:
            out.extend(
                frame.to_dict()
                for frame in state["srl"].frames(sent.doc_id, sent.index, sent.text)
            )
        return {"facts": out}

    @app.get("/health")
    def health():
        if state["encoder"] is None:
            raise HTTPException(status_code=503, detail="loading")
        return {"status": "ok", "dim": state["encoder"].dim}

    return app
