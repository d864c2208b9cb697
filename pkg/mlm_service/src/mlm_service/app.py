"""Serve a pretrained masked language model over HTTP.

POST /v1/fill-mask takes {"text", "mask_token", "top_n"}, translates the
request's mask token to the model's native mask symbol, and returns the
top_n fills for the masked position as {"candidates": [{"token",
"score"}, ...]} sorted by score descending. Scores are the raw model
probabilities at the mask position; special tokens are never returned.
Text without exactly one mask token gets a 400 {"error": ...}. GET
/v1/health reports the served model. Stateless beyond the loaded model;
configured via MODEL_NAME, HOST, and PORT.
"""

from __future__ import annotations

import os

import torch
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from transformers import AutoModelForMaskedLM, AutoTokenizer

DEFAULT_MODEL = "bert-base-uncased"


class FillMaskRequest(BaseModel):
    text: str
    mask_token: str = Field(default="[MASK]", min_length=1)
    top_n: int = Field(default=10, ge=1)


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": message})


def create_app(model_name: str) -> FastAPI:
    tokenizer = AutoTokenizer.from_pretrained(model_name)
    model = AutoModelForMaskedLM.from_pretrained(model_name)
    model.eval()
    special_ids = list(tokenizer.all_special_ids)
    app = FastAPI(title="mlm-service")

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "model": model_name}

    @app.post("/v1/fill-mask")
    def fill_mask(req: FillMaskRequest):
        if req.text.count(req.mask_token) != 1:
            return _bad_request(
                f"text must contain exactly one {req.mask_token!r}, "
                f"found {req.text.count(req.mask_token)}"
            )
        text = req.text.replace(req.mask_token, tokenizer.mask_token)
        encoded = tokenizer(text, return_tensors="pt", truncation=True)
        positions = (
            (encoded["input_ids"][0] == tokenizer.mask_token_id)
            .nonzero(as_tuple=True)[0]
        )
        if len(positions) != 1:
            return _bad_request(
                "text must hold exactly one mask position after tokenization, "
                f"found {len(positions)}"
            )
        with torch.no_grad():
            logits = model(**encoded).logits[0, positions[0]]
        probs = torch.softmax(logits, dim=-1)
        probs[special_ids] = 0.0
        count = min(req.top_n, int((probs > 0).sum()))
        top = torch.topk(probs, count)
        return {
            "candidates": [
                {"token": tokenizer.convert_ids_to_tokens(int(i)), "score": float(p)}
                for p, i in zip(top.values, top.indices)
            ]
        }

    return app


def main() -> int:
    import uvicorn

    model_name = os.environ.get("MODEL_NAME", DEFAULT_MODEL)
    host = os.environ.get("HOST", "127.0.0.1")
    port = int(os.environ.get("PORT", "8000"))
    uvicorn.run(create_app(model_name), host=host, port=port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
