"""Pipeline configuration.

One frozen dataclass carries every knob of an end-to-end run; a JSON file
with keys mirroring the field names is the reproducible record of an
experiment. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields

from .corpus import DEFAULT_PLACEHOLDER
from .gae import DEFAULT_MASK
from .pog import PredictorSpec

SELECTORS = ("tagger", "pos", "lexicon")
PREDICTORS = ("builtin", "remote")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything an end-to-end run needs.

    Paths are interpreted relative to the working directory. The tagger
    selector trains from downstream_path unless model_path names an
    existing saved model; a trained model is saved to model_path when set.
    """

    corpus_path: str = ""
    downstream_path: str | None = None
    output_path: str = "dataset.jsonl"
    stats_path: str | None = None
    model_path: str | None = None
    selector: str = "tagger"
    predictor: str = "builtin"
    endpoint: str | None = None
    k: int = 5
    top_n: int = 10
    similarity_threshold: float = 0.8
    continuation_marker: str = "##"
    lexicon_path: str | None = None
    lexicon_threshold: float = 0.0
    pos_lexicon_path: str | None = None
    placeholder: str = DEFAULT_PLACEHOLDER
    mask_token: str = DEFAULT_MASK
    epochs: int = 10
    seed: int = 0
    jobs: int = 1
    strict: bool = False

    def __post_init__(self) -> None:
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}, got {self.selector!r}")
        if self.predictor not in PREDICTORS:
            raise ValueError(f"predictor must be one of {PREDICTORS}, got {self.predictor!r}")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if not (0.0 <= self.similarity_threshold <= 1.0):
            raise ValueError("similarity_threshold must be in [0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not self.placeholder:
            raise ValueError("placeholder must be non-empty")
        if not self.mask_token:
            raise ValueError("mask_token must be non-empty")
        if self.predictor == "remote" and not self.endpoint:
            raise ValueError("remote predictor needs an endpoint")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def replace(self, **changes: object) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def predictor_spec(self) -> PredictorSpec:
        return PredictorSpec(
            kind=self.predictor,
            endpoint=self.endpoint,
            top_n=self.top_n,
            mask_token=self.mask_token,
        )
