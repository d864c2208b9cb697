"""Synthetic multiple-choice cloze dataset construction for MRC pre-training.

The pipeline turns an unlabelled (document, summary) corpus into cloze-style
multiple-choice samples shaped like a labelled downstream task: a trained
sequence tagger (or a baseline selector) picks an answer span in each summary,
the span is masked out to form a cloze question, a fill-mask predictor
proposes distractors, and the assembled samples are written as JSONL.
"""

from clozegen.corpus import (
    CorpusStats,
    McqSample,
    PretrainingPair,
    RecordError,
    Token,
    tokenize,
)
from clozegen.tagger import Span, TagSequence, TaggerModel, extract_spans, featurize, predict, train
from clozegen.gae import ClozeCandidate, extract_gold, filter_single_answer, make_cloze, repurpose_downstream
from clozegen.config import PipelineConfig
from clozegen.assembly import PipelineResult, assemble_sample, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ClozeCandidate",
    "CorpusStats",
    "McqSample",
    "PipelineConfig",
    "PipelineResult",
    "PretrainingPair",
    "RecordError",
    "Span",
    "TagSequence",
    "TaggerModel",
    "Token",
    "assemble_sample",
    "extract_gold",
    "extract_spans",
    "featurize",
    "filter_single_answer",
    "make_cloze",
    "predict",
    "repurpose_downstream",
    "run_pipeline",
    "tokenize",
    "train",
]
