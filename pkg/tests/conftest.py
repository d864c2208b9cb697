import json
from pathlib import Path

import pytest

from clozegen.corpus import PretrainingPair


def write_jsonl(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def tmp_jsonl(tmp_path):
    def _write(name, records):
        return write_jsonl(tmp_path / name, records)

    return _write


@pytest.fixture
def small_pairs():
    return (
        PretrainingPair("p1", "The harbour was busy all week.", "A cow swam across the harbour."),
        PretrainingPair("p2", "Rain fell on the village for days.", "The village flooded overnight."),
        PretrainingPair("p3", "The committee met twice.", "Members reached a quiet agreement."),
    )
