"""JSON-lines readers and writers for corpora, datasets and tables."""
import json
from importlib.resources import files

import numpy as np

from .emotext import N_EMOTIONS, LabeledExample, PrecomputedEmbeddings
from .exceptions import DatasetFormatError


def read_jsonl(path):
    """Yield ``(lineno, obj)`` for every non-blank line of a JSON-lines file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DatasetFormatError(path, lineno, "expected a JSON object")
            yield lineno, obj


def dumps(obj):
    """Canonical JSON encoding used for every file we write."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(dumps(row))
            fh.write("\n")


def read_corpus(path):
    texts = []
    for lineno, obj in read_jsonl(path):
        text = obj.get("text")
        if not isinstance(text, str):
            raise DatasetFormatError(path, lineno, "expected a string field 'text'")
        texts.append(text)
    return texts


def example_to_dict(ex):
    row = {
        "embedding": [float(x) for x in ex.embedding],
        "emotions": [int(x) for x in ex.emotions],
    }
    if ex.text is not None:
        row["text"] = ex.text
    row["collision"] = bool(ex.collision)
    return row


def read_dataset(path, dim=None):
    examples = []
    for lineno, obj in read_jsonl(path):
        emb, emo = obj.get("embedding"), obj.get("emotions")
        if not isinstance(emb, list) or not isinstance(emo, list):
            raise DatasetFormatError(path, lineno, "expected list fields 'embedding' and 'emotions'")
        if len(emo) != N_EMOTIONS or any(v not in (0, 1) for v in emo):
            raise DatasetFormatError(path, lineno, f"'emotions' must be {N_EMOTIONS} values in {{0,1}}")
        if dim is None:
            dim = len(emb)
        if len(emb) != dim:
            raise DatasetFormatError(path, lineno, f"embedding has length {len(emb)}, expected {dim}")
        try:
            ex = LabeledExample(emb, emo, text=obj.get("text"), collision=bool(obj.get("collision", False)))
        except (TypeError, ValueError) as exc:
            raise DatasetFormatError(path, lineno, str(exc)) from None
        examples.append(ex)
    return examples


def write_dataset(path, examples):
    write_jsonl(path, (example_to_dict(ex) for ex in examples))


def as_arrays(examples):
    """Stack examples into ``(embeddings (n, D), emotions (n, 7))``."""
    if not examples:
        return np.empty((0, 0)), np.empty((0, N_EMOTIONS))
    X = np.stack([ex.embedding for ex in examples])
    Y = np.stack([ex.emotions for ex in examples])
    return X, Y


def load_embedding_table(path, dim=None):
    table = {}
    for lineno, obj in read_jsonl(path):
        if not isinstance(obj.get("text"), str) or not isinstance(obj.get("embedding"), list):
            raise DatasetFormatError(path, lineno, "expected keys 'text' and 'embedding'")
        table[obj["text"]] = obj["embedding"]
    return PrecomputedEmbeddings(table, dim)


def reference_combinations():
    """The 38 emotion combinations observed in the original collision-free data."""
    raw = json.loads(files("emogan.data").joinpath("reference_combos.json").read_text("utf-8"))
    return np.asarray(raw["rows"], dtype=np.int64)
