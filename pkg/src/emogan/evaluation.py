"""Top-2 evaluation of emotion forecasts against gold multi-hot labels."""
import json
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .emotext import EMOTIONS, N_EMOTIONS
from .exceptions import ProtocolError


class Top2(NamedTuple):
    first: int
    second: int
    values: tuple


def top2(forecast):
    """The two largest components; ties go to the lower index."""
    f = np.asarray(forecast, dtype=np.float64)
    if f.shape != (N_EMOTIONS,) or not np.all(np.isfinite(f)):
        raise ValueError(f"forecast must be {N_EMOTIONS} finite values")
    # stable sort on -f keeps lower indices first among equal values
    order = np.argsort(-f, kind="stable")
    a, b = int(order[0]), int(order[1])
    return Top2(a, b, (float(f[a]), float(f[b])))


def gold_classes(gold):
    g = np.asarray(gold)
    if g.shape != (N_EMOTIONS,) or not np.all((g == 0) | (g == 1)):
        raise ProtocolError(f"gold label must be {N_EMOTIONS} binary values")
    return set(np.flatnonzero(g).tolist())


def example_correct(pred: Top2, gold):
    """True when either predicted class is among the gold classes."""
    active = gold_classes(gold)
    if not 1 <= len(active) <= 2:
        raise ProtocolError(f"gold label must have 1 or 2 active classes, got {len(active)}")
    return pred.first in active or pred.second in active


@dataclass
class Record:
    gold: List[int]
    forecast: List[float]
    top2: List[int]
    correct: bool
    text: Optional[str] = None


def score_records(forecasts, golds, texts=None):
    records = []
    for i, (f, g) in enumerate(zip(forecasts, golds)):
        t = top2(f)
        records.append(Record(
            gold=[int(v) for v in g],
            forecast=[float(v) for v in f],
            top2=[t.first, t.second],
            correct=example_correct(t, g),
            text=None if texts is None else texts[i],
        ))
    return records


def per_class_accuracy(records):
    """Per emotion: among records whose gold contains it, the share whose
    top-2 also contains it. Classes without support are ``None`` and are
    left out of the mean."""
    if not records:
        raise ValueError("no records to score")
    acc = []
    for c in range(N_EMOTIONS):
        support = [r for r in records if r.gold[c] == 1]
        acc.append(sum(c in r.top2 for r in support) / len(support) if support else None)
    present = [a for a in acc if a is not None]
    return acc, (sum(present) / len(present) if present else None)


def prediction_matrix(records):
    m = np.zeros((N_EMOTIONS, N_EMOTIONS), dtype=np.int64)
    for r in records:
        for g in np.flatnonzero(r.gold):
            for p in r.top2:
                m[g, p] += 1
    return m


@dataclass
class EvalReport:
    per_class_accuracy: List[Optional[float]]
    mean_accuracy: Optional[float]
    overall_top2_hit_rate: float
    prediction_matrix: List[List[int]]
    support: List[int]
    n_examples: int
    n_excluded: int = 0
    records: List[Record] = field(default_factory=list)

    def to_dict(self, with_records=False):
        d = asdict(self)
        if not with_records:
            d.pop("records")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["records"] = [Record(**r) for r in d.get("records", [])]
        return cls(**d)

    def to_json(self, with_records=False):
        return json.dumps(self.to_dict(with_records), ensure_ascii=False, indent=2)

    def table(self):
        """Aligned text table: one row per emotion plus MEAN."""
        width = max(len(e) for e in EMOTIONS + ("MEAN",))
        lines = [f"{'Emotion':<{width}}  Accuracy", f"{'-' * width}  --------"]
        for name, acc in zip(EMOTIONS, self.per_class_accuracy):
            lines.append(f"{name:<{width}}  {_fmt(acc):>8}")
        lines.append(f"{'MEAN':>{width}}  {_fmt(self.mean_accuracy):>8}")
        return "\n".join(lines)

    def matrix_table(self):
        """Gold-class rows against predicted-class columns."""
        width = max(len(e) for e in EMOTIONS)
        cells = [max(len(str(v)) for row in self.prediction_matrix for v in row), 4]
        cw = max(cells + [len(e[:4]) for e in EMOTIONS])
        head = f"{'gold/pred':<{width}}  " + " ".join(f"{e[:4]:>{cw}}" for e in EMOTIONS)
        rows = [f"{name:<{width}}  " + " ".join(f"{v:>{cw}}" for v in row)
                for name, row in zip(EMOTIONS, self.prediction_matrix)]
        return "\n".join([head] + rows)


def _fmt(v):
    return "n/a" if v is None else f"{v:.2f}"


def evaluate(forecasts, golds, texts=None, skip_invalid=True):
    """Score forecasts with the top-2 protocol.

    Gold rows with no active class or more than two cannot be scored; they
    are skipped and counted in ``n_excluded`` (or raise when
    ``skip_invalid`` is false).
    """
    forecasts = np.asarray(forecasts, dtype=np.float64)
    golds = np.asarray(golds)
    keep = []
    for i, g in enumerate(golds):
        n_active = len(gold_classes(g))
        if 1 <= n_active <= 2:
            keep.append(i)
        elif not skip_invalid:
            raise ProtocolError(f"row {i}: gold label has {n_active} active classes")
    kept_texts = None if texts is None else [texts[i] for i in keep]
    records = score_records(forecasts[keep], golds[keep], kept_texts)
    acc, mean = per_class_accuracy(records)
    return EvalReport(
        per_class_accuracy=acc,
        mean_accuracy=mean,
        overall_top2_hit_rate=sum(r.correct for r in records) / len(records),
        prediction_matrix=prediction_matrix(records).tolist(),
        support=[int(v) for v in golds[keep].sum(axis=0)],
        n_examples=len(records),
        n_excluded=len(golds) - len(keep),
        records=records,
    )


def forecast_row(forecast, text=None, gold=None):
    """One prediction line: forecast values plus top-2 flags per emotion."""
    t = top2(forecast)
    row = {}
    if text is not None:
        row["text"] = text
    if gold is not None:
        row["gold"] = [EMOTIONS[j] for j in np.flatnonzero(gold)]
    row["forecast"] = {e: float(v) for e, v in zip(EMOTIONS, forecast)}
    row["top2"] = [EMOTIONS[t.first], EMOTIONS[t.second]]
    row["top2_flags"] = [int(j in (t.first, t.second)) for j in range(N_EMOTIONS)]
    return row


def prediction_table(rows):
    """Text table of prediction rows; top-2 values are wrapped in ``*``."""
    abbrev = [e[:5] for e in EMOTIONS]
    head = f"{'#':>3}  {'text':<40}  {'gold':<20}  " + " ".join(f"{a:>7}" for a in abbrev)
    lines = [head]
    for i, row in enumerate(rows, start=1):
        text = (row.get("text") or "")[:40]
        gold = ",".join(row.get("gold", []))[:20]
        vals = []
        for e, flag in zip(EMOTIONS, row["top2_flags"]):
            s = f"{row['forecast'][e]:.2f}"
            vals.append(f"{('*' + s + '*') if flag else s:>7}")
        lines.append(f"{i:>3}  {text:<40}  {gold:<20}  " + " ".join(vals))
    return "\n".join(lines)
