"""Emoticon-based emotion labelling of raw text.

Texts are split into sentences, emoticons are counted per emotion class with
a dictionary, and each labelled sentence is paired with an embedding from a
pluggable provider.
"""
import hashlib
import json
from dataclasses import dataclass
from importlib.resources import files
from typing import Optional, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DictionaryError, DuplicateEmoticonError, ProviderError

EMOTIONS = ("fear", "sadness", "anger", "disgust", "calm", "happiness", "surprise")
N_EMOTIONS = len(EMOTIONS)
TERMINATORS = frozenset(".!?\n")


class EmoticonDictionary:
    """Immutable mapping emoticon -> emotion index.

    ``classes`` holds one frozenset of emoticons per emotion in ``EMOTIONS``
    order. Construction rejects an emoticon that appears under two classes.
    """

    def __init__(self, classes):
        if isinstance(classes, dict):
            missing = [e for e in EMOTIONS if e not in classes]
            if missing:
                raise DictionaryError(f"missing emotion classes: {', '.join(missing)}")
            unknown = sorted(set(classes) - set(EMOTIONS))
            if unknown:
                raise DictionaryError(f"unknown emotion classes: {', '.join(unknown)}")
            classes = [classes[e] for e in EMOTIONS]
        if len(classes) != N_EMOTIONS:
            raise DictionaryError(f"expected {N_EMOTIONS} classes, got {len(classes)}")

        index = {}
        for j, items in enumerate(classes):
            if isinstance(items, str):
                raise DictionaryError(f"class {EMOTIONS[j]!r} must be a list of strings")
            for emo in items:
                if not isinstance(emo, str) or not emo:
                    raise DictionaryError(
                        f"class {EMOTIONS[j]!r} has a non-string or empty entry: {emo!r}"
                    )
                if emo in index and index[emo] != j:
                    raise DuplicateEmoticonError(emo, EMOTIONS[index[emo]], EMOTIONS[j])
                index[emo] = j
        self.classes = tuple(frozenset(items) for items in classes)
        self._index = index
        # longest first so that a prefix never shadows a longer emoticon
        self._by_first = {}
        for emo in sorted(index, key=lambda e: (-len(e), e)):
            self._by_first.setdefault(emo[0], []).append(emo)

    def __len__(self):
        return len(self._index)

    def __contains__(self, emoticon):
        return emoticon in self._index

    def class_of(self, emoticon):
        return self._index[emoticon]

    def match_at(self, text, pos):
        """Longest emoticon starting at ``text[pos]``, or None."""
        for emo in self._by_first.get(text[pos], ()):
            if text.startswith(emo, pos):
                return emo
        return None

    def to_dict(self):
        return {e: sorted(items) for e, items in zip(EMOTIONS, self.classes)}


def load_dictionary(path):
    """Read a UTF-8 JSON dictionary with exactly the seven emotion keys."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DictionaryError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DictionaryError(f"{path}: top level must be a JSON object")
    return EmoticonDictionary(raw)


def default_dictionary():
    """The small illustrative dictionary bundled with the package."""
    raw = json.loads(files("emogan.data").joinpath("emoticons.json").read_text("utf-8"))
    return EmoticonDictionary(raw)


def split_sentences(text, dictionary: Optional[EmoticonDictionary] = None):
    """Split on ``. ! ?`` and newlines, never inside a dictionary emoticon."""
    out, buf = [], []
    pos, n = 0, len(text)
    while pos < n:
        emo = dictionary.match_at(text, pos) if dictionary is not None else None
        if emo is not None:
            buf.append(emo)
            pos += len(emo)
            continue
        ch = text[pos]
        if ch in TERMINATORS:
            seg = "".join(buf).strip()
            if seg:
                out.append(seg)
            buf = []
        else:
            buf.append(ch)
        pos += 1
    seg = "".join(buf).strip()
    if seg:
        out.append(seg)
    return out


def emotion_counts(sentence, dictionary: EmoticonDictionary):
    """Non-overlapping, longest-match-first emoticon counts per emotion."""
    counts = [0] * N_EMOTIONS
    pos, n = 0, len(sentence)
    while pos < n:
        emo = dictionary.match_at(sentence, pos)
        if emo is None:
            pos += 1
        else:
            counts[dictionary.class_of(emo)] += 1
            pos += len(emo)
    return counts


def binarize(counts):
    return [1 if c > 0 else 0 for c in counts]


@dataclass
class LabeledExample:
    embedding: np.ndarray
    emotions: np.ndarray
    text: Optional[str] = None
    collision: bool = False

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        self.emotions = np.asarray(self.emotions, dtype=np.float64)
        if self.emotions.shape != (N_EMOTIONS,):
            raise ValueError(f"emotion vector must have length {N_EMOTIONS}")
        if not np.all((self.emotions == 0) | (self.emotions == 1)):
            raise ValueError("emotion labels must be binary")
        if self.embedding.ndim != 1 or not np.all(np.isfinite(self.embedding)):
            raise ValueError("embedding must be a finite 1-d vector")


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, sentence: str) -> np.ndarray: ...


class StubEmbedder:
    """Deterministic stand-in for a sentence encoder.

    Each sentence is hashed together with the seed into a pseudo-random unit
    vector, so equal text always maps to the same embedding.
    """

    def __init__(self, dim=512, seed=0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.seed = int(seed)

    def embed(self, sentence):
        digest = hashlib.sha256(f"{self.seed}\x00{sentence}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)


def stub_embedder(dim=512, seed=0):
    return StubEmbedder(dim, seed)


class PrecomputedEmbeddings:
    """Provider backed by a ``{"text", "embedding"}`` JSON-lines lookup table."""

    def __init__(self, table, dim=None):
        self._table = {}
        for text, vec in table.items():
            vec = np.asarray(vec, dtype=np.float64)
            if dim is None:
                dim = vec.size
            if vec.shape != (dim,) or not np.all(np.isfinite(vec)):
                raise ProviderError(f"bad embedding for {text!r}: expected {dim} finite values")
            self._table[text] = vec
        if dim is None:
            raise ProviderError("empty embedding table and no dim given")
        self.dim = dim

    def embed(self, sentence):
        try:
            return self._table[sentence]
        except KeyError:
            raise ProviderError(f"no precomputed embedding for {sentence!r}") from None


def vectorize_corpus(
    corpus: Sequence[str],
    dictionary: EmoticonDictionary,
    provider: EmbeddingProvider,
    keep_zero_label=False,
    dim=None,
):
    """Label every sentence of every text and pair it with its embedding.

    Returns ``(examples, stats)`` where stats counts sentences, labelled and
    dropped ones.
    """
    if dim is not None and provider.dim != dim:
        raise ProviderError(f"provider dim {provider.dim} != configured {dim}")
    examples = []
    stats = {"sentences": 0, "labelled": 0, "dropped": 0}
    for text in corpus:
        for sentence in split_sentences(text, dictionary):
            stats["sentences"] += 1
            label = binarize(emotion_counts(sentence, dictionary))
            if not any(label) and not keep_zero_label:
                stats["dropped"] += 1
                continue
            try:
                vec = np.asarray(provider.embed(sentence), dtype=np.float64)
            except ProviderError as exc:
                raise ProviderError(f"while embedding {sentence!r}: {exc}") from exc
            if vec.shape != (provider.dim,) or not np.all(np.isfinite(vec)):
                raise ProviderError(
                    f"provider returned an invalid vector for {sentence!r}"
                )
            examples.append(LabeledExample(vec, label, text=sentence))
            stats["labelled"] += 1
    return examples, stats


class EmoticonVectorizer(TransformerMixin, BaseEstimator):
    """Transform sentences into (n, 7) emoticon count or multi-hot matrices."""

    def __init__(self, dictionary=None, binary=True):
        self.dictionary = dictionary
        self.binary = binary

    def fit(self, X, y=None):
        self.dictionary_ = self.dictionary if self.dictionary is not None else default_dictionary()
        self.n_features_out_ = N_EMOTIONS
        return self

    def transform(self, X):
        check_is_fitted(self, "dictionary_")
        rows = [emotion_counts(s, self.dictionary_) for s in X]
        out = np.asarray(rows, dtype=np.float64).reshape(-1, N_EMOTIONS)
        return (out > 0).astype(np.float64) if self.binary else out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(EMOTIONS, dtype=object)
