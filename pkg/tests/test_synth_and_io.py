import numpy as np
import pytest

from emogan.emotext import LabeledExample
from emogan.exceptions import DatasetFormatError
from emogan.io import (
    load_embedding_table,
    read_corpus,
    read_dataset,
    reference_combinations,
    write_dataset,
)
from emogan.synth import SyntheticSpec, make_anchors, synthesize


def test_reference_combinations_fixture():
    rows = reference_combinations()
    assert rows.shape == (38, 7)
    assert len({tuple(r) for r in rows}) == 38
    assert rows[0].tolist() == [0, 0, 0, 0, 0, 0, 1]
    assert rows[-1].tolist() == [1, 1, 1, 0, 0, 0, 0]
    assert rows.sum(axis=1).min() == 1


def test_anchors_orthonormal():
    A = make_anchors(64, seed=5)
    np.testing.assert_allclose(A @ A.T, np.eye(7), atol=1e-9)


def test_noiseless_single_class_is_anchor():
    spec = SyntheticSpec(D=32, noise_sigma=0.0, examples_per_combo=2, combos=[[0] * 6 + [1]], seed=9)
    examples, anchors = synthesize(spec)
    for ex in examples:
        # dividing a unit anchor by its float norm may move the last bit
        np.testing.assert_allclose(ex.embedding, anchors[6], rtol=0, atol=1e-15)


def test_synth_sizes_and_determinism():
    combos = reference_combinations().tolist()
    spec = SyntheticSpec(D=64, noise_sigma=0.05, examples_per_combo=3, combos=combos, seed=1)
    a, _ = synthesize(spec)
    b, _ = synthesize(spec)
    assert len(a) == len(combos) * 3
    assert all(np.array_equal(x.embedding, y.embedding) for x, y in zip(a, b))


@pytest.mark.parametrize("kw", [
    {"D": 6}, {"noise_sigma": -1.0}, {"combos": [[1, 0]]}, {"combos": [[1] + [0] * 6] * 2},
])
def test_synth_spec_validation(kw):
    with pytest.raises(ValueError):
        SyntheticSpec(**kw)


def test_dataset_round_trip_bytes(tmp_path):
    rng = np.random.default_rng(0)
    examples = [LabeledExample(rng.normal(size=5), [1, 0, 0, 0, 0, 1, 0], text="héllo 😀", collision=True),
                LabeledExample(rng.normal(size=5), [0, 0, 1, 0, 0, 0, 0])]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_dataset(p1, examples)
    back = read_dataset(p1)
    write_dataset(p2, back)
    assert p1.read_bytes() == p2.read_bytes()
    assert back[0].text == "héllo 😀" and back[0].collision and not back[1].collision
    assert np.array_equal(back[0].embedding, examples[0].embedding)


@pytest.mark.parametrize("line, msg", [
    ("{bad json", "invalid JSON"),
    ('{"embedding": [1.0], "emotions": [1, 0]}', "emotions"),
    ('{"embedding": [1.0, 2.0], "emotions": [1, 0, 0, 0, 0, 0, 2]}', "emotions"),
    ('[1, 2]', "JSON object"),
])
def test_read_dataset_errors_name_the_line(tmp_path, line, msg):
    p = tmp_path / "d.jsonl"
    good = '{"embedding": [1.0, 2.0], "emotions": [1, 0, 0, 0, 0, 0, 0]}'
    p.write_text(good + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError) as info:
        read_dataset(p)
    assert info.value.lineno == 2 and msg in str(info.value)


def test_dimension_mismatch_between_lines(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"embedding": [1.0, 2.0], "emotions": [1, 0, 0, 0, 0, 0, 0]}\n'
                 '{"embedding": [1.0], "emotions": [1, 0, 0, 0, 0, 0, 0]}\n', encoding="utf-8")
    with pytest.raises(DatasetFormatError, match=":2:"):
        read_dataset(p)


def test_corpus_and_embedding_table(tmp_path):
    c = tmp_path / "c.jsonl"
    c.write_text('{"text": "a :)"}\n\n{"text": "b"}\n', encoding="utf-8")
    assert read_corpus(c) == ["a :)", "b"]
    c.write_text('{"txt": "a"}\n', encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        read_corpus(c)
    t = tmp_path / "t.jsonl"
    t.write_text('{"text": "a :)", "embedding": [1.0, 0.0]}\n', encoding="utf-8")
    prov = load_embedding_table(t)
    assert prov.dim == 2 and prov.embed("a :)").tolist() == [1.0, 0.0]
