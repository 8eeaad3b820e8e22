import numpy as np
import pytest
from sklearn.base import clone

from emogan.io import as_arrays, reference_combinations
from emogan.pipeline import EmotionGANClassifier, run_training
from emogan.synth import SyntheticSpec, synthesize


@pytest.fixture(scope="module")
def small_data():
    spec = SyntheticSpec(D=64, noise_sigma=0.05, examples_per_combo=6,
                         combos=reference_combinations().tolist(), seed=4)
    return synthesize(spec)[0]


def test_classifier_fit_predict(small_data):
    X, Y = as_arrays(small_data)
    clf = EmotionGANClassifier(random_state=2).fit(X, Y)
    assert len(clf.dataset2_) == 128
    proba = clf.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
    pred = clf.predict(X)
    assert pred.shape == Y.shape and np.all(pred.sum(axis=1) == 2)
    assert clf.score(X, Y) > 0.9
    assert set(clf.curves_) == {"generator", "discriminator_train", "discriminator_test", "finetune"}


def test_classifier_is_sklearn_compatible(small_data):
    clf = EmotionGANClassifier(generator_epochs=3, discriminator_epochs=4, random_state=1)
    params = clf.get_params()
    assert params["generator_epochs"] == 3
    twin = clone(clf)
    X, Y = as_arrays(small_data)
    a = clf.fit(X, Y).predict_proba(X)
    b = twin.fit(X, Y).predict_proba(X)
    assert np.array_equal(a, b)


def test_finetune_rounds_change_the_model(small_data):
    X, Y = as_arrays(small_data)
    base = EmotionGANClassifier(random_state=0).fit(X, Y)
    tuned = EmotionGANClassifier(random_state=0, finetune_rounds=2).fit(X, Y)
    assert len(tuned.curves_["finetune"]) == 2
    assert not np.array_equal(base.discriminator_.prototypes_, tuned.discriminator_.prototypes_)


def test_run_training_split_and_report(small_data):
    result = run_training(small_data, seed=0)
    n = len(small_data)
    assert len(result.train_examples) == int(0.7 * n)
    assert len(result.train_examples) + len(result.test_examples) == n
    rep = result.report
    assert rep.n_examples + rep.n_excluded == len(result.test_examples)
    assert rep.overall_top2_hit_rate >= 0.9
    assert np.isfinite(result.curves["generator"]).all()


def test_run_training_rejects_empty():
    with pytest.raises(ValueError):
        run_training([], seed=0)
