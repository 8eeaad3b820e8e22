import numpy as np
import pytest
from sklearn.base import clone

from emogan.emotext import LabeledExample
from emogan.exceptions import DimensionError
from emogan.gan import (
    Dataset2,
    EmotionGenerator,
    GANModel,
    PrototypeDiscriminator,
    TrainConfig,
    discriminator_forward,
    enumerate_combinations,
    fm_init,
    generate_dataset2,
    generator_accuracy,
    joint_finetune,
    load_model,
    save_model,
    split_indices,
    train_discriminator,
    train_generator,
)
from emogan.io import reference_combinations
from emogan.mathkit import batch_cosine_loss, cosine_matrix
from oracles import binary_expansion, central_diff, double_loop_fm, rel_error


def test_enumerate_small_cases():
    assert enumerate_combinations(1).tolist() == [[0], [1]]
    assert enumerate_combinations(3)[5].tolist() == binary_expansion(5, 3) == [1, 0, 1]
    for n in (0, 17):
        with pytest.raises(ValueError):
            enumerate_combinations(n)


def test_enumerate_seven():
    combos = enumerate_combinations(7)
    assert combos.shape == (128, 7)
    assert len({tuple(r) for r in combos}) == 128
    assert combos[0].tolist() == [0] * 7 and combos[-1].tolist() == [1] * 7
    for i, row in enumerate(combos):
        assert row.tolist() == binary_expansion(i, 7)
    table = {tuple(r) for r in reference_combinations()}
    assert table < {tuple(r) for r in combos}


def test_fm_init_examples():
    F = fm_init([[1, 0], [0, 1]], [[2, 0, 1], [0, 1, 1]])
    np.testing.assert_array_equal(F, [[2, 0, 1], [0, 1, 1]])
    e, b = np.array([1.0, 0.0, 1.0]), np.array([0.5, -2.0])
    np.testing.assert_array_equal(fm_init([e], [b]), np.outer(e, b))
    assert not fm_init(np.zeros((4, 7)), np.ones((4, 3))).any()
    with pytest.raises(ValueError):
        fm_init(np.zeros((0, 7)), np.zeros((0, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_fm_init_equals_double_loop_bitwise(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 30)), int(rng.integers(1, 20))
    E = rng.integers(0, 2, size=(n, 7))
    B = rng.normal(size=(n, d))
    assert np.array_equal(fm_init(E, B), double_loop_fm(E, B))


def separable_pairs(n=50, dim=32, seed=0):
    rng = np.random.default_rng(seed)
    anchors = np.linalg.qr(rng.normal(size=(dim, 7)))[0].T
    Y = rng.integers(0, 2, size=(n, 7))
    Y[Y.sum(axis=1) == 0, 0] = 1
    X = Y @ anchors + rng.normal(scale=0.01, size=(n, dim))
    return Y.astype(float), X, anchors


def test_generator_zero_epochs_keeps_init():
    Y, X, _ = separable_pairs()
    a = EmotionGenerator(epochs=0, random_state=3).fit(Y, X)
    b = EmotionGenerator(epochs=0, random_state=3)
    b._init_params(X.shape[1])
    for name in ("W1_", "b1_", "W2_", "b2_"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.loss_curve_ == []
    lim = 1 / np.sqrt(7)
    assert np.all(np.abs(a.W1_) <= lim) and np.all(np.abs(a.W2_) <= 1 / np.sqrt(128))


def test_generator_loss_improves_and_is_deterministic():
    Y, X, _ = separable_pairs()
    g1 = EmotionGenerator(epochs=10, random_state=1).fit(Y, X)
    g2 = EmotionGenerator(epochs=10, random_state=1).fit(Y, X)
    assert len(g1.loss_curve_) == 10
    assert g1.loss_curve_[-1] < g1.loss_curve_[0]
    assert all(np.isfinite(g1.loss_curve_))
    for name in ("W1_", "b1_", "W2_", "b2_"):
        assert np.array_equal(getattr(g1, name), getattr(g2, name))
    assert g1.loss_curve_ == g2.loss_curve_


def test_generator_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    Y, X = rng.integers(0, 2, size=(4, 7)).astype(float), rng.normal(size=(4, 5))
    g = EmotionGenerator(n_hidden=6, epochs=0).fit(Y, X)
    from emogan.mathkit import linear_backward, linear_forward, mse_loss

    def loss(W1):
        return mse_loss(linear_forward(g.W2_, g.b2_, linear_forward(W1, g.b1_, Y)), X)[0]

    h = linear_forward(g.W1_, g.b1_, Y)
    _, grad = mse_loss(linear_forward(g.W2_, g.b2_, h), X)
    _, _, dh = linear_backward(g.W2_, g.b2_, h, grad)
    dW1, _, _ = linear_backward(g.W1_, g.b1_, Y, dh)
    assert rel_error(dW1, central_diff(loss, g.W1_)) < 1e-5


def test_generator_accuracy():
    x = np.random.default_rng(0).normal(size=(1, 16))
    y = np.array([[0, 0, 0, 0, 0, 1, 0]], float)
    gen = EmotionGenerator(epochs=300, lr=1e-2, batch_size=1).fit(y, x)
    assert generator_accuracy(gen, y, x)[0] == 1.0

    rng = np.random.default_rng(1)
    Y = rng.integers(0, 2, size=(200, 7)).astype(float)
    T = rng.normal(size=(200, 512))
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    untrained = EmotionGenerator(epochs=0).fit(Y, T)
    acc, mean_cos = generator_accuracy(untrained, Y, T)
    assert acc == 0.0 and abs(mean_cos) < 0.1
    assert generator_accuracy(untrained, Y, T, threshold=-1)[0] == 1.0


def test_generate_dataset2():
    Y, X, _ = separable_pairs()
    gen = EmotionGenerator(epochs=2).fit(Y, X)
    d2 = generate_dataset2(gen)
    assert len(d2) == 128
    assert np.array_equal(d2.V1, enumerate_combinations(7))
    assert np.array_equal(d2.V2, generate_dataset2(gen).V2)
    assert np.all(np.isfinite(d2.V2))


def orthogonal_disc(dim=12):
    P = np.zeros((7, dim))
    P[np.arange(7), np.arange(7)] = 1.0
    return PrototypeDiscriminator().set_prototypes(P)


def test_discriminator_forward():
    disc = orthogonal_disc()
    raw, forecast = discriminator_forward(disc, disc.prototypes_[5])
    assert np.argmax(forecast) == 5
    x = np.random.default_rng(0).normal(size=12)
    r1, f1 = discriminator_forward(disc, x)
    r2, f2 = discriminator_forward(disc, 37.5 * x)
    np.testing.assert_allclose(r1, r2, atol=1e-12)
    np.testing.assert_allclose(f1, f2, atol=1e-12)
    assert np.all(f1 >= 0) and abs(f1.sum() - 1) < 1e-9
    raw0, f0 = discriminator_forward(disc, np.zeros(12))
    assert not raw0.any()
    np.testing.assert_allclose(f0, [1 / 7] * 7)
    with pytest.raises(DimensionError):
        discriminator_forward(disc, np.zeros(5))


@pytest.mark.parametrize("seed", range(25))
def test_prototype_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, 6))
    Y = rng.integers(0, 2, size=(5, 7)).astype(float)
    Y[Y.sum(axis=1) == 0, 2] = 1
    disc = PrototypeDiscriminator().set_prototypes(rng.normal(size=(7, 6)))
    _, grad = disc._loss_grad(X, Y)
    numeric = central_diff(lambda P: batch_cosine_loss(cosine_matrix(X, P), Y)[0], disc.prototypes_)
    assert rel_error(grad, numeric) < 1e-4


def test_split_sizes():
    tr, te = split_indices(128, 0.7, seed=0)
    assert (len(tr), len(te)) == (89, 39)
    assert set(tr).isdisjoint(te) and len(set(tr) | set(te)) == 128
    assert np.array_equal(tr, split_indices(128, 0.7, seed=0)[0])


def anchor_dataset2(dim=24, seed=0):
    anchors = np.linalg.qr(np.random.default_rng(seed).normal(size=(dim, 7)))[0].T
    V1 = enumerate_combinations(7)
    V2 = V1 @ anchors
    n = np.linalg.norm(V2, axis=1, keepdims=True)
    return Dataset2(V1, np.where(n > 0, V2 / np.where(n > 0, n, 1), 0.0))


def test_train_discriminator_zero_epochs_is_fm():
    d2 = anchor_dataset2()
    disc, curves = train_discriminator(None, d2, TrainConfig(epochs=0))
    tr, _ = split_indices(128, 0.7, 0)
    np.testing.assert_array_equal(disc.prototypes_, fm_init(d2.V1[tr], d2.V2[tr]))
    assert curves == {"train": [], "test": []}


def test_train_discriminator_separable():
    d2 = anchor_dataset2()
    disc, curves = train_discriminator(None, d2, TrainConfig.for_discriminator())
    assert len(curves["train"]) == 50 and len(curves["test"]) == 50
    assert curves["train"][-1] < curves["train"][0]
    assert all(np.isfinite(curves["train"] + curves["test"]))
    tr, _ = split_indices(128, 0.7, 0)
    tr = [i for i in tr if d2.V1[i].sum() > 0]
    assert disc.score(d2.V2[tr], d2.V1[tr]) == 1.0


def _trained_pair(seed=0):
    Y, X, _ = separable_pairs(seed=seed)
    examples = [LabeledExample(x, y) for x, y in zip(X, Y)]
    gen, _ = train_generator(examples, TrainConfig.for_generator(seed=seed))
    disc, _ = train_discriminator(None, generate_dataset2(gen), TrainConfig.for_discriminator(seed=seed))
    return gen, disc, examples


def test_joint_finetune():
    gen, disc, examples = _trained_pair()
    before = disc.prototypes_.copy()
    gen_before = gen.W2_.copy()
    cfg = TrainConfig.for_discriminator()
    joint_finetune(gen, disc, examples, cfg, rounds=0)
    assert np.array_equal(disc.prototypes_, before) and np.array_equal(gen.W2_, gen_before)
    _, _, curves = joint_finetune(gen, disc, examples, cfg, rounds=1)
    assert len(curves) == 1
    assert not np.array_equal(disc.prototypes_, before)
    assert not np.array_equal(gen.W2_, gen_before)

    g2, d2, ex2 = _trained_pair()
    joint_finetune(g2, d2, ex2, cfg, rounds=1)
    assert np.array_equal(d2.prototypes_, disc.prototypes_)
    assert np.array_equal(g2.W2_, gen.W2_)


def test_model_round_trip_is_bit_exact(tmp_path):
    gen, disc, _ = _trained_pair()
    model = GANModel(gen, disc, seed=0, train_config={"generator": TrainConfig().to_dict()})
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(model, p1)
    loaded = load_model(p1)
    save_model(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(loaded.discriminator.prototypes_, disc.prototypes_)
    assert np.array_equal(loaded.generator.W1_, gen.W1_)
    assert loaded.dim == 32


def test_estimators_clone_and_params():
    gen = EmotionGenerator(n_hidden=16, epochs=3)
    assert clone(gen).get_params()["n_hidden"] == 16
    disc = PrototypeDiscriminator(epochs=5, lr=0.05)
    assert clone(disc).get_params() == disc.get_params()
    with pytest.raises(Exception):
        PrototypeDiscriminator().predict(np.zeros((1, 3)))
