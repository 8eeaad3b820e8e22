"""Generator/discriminator pair for balancing emotion combinations.

The generator is a two-layer linear map from a 7-dim multi-hot emotion
vector to an embedding (7 -> 128 -> D, no activations), trained with MSE.
Once trained it is evaluated on all 2**7 emotion combinations, giving a
perfectly balanced synthetic set ("Dataset_2").  The discriminator scores an
embedding by its cosine similarity to one prototype row per emotion; the
prototypes start from the frequency matrix ``E.T @ B`` and are refined with a
cosine loss against the multi-hot targets.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .emotext import N_EMOTIONS, LabeledExample
from .evaluation import top2
from .exceptions import DimensionError, NumericalError
from .io import dumps
from .mathkit import (
    EPS_NORM,
    AdamState,
    adam_step,
    batch_cosine_loss,
    cosine_matrix,
    linear_backward,
    linear_forward,
    mse_loss,
    normalize_forecast,
)

N_HIDDEN = 128


def rng_for(seed, stream):
    """Independent generator for a named sub-stream of a master seed."""
    return np.random.default_rng([int(seed), int(stream)])


def enumerate_combinations(n=N_EMOTIONS):
    """All ``2**n`` binary vectors in ascending order, most significant bit first."""
    if isinstance(n, bool) or not 1 <= int(n) <= 16:
        raise ValueError(f"n must be in [1, 16], got {n!r}")
    idx = np.arange(2**n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    return ((idx >> shifts) & 1).astype(np.int64)


def fm_init(emotions, embeddings):
    """Frequency matrix ``E.T @ B``: row j sums the embeddings labelled j."""
    E = np.asarray(emotions, dtype=np.float64)
    B = np.asarray(embeddings, dtype=np.float64)
    if E.ndim != 2 or B.ndim != 2 or len(E) == 0:
        raise ValueError("fm_init needs non-empty (N, 7) and (N, D) matrices")
    if len(E) != len(B):
        raise DimensionError(f"{len(E)} emotion rows vs {len(B)} embedding rows")
    # accumulate row by row instead of E.T @ B: BLAS may reorder the sums,
    # this keeps the result reproducible to the last bit
    F = np.zeros((E.shape[1], B.shape[1]))
    for e, b in zip(E, B):
        F += np.outer(e, b)
    return F


def _check_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"non-finite value encountered while training {name}")


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 1e-3
    batch_size: int = 16
    seed: int = 0
    split_fraction: float = 0.7
    finetune_rounds: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.finetune_rounds < 0:
            raise ValueError("finetune_rounds must be >= 0")

    @classmethod
    def for_generator(cls, **kw):
        return cls(**{"epochs": 10, **kw})

    @classmethod
    def for_discriminator(cls, **kw):
        return cls(**{"epochs": 50, "lr": 1e-2, **kw})

    def to_dict(self):
        return asdict(self)


def split_indices(n, fraction, seed, stream=7):
    """Seeded shuffle split; the train part has ``floor(fraction * n)`` items."""
    perm = rng_for(seed, stream).permutation(n)
    n_train = math.floor(fraction * n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _minibatches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


class EmotionGenerator(BaseEstimator):
    """Linear 7 -> n_hidden -> D generator trained with MSE and Adam.

    ``fit(Y, X)`` learns to map multi-hot emotion rows ``Y`` to embeddings
    ``X``; ``predict(Y)`` produces embeddings.
    """

    def __init__(self, n_hidden=N_HIDDEN, epochs=10, lr=1e-3, batch_size=16, random_state=0):
        self.n_hidden = n_hidden
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.random_state = random_state

    def _init_params(self, n_out):
        rng = rng_for(self.random_state, 1)
        lim1 = 1.0 / math.sqrt(N_EMOTIONS)
        lim2 = 1.0 / math.sqrt(self.n_hidden)
        self.W1_ = rng.uniform(-lim1, lim1, (self.n_hidden, N_EMOTIONS))
        self.b1_ = rng.uniform(-lim1, lim1, self.n_hidden)
        self.W2_ = rng.uniform(-lim2, lim2, (n_out, self.n_hidden))
        self.b2_ = rng.uniform(-lim2, lim2, n_out)
        self._adam = {name: AdamState.like(getattr(self, name), lr=self.lr)
                      for name in ("W1_", "b1_", "W2_", "b2_")}
        self._shuffle_rng = rng_for(self.random_state, 2)
        self.n_features_out_ = n_out
        self.loss_curve_ = []

    def _validate(self, Y, X=None):
        Y = check_array(Y, dtype=np.float64)
        if Y.shape[1] != N_EMOTIONS:
            raise DimensionError(f"emotion rows must have {N_EMOTIONS} columns, got {Y.shape[1]}")
        if X is None:
            return Y
        X = check_array(X, dtype=np.float64)
        if len(X) != len(Y):
            raise DimensionError(f"{len(Y)} emotion rows vs {len(X)} embedding rows")
        return Y, X

    def fit(self, Y, X):
        Y, X = self._validate(Y, X)
        self._init_params(X.shape[1])
        return self._train(Y, X, self.epochs)

    def partial_fit(self, Y, X, epochs=1):
        """Continue training from the current weights and optimizer state."""
        if not hasattr(self, "W1_"):
            return self.fit(Y, X)
        Y, X = self._validate(Y, X)
        if X.shape[1] != self.n_features_out_:
            raise DimensionError(f"embedding dim {X.shape[1]} != {self.n_features_out_}")
        return self._train(Y, X, epochs)

    def _train(self, Y, X, epochs):
        n = len(Y)
        for _ in range(epochs):
            total = 0.0
            for batch in _minibatches(n, self.batch_size, self._shuffle_rng):
                y, target = Y[batch], X[batch]
                h = linear_forward(self.W1_, self.b1_, y)
                out = linear_forward(self.W2_, self.b2_, h)
                loss, grad = mse_loss(out, target)
                dW2, db2, dh = linear_backward(self.W2_, self.b2_, h, grad)
                dW1, db1, _ = linear_backward(self.W1_, self.b1_, y, dh)
                _check_finite("generator", loss, dW1, dW2)
                for name, g in (("W1_", dW1), ("b1_", db1), ("W2_", dW2), ("b2_", db2)):
                    new, self._adam[name] = adam_step(getattr(self, name), g, self._adam[name])
                    setattr(self, name, new)
                total += loss * len(batch)
            self.loss_curve_.append(total / n)
        return self

    def predict(self, Y):
        check_is_fitted(self, "W1_")
        Y = self._validate(Y)
        return linear_forward(self.W2_, self.b2_, linear_forward(self.W1_, self.b1_, Y))

    def score(self, Y, X, threshold=0.9):
        return generator_accuracy(self, Y, X, threshold)[0]


def generator_accuracy(gen, Y, X, threshold=0.9):
    """Fraction of pairs whose generated embedding has cosine >= threshold
    with the real one, together with the mean cosine."""
    G = gen.predict(Y)
    X = np.asarray(X, dtype=np.float64)
    cos = np.einsum("ij,ij->i", _unit(G), _unit(X))
    return float(np.mean(cos >= threshold)), float(np.mean(cos))


def _unit(M):
    n = np.linalg.norm(M, axis=1, keepdims=True)
    return np.where(n < EPS_NORM, 0.0, M / np.where(n < EPS_NORM, 1.0, n))


@dataclass
class Dataset2:
    V1: np.ndarray
    V2: np.ndarray

    def __len__(self):
        return len(self.V1)

    def to_examples(self):
        return [LabeledExample(v2, v1) for v1, v2 in zip(self.V1, self.V2)]


def generate_dataset2(gen):
    """Run the generator over every emotion combination."""
    V1 = enumerate_combinations(N_EMOTIONS)
    return Dataset2(V1, gen.predict(V1))


class PrototypeDiscriminator(ClassifierMixin, BaseEstimator):
    """Cosine-similarity classifier with one prototype row per emotion.

    ``decision_function`` returns the raw cosines, ``predict_proba`` the
    min-shifted, sum-normalized forecast and ``predict`` a multi-hot matrix
    marking the two strongest emotions.
    """

    def __init__(self, epochs=50, lr=1e-2, batch_size=16, random_state=0, warm_start=False):
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.random_state = random_state
        self.warm_start = warm_start

    def fit(self, X, Y, eval_set=None):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        if Y.shape != (len(X), N_EMOTIONS):
            raise DimensionError(f"Y must have shape ({len(X)}, {N_EMOTIONS}), got {Y.shape}")
        if len(X) == 0:
            raise ValueError("empty training split")
        if not (self.warm_start and hasattr(self, "prototypes_")):
            self.set_prototypes(fm_init(Y, X))
        elif X.shape[1] != self.n_features_in_:
            raise DimensionError(f"embedding dim {X.shape[1]} != {self.n_features_in_}")
        self.loss_curve_, self.validation_curve_ = [], []
        keep = Y.sum(axis=1) > 0  # the all-zero combination has no cosine target
        X, Y = X[keep], Y[keep]
        if eval_set is not None:
            Xv, Yv = (np.asarray(a, dtype=np.float64) for a in eval_set)
            kv = Yv.sum(axis=1) > 0
            Xv, Yv = Xv[kv], Yv[kv]
        rng = rng_for(self.random_state, 3)
        for _ in range(self.epochs):
            total = 0.0
            for batch in _minibatches(len(X), self.batch_size, rng):
                loss, grad = self._loss_grad(X[batch], Y[batch])
                self.prototypes_, self._adam = adam_step(self.prototypes_, grad, self._adam)
                total += loss * len(batch)
            self.loss_curve_.append(total / max(len(X), 1))
            if eval_set is not None and len(Xv):
                self.validation_curve_.append(batch_cosine_loss(self.decision_function(Xv), Yv)[0])
        return self

    def set_prototypes(self, prototypes):
        P = np.array(prototypes, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != N_EMOTIONS:
            raise DimensionError(f"prototypes must have {N_EMOTIONS} rows, got shape {P.shape}")
        self.prototypes_ = P
        self.n_features_in_ = P.shape[1]
        self.classes_ = np.arange(N_EMOTIONS)
        self._adam = AdamState.like(P, lr=self.lr)
        return self

    def _loss_grad(self, X, Y):
        P = self.prototypes_
        raw = cosine_matrix(X, P)
        loss, g = batch_cosine_loss(raw, Y)
        _check_finite("discriminator", loss, g)
        pn = np.linalg.norm(P, axis=1)
        live = pn >= EPS_NORM
        inv = np.where(live, 1.0 / np.where(live, pn, 1.0), 0.0)
        # d cos(x, p)/dp = x_hat/|p| - cos * p/|p|^2
        grad = (g.T @ _unit(X)) * inv[:, None] - (g * raw).sum(axis=0)[:, None] * P * (inv**2)[:, None]
        _check_finite("discriminator", grad)
        return loss, grad

    def decision_function(self, X):
        check_is_fitted(self, "prototypes_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(f"embedding dim {X.shape[1]} != {self.n_features_in_}")
        return cosine_matrix(X, self.prototypes_)

    def predict_proba(self, X):
        return np.stack([normalize_forecast(r) for r in self.decision_function(X)])

    def predict(self, X):
        out = np.zeros((len(X), N_EMOTIONS), dtype=np.int64)
        for i, row in enumerate(self.predict_proba(X)):
            t = top2(row)
            out[i, [t.first, t.second]] = 1
        return out

    def score(self, X, Y):
        """Top-2 overlap rate against multi-hot gold rows."""
        pred = self.predict(X)
        return float(np.mean((pred * np.asarray(Y)).sum(axis=1) > 0))


def discriminator_forward(disc, x):
    """Raw cosine scores and normalized forecast for a single embedding."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("expected a single embedding vector")
    raw = disc.decision_function(x[None, :])[0]
    return raw, normalize_forecast(raw)


def train_generator(examples, cfg: TrainConfig, n_hidden=N_HIDDEN):
    if not examples:
        raise ValueError("cannot train the generator on an empty dataset")
    X = np.stack([ex.embedding for ex in examples])
    Y = np.stack([ex.emotions for ex in examples])
    gen = EmotionGenerator(n_hidden, cfg.epochs, cfg.lr, cfg.batch_size, cfg.seed).fit(Y, X)
    return gen, list(gen.loss_curve_)


def train_discriminator(disc, dataset2: Dataset2, cfg: TrainConfig):
    """Split Dataset_2, FM-initialize (unless ``disc`` warm-starts) and train.

    Returns the discriminator and ``{"train": [...], "test": [...]}`` curves.
    """
    tr, te = split_indices(len(dataset2), cfg.split_fraction, cfg.seed)
    if len(tr) == 0 or len(te) == 0:
        raise ValueError("empty train or test split of Dataset_2")
    if disc is None:
        disc = PrototypeDiscriminator(cfg.epochs, cfg.lr, cfg.batch_size, cfg.seed)
    disc.fit(dataset2.V2[tr], dataset2.V1[tr], eval_set=(dataset2.V2[te], dataset2.V1[te]))
    return disc, {"train": list(disc.loss_curve_), "test": list(disc.validation_curve_)}


def joint_finetune(gen, disc, examples, disc_cfg: TrainConfig, rounds):
    """Alternate regenerating Dataset_2, retraining the discriminator on it
    (warm start) and one generator epoch on the real data."""
    curves = []
    if rounds <= 0:
        return gen, disc, curves
    X = np.stack([ex.embedding for ex in examples])
    Y = np.stack([ex.emotions for ex in examples])
    disc.set_params(warm_start=True)
    for _ in range(rounds):
        d2 = generate_dataset2(gen)
        disc, dc = train_discriminator(disc, d2, disc_cfg)
        gen.partial_fit(Y, X, epochs=1)
        curves.append({"discriminator": dc, "generator": gen.loss_curve_[-1]})
    disc.set_params(warm_start=False)
    return gen, disc, curves


@dataclass
class GANModel:
    generator: EmotionGenerator
    discriminator: PrototypeDiscriminator
    seed: int = 0
    train_config: dict = field(default_factory=dict)
    FORMAT_VERSION = 1

    @property
    def dim(self):
        return self.discriminator.n_features_in_

    def to_dict(self):
        g, d = self.generator, self.discriminator
        return {
            "format_version": self.FORMAT_VERSION,
            "D": int(self.dim),
            "generator": {
                "W1": g.W1_.tolist(), "b1": g.b1_.tolist(),
                "W2": g.W2_.tolist(), "b2": g.b2_.tolist(),
            },
            "discriminator": {"prototypes": d.prototypes_.tolist()},
            "seed": int(self.seed),
            "train_config": self.train_config,
        }

    @classmethod
    def from_dict(cls, obj):
        if obj.get("format_version") != cls.FORMAT_VERSION:
            raise ValueError(f"unsupported model format_version {obj.get('format_version')!r}")
        D = int(obj["D"])
        gw = obj["generator"]
        gen = EmotionGenerator(n_hidden=len(gw["b1"]))
        gen._init_params(D)
        gen.W1_, gen.b1_ = np.asarray(gw["W1"], float), np.asarray(gw["b1"], float)
        gen.W2_, gen.b2_ = np.asarray(gw["W2"], float), np.asarray(gw["b2"], float)
        disc = PrototypeDiscriminator().set_prototypes(obj["discriminator"]["prototypes"])
        if gen.W2_.shape != (D, gen.n_hidden) or disc.n_features_in_ != D:
            raise DimensionError("model weights do not match the declared D")
        return cls(gen, disc, int(obj.get("seed", 0)), dict(obj.get("train_config", {})))


def save_model(model: GANModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model.to_dict()))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return GANModel.from_dict(json.load(fh))
