"""End-to-end training: generator -> Dataset_2 -> discriminator -> evaluation."""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .emotext import N_EMOTIONS
from .evaluation import EvalReport, evaluate
from .exceptions import DimensionError
from .gan import (
    N_HIDDEN,
    Dataset2,
    EmotionGenerator,
    GANModel,
    PrototypeDiscriminator,
    TrainConfig,
    generate_dataset2,
    generator_accuracy,
    joint_finetune,
    split_indices,
    train_discriminator,
)
from .io import as_arrays

GOLDEN_SPLIT_STREAM = 8


class EmotionGANClassifier(ClassifierMixin, BaseEstimator):
    """Multi-label emotion classifier trained on generator-balanced data.

    ``fit(X, Y)`` takes real embeddings ``X`` (n, D) and multi-hot labels
    ``Y`` (n, 7). A generator learns ``Y -> X``, is run over all 128 emotion
    combinations, and a prototype discriminator is trained on that balanced
    synthetic set only.
    """

    def __init__(
        self,
        n_hidden=N_HIDDEN,
        generator_epochs=10,
        generator_lr=1e-3,
        discriminator_epochs=50,
        discriminator_lr=1e-2,
        batch_size=16,
        split_fraction=0.7,
        finetune_rounds=0,
        random_state=0,
    ):
        self.n_hidden = n_hidden
        self.generator_epochs = generator_epochs
        self.generator_lr = generator_lr
        self.discriminator_epochs = discriminator_epochs
        self.discriminator_lr = discriminator_lr
        self.batch_size = batch_size
        self.split_fraction = split_fraction
        self.finetune_rounds = finetune_rounds
        self.random_state = random_state

    def generator_config(self):
        return TrainConfig(self.generator_epochs, self.generator_lr, self.batch_size,
                           self.random_state, self.split_fraction, self.finetune_rounds)

    def discriminator_config(self):
        return TrainConfig(self.discriminator_epochs, self.discriminator_lr, self.batch_size,
                           self.random_state, self.split_fraction, self.finetune_rounds)

    def fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        if Y.shape != (len(X), N_EMOTIONS):
            raise DimensionError(f"Y must have shape ({len(X)}, {N_EMOTIONS}), got {Y.shape}")
        gcfg, dcfg = self.generator_config(), self.discriminator_config()
        self.generator_ = EmotionGenerator(
            self.n_hidden, gcfg.epochs, gcfg.lr, gcfg.batch_size, gcfg.seed
        ).fit(Y, X)
        self.dataset2_ = generate_dataset2(self.generator_)
        self.discriminator_, dcurves = train_discriminator(None, self.dataset2_, dcfg)
        self.curves_ = {
            "generator": list(self.generator_.loss_curve_),
            "discriminator_train": dcurves["train"],
            "discriminator_test": dcurves["test"],
            "finetune": [],
        }
        if self.finetune_rounds:
            from .emotext import LabeledExample

            real = [LabeledExample(x, y) for x, y in zip(X, Y)]
            _, _, ft = joint_finetune(self.generator_, self.discriminator_, real, dcfg,
                                      self.finetune_rounds)
            self.curves_["finetune"] = ft
            self.dataset2_ = generate_dataset2(self.generator_)
        acc, mean_cos = generator_accuracy(self.generator_, Y, X)
        self.generator_train_accuracy_ = acc
        self.generator_mean_cosine_ = mean_cos
        self.classes_ = np.arange(N_EMOTIONS)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "discriminator_")
        return self.discriminator_.decision_function(X)

    def predict_proba(self, X):
        check_is_fitted(self, "discriminator_")
        return self.discriminator_.predict_proba(X)

    def predict(self, X):
        check_is_fitted(self, "discriminator_")
        return self.discriminator_.predict(X)

    def score(self, X, Y):
        return self.discriminator_.score(X, Y)

    def to_model(self):
        check_is_fitted(self, "discriminator_")
        return GANModel(
            self.generator_,
            self.discriminator_,
            seed=self.random_state,
            train_config={
                "generator": self.generator_config().to_dict(),
                "discriminator": self.discriminator_config().to_dict(),
            },
        )


@dataclass
class TrainingResult:
    classifier: EmotionGANClassifier
    report: EvalReport
    train_examples: list
    test_examples: list
    curves: dict = field(default_factory=dict)

    @property
    def model(self):
        return self.classifier.to_model()

    @property
    def dataset2(self) -> Dataset2:
        return self.classifier.dataset2_


def run_training(examples, seed, gen_cfg=None, disc_cfg=None, n_hidden=N_HIDDEN):
    """Split the collision-free examples into train/golden parts, fit the
    classifier on the train part and evaluate on the golden part."""
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    gen_cfg = gen_cfg or TrainConfig.for_generator(seed=seed)
    disc_cfg = disc_cfg or TrainConfig.for_discriminator(seed=seed)
    tr, te = split_indices(len(examples), gen_cfg.split_fraction, seed, GOLDEN_SPLIT_STREAM)
    train = [examples[i] for i in tr]
    test = [examples[i] for i in te]
    if not train or not test:
        raise ValueError("dataset too small for a train/golden split")
    clf = EmotionGANClassifier(
        n_hidden=n_hidden,
        generator_epochs=gen_cfg.epochs,
        generator_lr=gen_cfg.lr,
        discriminator_epochs=disc_cfg.epochs,
        discriminator_lr=disc_cfg.lr,
        batch_size=gen_cfg.batch_size,
        split_fraction=disc_cfg.split_fraction,
        finetune_rounds=disc_cfg.finetune_rounds,
        random_state=seed,
    )
    X, Y = as_arrays(train)
    clf.fit(X, Y)
    Xt, Yt = as_arrays(test)
    report = evaluate(clf.predict_proba(Xt), Yt, [ex.text for ex in test])
    curves = dict(clf.curves_)
    curves["generator_train_accuracy"] = clf.generator_train_accuracy_
    curves["generator_mean_cosine"] = clf.generator_mean_cosine_
    return TrainingResult(clf, report, train, test, curves)
