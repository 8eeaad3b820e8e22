"""Emotion recognition from text embeddings with generator-balanced training data."""
from .collisions import CollisionDetector, CollisionParams, filter_collisions, mark_collisions
from .emotext import EMOTIONS, EmoticonDictionary, EmoticonVectorizer, LabeledExample
from .evaluation import EvalReport, evaluate, top2
from .gan import (
    EmotionGenerator,
    GANModel,
    PrototypeDiscriminator,
    TrainConfig,
    enumerate_combinations,
    fm_init,
    load_model,
    save_model,
)
from .io import reference_combinations
from .pipeline import EmotionGANClassifier, run_training
from .synth import SyntheticSpec, synthesize

__version__ = "0.1.0"
