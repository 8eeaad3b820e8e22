"""Synthetic labelled embeddings built from orthonormal emotion anchors."""
from dataclasses import dataclass, field

import numpy as np

from .emotext import N_EMOTIONS, LabeledExample
from .gan import rng_for


@dataclass
class SyntheticSpec:
    D: int = 512
    noise_sigma: float = 0.05
    examples_per_combo: int = 20
    combos: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if self.D < N_EMOTIONS:
            raise ValueError(f"D must be >= {N_EMOTIONS} to hold orthonormal anchors")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.examples_per_combo < 1:
            raise ValueError("examples_per_combo must be >= 1")
        combos = [tuple(int(v) for v in c) for c in self.combos]
        if any(len(c) != N_EMOTIONS or set(c) - {0, 1} for c in combos):
            raise ValueError(f"combos must be binary vectors of length {N_EMOTIONS}")
        if len(set(combos)) != len(combos):
            raise ValueError("combos must be distinct")
        self.combos = [list(c) for c in combos]


def make_anchors(D, seed):
    """Seven orthonormal directions in R^D, as rows."""
    q, r = np.linalg.qr(rng_for(seed, 11).standard_normal((D, N_EMOTIONS)))
    return (q * np.sign(np.diag(r))).T


def synthesize(spec: SyntheticSpec):
    """For each combo, ``examples_per_combo`` noisy copies of the normalized
    sum of its anchors. Returns ``(examples, anchors)``."""
    anchors = make_anchors(spec.D, spec.seed)
    rng = rng_for(spec.seed, 12)
    examples = []
    for combo in spec.combos:
        s = np.asarray(combo, dtype=np.float64) @ anchors
        n = np.linalg.norm(s)
        center = s / n if n > 0 else s
        for _ in range(spec.examples_per_combo):
            noise = rng.standard_normal(spec.D) * spec.noise_sigma if spec.noise_sigma else 0.0
            examples.append(LabeledExample(center + noise, combo))
    return examples, anchors
