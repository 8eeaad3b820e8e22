"""Detection of label collisions: near-identical features with conflicting labels.

Examples are grouped by greedy leader clustering on cosine similarity. Each
cluster's labels are summed per class and compared against the cluster's
mean class sum; a cluster in which more than ``k`` classes reach the mean is
a collision and all of its members are flagged.
"""
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .emotext import N_EMOTIONS
from .exceptions import DimensionError
from .mathkit import EPS_NORM

# slack so that tau=1.0 still groups duplicates despite rounding in the norm
TAU_SLACK = 1e-12


@dataclass(frozen=True)
class CollisionParams:
    k: int = 2
    tau: float = 0.995

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or not 1 <= self.k <= N_EMOTIONS:
            raise ValueError(f"k must be an integer in [1, {N_EMOTIONS}], got {self.k!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")


@dataclass
class ClusterStats:
    id: int
    size: int
    class_sums: np.ndarray
    mean: float
    Z: int
    collision: bool = False

    def to_dict(self):
        return {
            "id": self.id,
            "size": self.size,
            "class_sums": [float(v) for v in self.class_sums],
            "mean": self.mean,
            "Z": self.Z,
            "collision": self.collision,
        }


def _unit_rows(X):
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms < EPS_NORM, 1.0, norms)
    return np.where((norms < EPS_NORM)[:, None], 0.0, X / safe[:, None])


def cluster_embeddings(X, tau):
    """Greedy leader clustering of the rows of ``X``.

    Rows are scanned in order; a row joins the first leader whose cosine
    similarity is at least ``tau``, otherwise it becomes a new leader.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError(f"expected a non-empty (n, D) matrix, got shape {X.shape}")
    U = _unit_rows(X)
    ids = np.empty(len(U), dtype=np.int64)
    leaders = np.empty((0, U.shape[1]))
    for i, u in enumerate(U):
        if len(leaders):
            hits = np.flatnonzero(leaders @ u >= tau - TAU_SLACK)
            if hits.size:
                ids[i] = hits[0]
                continue
        ids[i] = len(leaders)
        leaders = np.vstack([leaders, u])
    return ids


def _embeddings(examples):
    if not examples:
        raise DimensionError("empty dataset")
    dims = {ex.embedding.shape for ex in examples}
    if len(dims) > 1:
        raise DimensionError(f"mixed embedding dimensions: {sorted(dims)}")
    return np.stack([ex.embedding for ex in examples])


def cluster_objects(examples, tau):
    return cluster_embeddings(_embeddings(examples), tau)


def cluster_stats_arrays(Y, ids):
    Y = np.asarray(Y, dtype=np.float64)
    stats = []
    for cid in np.unique(ids):
        members = ids == cid
        sums = Y[members].sum(axis=0)
        total = sums.sum()
        # sums[j] >= total/7, written without the division
        z = int(np.count_nonzero(N_EMOTIONS * sums >= total))
        stats.append(ClusterStats(int(cid), int(members.sum()), sums, float(total / N_EMOTIONS), z))
    return stats


def cluster_stats(examples, ids):
    return cluster_stats_arrays(np.stack([ex.emotions for ex in examples]), ids)


def mark_collisions(examples, params: CollisionParams):
    """Flag every member of a cluster with ``Z > k``.

    Returns new example objects (inputs are left untouched) and the stats.
    """
    X = _embeddings(examples)
    Y = np.stack([ex.emotions for ex in examples])
    det = CollisionDetector(params.k, params.tau).fit(X, Y)
    marked = [replace(ex, collision=bool(flag)) for ex, flag in zip(examples, det.collision_mask_)]
    return marked, det.stats_


def filter_collisions(examples):
    return [ex for ex in examples if not ex.collision]


class CollisionDetector(BaseEstimator):
    """Estimator wrapper: ``fit(X, Y)`` with embeddings ``X`` and multi-hot ``Y``.

    Fitted attributes: ``labels_`` (cluster id per row), ``stats_`` and
    ``collision_mask_``.
    """

    def __init__(self, k=2, tau=0.995):
        self.k = k
        self.tau = tau

    def fit(self, X, Y):
        params = CollisionParams(self.k, self.tau)
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        if Y.shape != (X.shape[0], N_EMOTIONS):
            raise DimensionError(f"Y must have shape ({X.shape[0]}, {N_EMOTIONS}), got {Y.shape}")
        self.labels_ = cluster_embeddings(X, params.tau)
        self.stats_ = cluster_stats_arrays(Y, self.labels_)
        bad = set()
        for st in self.stats_:
            st.collision = st.Z > params.k
            if st.collision:
                bad.add(st.id)
        self.collision_mask_ = np.isin(self.labels_, sorted(bad))
        return self

    def fit_predict(self, X, Y):
        return self.fit(X, Y).collision_mask_

    def report(self):
        check_is_fitted(self, "stats_")
        return [st.to_dict() for st in self.stats_]
