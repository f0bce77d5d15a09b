"""Bagged ensemble of depth-limited binary CART trees, built from scratch.

Trees greedily split on Gini impurity decrease over candidate thresholds at
midpoints between consecutive distinct feature values. Split comparison uses
exact integer arithmetic for near-ties so that tie-breaking (lower feature
index, then lower threshold) never depends on float rounding order.

Each tree trains on an n-row bootstrap draw; its RNG stream derives from
(seed, tree index) via numpy's SeedSequence/PCG64, so training is
deterministic and per-tree parallelizable. Prediction soft-votes: the mean
over trees of the leaf true-positive fraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ValidationError
from .features import FeatureProfile, FeatureVector

MODEL_FORMAT_VERSION = "1"

# Relative float tolerance below which two split scores are re-compared
# exactly with integers.
_TIE_EPS = 1e-9


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_depth: int = 6
    min_samples_split: int = 2
    seed: int = 42

    def __post_init__(self):
        for name in ("n_estimators", "max_depth", "min_samples_split"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")

    def max_features_for(self, width: int) -> int:
        """Candidate features per node: floor(sqrt(width)), at least 1."""
        return max(1, math.isqrt(width))


@dataclass
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (class counts).

    Internal nodes route value <= threshold to the left child. Leaves hold
    the bootstrap-sample class counts (n_tp, n_fp) they were grown on.
    """

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    n_tp: int = 0
    n_fp: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n_samples(self) -> int:
        if self.is_leaf:
            return self.n_tp + self.n_fp
        return self.left.n_samples + self.right.n_samples

    @property
    def leaf_fraction(self) -> float:
        return self.n_tp / (self.n_tp + self.n_fp)


@dataclass
class Forest:
    trees: list[TreeNode]
    params: ForestParams
    feature_names: list[str]
    profile: FeatureProfile | None = None

    @property
    def width(self) -> int:
        return len(self.feature_names)


def gini(counts: tuple[int, int]) -> float:
    """Gini impurity of a two-class count pair: 1 - p_tp^2 - p_fp^2."""
    n_tp, n_fp = counts
    total = n_tp + n_fp
    if total < 1:
        raise ValidationError("gini of an empty node is undefined")
    p_tp = n_tp / total
    p_fp = n_fp / total
    return 1.0 - p_tp * p_tp - p_fp * p_fp


def best_split(
    X: np.ndarray, y: np.ndarray, candidate_features: Sequence[int]
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, Gini decrease) over the candidates, or None.

    Thresholds are midpoints between consecutive distinct sorted values.
    The split maximizing weighted Gini decrease wins; ties go to the lower
    feature index, then the lower threshold. None when no split strictly
    decreases impurity.

    Scores are compared as s = (tp_l^2+fp_l^2)/n_l + (tp_r^2+fp_r^2)/n_r,
    a monotone transform of the Gini decrease with the parent fixed; exact
    integer comparison settles candidates within float tolerance of each
    other.
    """
    n = len(y)
    total_tp = int(y.sum())
    total_fp = n - total_tp
    parent_mass = total_tp * total_tp + total_fp * total_fp
    eps = _TIE_EPS * max(1.0, float(n))

    best: tuple[float, int, int, float, int] | None = None  # (score, N, D, threshold, feature)
    for feat in sorted(set(int(f) for f in candidate_features)):
        order = np.argsort(X[:, feat], kind="stable")
        xs = X[order, feat]
        tp_cum = np.cumsum(y[order])
        boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundaries.size == 0:
            continue
        n_left = boundaries + 1
        tp_left = tp_cum[boundaries]
        fp_left = n_left - tp_left
        n_right = n - n_left
        tp_right = total_tp - tp_left
        fp_right = total_fp - fp_left
        mass_left = tp_left * tp_left + fp_left * fp_left
        mass_right = tp_right * tp_right + fp_right * fp_right
        scores = mass_left / n_left + mass_right / n_right

        top = float(scores.max())
        close = np.nonzero(scores >= top - eps)[0]
        pick = None  # (N, D, position in boundaries), exact max at lowest threshold
        for i in close:
            num = int(mass_left[i]) * int(n_right[i]) + int(mass_right[i]) * int(n_left[i])
            den = int(n_left[i]) * int(n_right[i])
            if pick is None or num * pick[1] > pick[0] * den:
                pick = (num, den, int(i))
        num, den, i = pick
        boundary = int(boundaries[i])
        threshold = float((xs[boundary] + xs[boundary + 1]) / 2.0)
        score = float(scores[i])

        if best is None:
            best = (score, num, den, threshold, feat)
        elif score > best[0] + eps:
            best = (score, num, den, threshold, feat)
        elif score >= best[0] - eps and num * best[2] > best[1] * den:
            # exact strict improvement; exact ties keep the lower feature
            best = (score, num, den, threshold, feat)

    if best is None:
        return None
    _, num, den, threshold, feat = best
    # require a strict impurity decrease: s_split > s_parent, exactly
    if num * n <= parent_mass * den:
        return None
    decrease = (num / den - parent_mass / n) / n
    return feat, threshold, float(decrease)


def grow_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator
) -> TreeNode:
    """Grow one depth-limited tree; candidate features draw from rng per node."""
    if len(y) == 0:
        raise ValidationError("cannot grow a tree on an empty sample")
    width = X.shape[1]
    n_candidates = min(params.max_features_for(width), width)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        ys = y[idx]
        n_tp = int(ys.sum())
        n_fp = len(idx) - n_tp
        if (
            depth >= params.max_depth
            or n_tp == 0
            or n_fp == 0
            or len(idx) < params.min_samples_split
        ):
            return TreeNode(n_tp=n_tp, n_fp=n_fp)
        candidates = rng.choice(width, size=n_candidates, replace=False)
        split = best_split(X[idx], ys, candidates)
        if split is None:
            return TreeNode(n_tp=n_tp, n_fp=n_fp)
        feat, threshold, _ = split
        mask = X[idx, feat] <= threshold
        assert mask.any() and (~mask).any(), "split must partition the node"
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        return TreeNode(feature=feat, threshold=threshold, left=left, right=right)

    return build(np.arange(len(y)), 0)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, tree_index]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def train_forest(
    matrix: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[int],
    params: ForestParams | None = None,
    feature_names: Sequence[str] | None = None,
) -> Forest:
    """Train the bagged ensemble; deterministic given (data, params)."""
    from .features import as_matrix  # local to avoid cycle at import time

    params = params or ForestParams()
    X = as_matrix(matrix)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"{X.shape[0]} rows vs {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValidationError("training needs at least 2 samples")
    present = set(np.unique(y).tolist())
    if not present <= {0, 1}:
        raise ValidationError(f"labels must be 0/1, got {sorted(present)}")
    if len(present) < 2:
        raise ValidationError("training needs both classes present")

    width = X.shape[1]
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(width)]
    elif len(feature_names) != width:
        raise ValidationError(f"{len(feature_names)} names vs width {width}")
    profile = next((p for p in FeatureProfile if p.width == width), None)

    n = X.shape[0]
    trees = []
    for i in range(params.n_estimators):
        rng = _tree_rng(params.seed, i)
        bootstrap = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[bootstrap], y[bootstrap], params, rng))
    return Forest(trees=trees, params=params, feature_names=list(feature_names), profile=profile)


def _check_vector(forest: Forest, vector: FeatureVector | Sequence[float]) -> np.ndarray:
    values = vector.values if isinstance(vector, FeatureVector) else vector
    arr = np.asarray(values, dtype=float)
    if arr.shape != (forest.width,):
        raise ValidationError(f"vector width {arr.shape} does not match forest width {forest.width}")
    return arr


def _descend(node: TreeNode, row: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node


def predict_proba(forest: Forest, vector: FeatureVector | Sequence[float]) -> float:
    """Mean over trees of the leaf TP fraction at the vector's leaf."""
    row = _check_vector(forest, vector)
    return float(
        sum(_descend(tree, row).leaf_fraction for tree in forest.trees) / len(forest.trees)
    )


def predict(
    forest: Forest, vector: FeatureVector | Sequence[float], threshold: float = 0.5
) -> int:
    """1 (TP) iff predict_proba >= threshold; ties resolve to TP."""
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    return 1 if predict_proba(forest, vector) >= threshold else 0


def predict_proba_batch(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Vectorized predict_proba over matrix rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.width:
        raise ValidationError(f"matrix shape {X.shape} does not match forest width {forest.width}")
    total = np.zeros(X.shape[0])

    def accumulate(node: TreeNode, idx: np.ndarray):
        if node.is_leaf:
            total[idx] += node.leaf_fraction
            return
        mask = X[idx, node.feature] <= node.threshold
        if mask.any():
            accumulate(node.left, idx[mask])
        if (~mask).any():
            accumulate(node.right, idx[~mask])

    for tree in forest.trees:
        accumulate(tree, np.arange(X.shape[0]))
    return total / len(forest.trees)


def max_depth_of(node: TreeNode) -> int:
    """Longest root-to-leaf path in edges."""
    if node.is_leaf:
        return 0
    return 1 + max(max_depth_of(node.left), max_depth_of(node.right))


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"tp": node.n_tp, "fp": node.n_fp}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(obj: dict) -> TreeNode:
    if "feature" in obj:
        return TreeNode(
            feature=int(obj["feature"]),
            threshold=float(obj["threshold"]),
            left=_node_from_dict(obj["left"]),
            right=_node_from_dict(obj["right"]),
        )
    return TreeNode(n_tp=int(obj["tp"]), n_fp=int(obj["fp"]))


def forest_to_dict(forest: Forest) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "params": {
            "n_estimators": forest.params.n_estimators,
            "max_depth": forest.params.max_depth,
            "min_samples_split": forest.params.min_samples_split,
            "seed": forest.params.seed,
        },
        "profile": forest.profile.value if forest.profile else None,
        "feature_names": forest.feature_names,
        "trees": [_node_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(obj: dict) -> Forest:
    if obj.get("version") != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported model format version {obj.get('version')!r} "
            f"(expected {MODEL_FORMAT_VERSION!r})"
        )
    params = ForestParams(**obj["params"])
    profile = FeatureProfile(obj["profile"]) if obj.get("profile") else None
    return Forest(
        trees=[_node_from_dict(t) for t in obj["trees"]],
        params=params,
        feature_names=list(obj["feature_names"]),
        profile=profile,
    )


def save_forest(forest: Forest, stream: IO[str]) -> None:
    json.dump(forest_to_dict(forest), stream, sort_keys=True)


def load_forest(stream: IO[str]) -> Forest:
    return forest_from_dict(json.load(stream))
