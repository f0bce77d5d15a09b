"""Exact per-feature Shapley attributions for forest predictions.

Implements path-dependent TreeSHAP: a single descent per tree carries a
path of unique split features, each with the fraction of training samples
that flow through when the feature is excluded (z) or included (o), plus
permutation weights for every subset size. Leaf values are weighted by the
unwound path sums, giving the exact Shapley values of the tree's
conditional-expectation game in polynomial time.

Local accuracy holds by construction: base_value + sum(phi) equals
predict_proba to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .features import FeatureVector, as_matrix
from .forest import Forest, TreeNode, _check_vector


@dataclass(frozen=True)
class Attribution:
    """Per-feature contributions phi and the model's expected output."""

    base_value: float
    phi: tuple[float, ...]

    @property
    def total(self) -> float:
        return self.base_value + sum(self.phi)


def _extend(d: list, z: list, o: list, w: list, pz: float, po: float, pi: int):
    """Append a path element and update subset-size weights in place."""
    size = len(d)
    d.append(pi)
    z.append(pz)
    o.append(po)
    w.append(1.0 if size == 0 else 0.0)
    for i in range(size - 1, -1, -1):
        w[i + 1] += po * w[i] * (i + 1) / (size + 1)
        w[i] = pz * w[i] * (size - i) / (size + 1)


def _unwind(d: list, z: list, o: list, w: list, k: int):
    """Remove path element k, restoring the weights to the shorter path."""
    size = len(d)
    zk, ok = z[k], o[k]
    carry = w[size - 1]
    if ok != 0.0:
        for j in range(size - 2, -1, -1):
            kept = w[j]
            w[j] = carry * size / ((j + 1) * ok)
            carry = kept - w[j] * zk * (size - 1 - j) / size
    else:
        for j in range(size - 2, -1, -1):
            w[j] = w[j] * size / (zk * (size - 1 - j))
    w.pop()
    del d[k], z[k], o[k]


def _unwound_sum(z: list, o: list, w: list, k: int) -> float:
    """Sum of weights after removing element k, without mutating the path."""
    size = len(z)
    zk, ok = z[k], o[k]
    carry = w[size - 1]
    total = 0.0
    if ok != 0.0:
        for j in range(size - 2, -1, -1):
            unwound = carry * size / ((j + 1) * ok)
            total += unwound
            carry = w[j] - unwound * zk * (size - 1 - j) / size
    else:
        for j in range(size - 2, -1, -1):
            total += w[j] * size / (zk * (size - 1 - j))
    return total


def _node_counts(root: TreeNode) -> dict[int, int]:
    counts: dict[int, int] = {}

    def visit(node: TreeNode) -> int:
        if node.is_leaf:
            n = node.n_tp + node.n_fp
        else:
            n = visit(node.left) + visit(node.right)
        counts[id(node)] = n
        return n

    visit(root)
    return counts


def _shap_one_tree(root: TreeNode, row: np.ndarray, phi: np.ndarray) -> None:
    counts = _node_counts(root)

    def recurse(node: TreeNode, d: list, z: list, o: list, w: list, pz: float, po: float, pi: int):
        d, z, o, w = list(d), list(z), list(o), list(w)
        _extend(d, z, o, w, pz, po, pi)
        if node.is_leaf:
            value = node.leaf_fraction
            for i in range(1, len(d)):
                phi[d[i]] += _unwound_sum(z, o, w, i) * (o[i] - z[i]) * value
            return
        if row[node.feature] <= node.threshold:
            hot, cold = node.left, node.right
        else:
            hot, cold = node.right, node.left
        iz, io = 1.0, 1.0
        k = next((j for j in range(1, len(d)) if d[j] == node.feature), None)
        if k is not None:
            iz, io = z[k], o[k]
            _unwind(d, z, o, w, k)
        n_here = counts[id(node)]
        recurse(hot, d, z, o, w, iz * counts[id(hot)] / n_here, io, node.feature)
        recurse(cold, d, z, o, w, iz * counts[id(cold)] / n_here, 0.0, node.feature)

    # element 0 is a sentinel covering the empty path; feature -1 never matches
    recurse(root, [], [], [], [], 1.0, 1.0, -1)


def expected_value(root: TreeNode) -> float:
    """Count-weighted mean leaf value: the tree's output on the empty subset."""
    def walk(node: TreeNode) -> tuple[float, int]:
        if node.is_leaf:
            n = node.n_tp + node.n_fp
            return node.leaf_fraction * n, n
        ls, ln = walk(node.left)
        rs, rn = walk(node.right)
        return ls + rs, ln + rn

    total, n = walk(root)
    if n < 1:
        raise ValidationError("tree carries no training samples")
    return total / n


def tree_shap(forest: Forest, vector: FeatureVector | Sequence[float]) -> Attribution:
    """Exact Shapley attributions averaged over the forest's trees."""
    row = _check_vector(forest, vector)
    phi = np.zeros(forest.width)
    base = 0.0
    for tree in forest.trees:
        _shap_one_tree(tree, row, phi)
        base += expected_value(tree)
    n_trees = len(forest.trees)
    phi /= n_trees
    return Attribution(base_value=base / n_trees, phi=tuple(float(v) for v in phi))


def global_importance(
    forest: Forest, matrix: Sequence[FeatureVector] | np.ndarray
) -> list[tuple[str, float]]:
    """Mean |phi| per feature over all rows, sorted descending (ties by index)."""
    X = as_matrix(matrix)
    if X.shape[0] < 1:
        raise ValidationError("importance needs at least one row")
    if X.shape[1] != forest.width:
        raise ValidationError(f"matrix width {X.shape[1]} does not match forest width {forest.width}")
    acc = np.zeros(forest.width)
    for row in X:
        acc += np.abs(np.asarray(tree_shap(forest, row).phi))
    acc /= X.shape[0]
    order = sorted(range(forest.width), key=lambda j: (-acc[j], j))
    return [(forest.feature_names[j], float(acc[j])) for j in order]
