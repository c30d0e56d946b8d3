"""Regression-tree machinery shared by the forest and boosting forecasters.

Trees greedily minimize within-node squared error. Split thresholds are
midpoints between consecutive sorted unique feature values; among equal-gain
splits the lowest feature index wins, then the lowest threshold, so growth is
fully deterministic given the rows and candidate features. Leaf values are
the mean of the leaf's training targets.

Growth and prediction use explicit worklists rather than recursion so deep
trees on large windows cannot hit the interpreter's recursion limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TreeNode:
    """One node of a binary regression tree.

    Internal nodes carry (split_feature, split_threshold) and both children;
    leaves carry leaf_value. n_samples counts the training rows that reached
    the node.
    """

    n_samples: int
    leaf_value: float | None = None
    split_feature: int | None = None
    split_threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf_value is not None


class FlatTree:
    """Array form of a tree for vectorized prediction."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "depth")

    def __init__(self, root: TreeNode):
        feature, threshold, left, right, value = [], [], [], [], []
        # Preorder; children indices patched as nodes are emitted.
        stack = [(root, -1, False, 0)]
        depth = 0
        while stack:
            node, parent, is_right, d = stack.pop()
            idx = len(feature)
            if parent >= 0:
                (right if is_right else left)[parent] = idx
            depth = max(depth, d)
            if node.is_leaf:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(node.leaf_value)
            else:
                feature.append(node.split_feature)
                threshold.append(node.split_threshold)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                stack.append((node.right, idx, True, d + 1))
                stack.append((node.left, idx, False, d + 1))
        self.feature = np.array(feature, dtype=np.int32)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.int32)
        self.right = np.array(right, dtype=np.int32)
        self.value = np.array(value)
        self.depth = depth

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        idx = np.zeros(n, dtype=np.int32)
        rows = np.arange(n)
        for _ in range(self.depth):
            feat = self.feature[idx]
            at_leaf = feat < 0
            if at_leaf.all():
                break
            xv = X[rows, np.where(at_leaf, 0, feat)]
            go_right = ~at_leaf & (xv > self.threshold[idx])
            nxt = np.where(go_right, self.right[idx], self.left[idx])
            idx = np.where(at_leaf, idx, nxt)
        return self.value[idx]


def _best_split(X: np.ndarray, y_node: np.ndarray, row_idx: np.ndarray,
                feats: np.ndarray, total: float, min_leaf: int):
    """Best (gain, feature, threshold, left_mask) over the candidate features.

    Returns None when no candidate strictly reduces squared error. ``feats``
    must be sorted ascending so exact gain ties resolve to the lowest feature
    index; within a feature, ties resolve to the lowest threshold.
    """
    n = row_idx.size
    k = np.arange(min_leaf, n - min_leaf + 1)
    if k.size == 0:
        return None
    sub = X[np.ix_(row_idx, feats)]
    order = np.argsort(sub, axis=0)
    xs = np.take_along_axis(sub, order, axis=0)
    csum = np.cumsum(y_node[order], axis=0)
    left_sum = csum[k - 1, :]
    right_sum = total - left_sum
    # SSE reduction up to the constant total^2/n, subtracted once at the end.
    gain = left_sum ** 2 / k[:, None] + right_sum ** 2 / (n - k)[:, None]
    gain[xs[k, :] <= xs[k - 1, :]] = -np.inf
    per_feature = gain.max(axis=0)
    f_local = int(np.argmax(per_feature))      # ties: lowest feature index
    if not np.isfinite(per_feature[f_local]):
        return None
    pos = int(np.argmax(gain[:, f_local]))     # ties: lowest threshold
    best_gain = per_feature[f_local] - total * total / n
    k_best = k[pos]
    v1 = xs[k_best - 1, f_local]
    v2 = xs[k_best, f_local]
    threshold = 0.5 * (v1 + v2)
    if threshold >= v2:  # midpoint rounded up to v2: fall back to the left value
        threshold = v1
    left_mask = sub[:, f_local] <= threshold
    return float(best_gain), int(feats[f_local]), float(threshold), left_mask


def grow_tree(X: np.ndarray, y: np.ndarray, row_idx: np.ndarray,
              rng: np.random.Generator | None = None,
              mtry: int | None = None,
              min_leaf: int = 1,
              max_depth: int | None = None,
              min_gain: float = 0.0,
              feature_pool: np.ndarray | None = None) -> TreeNode:
    """Grow one SSE regression tree on the rows in ``row_idx``.

    mtry=None considers every feature in the pool at each split; otherwise
    mtry features are drawn per split from the pool without replacement
    (requires rng). A node becomes a leaf when it is smaller than
    2 * min_leaf, reaches max_depth, or no split has gain > min_gain.
    """
    if feature_pool is None:
        feature_pool = np.arange(X.shape[1])
    if mtry is not None and rng is None:
        raise ValueError("per-split feature sampling requires an rng")

    root = TreeNode(n_samples=row_idx.size)
    worklist: list[tuple[TreeNode, np.ndarray, int]] = [(root, row_idx, 0)]
    while worklist:
        node, idx, depth = worklist.pop()
        y_node = y[idx]
        n = idx.size
        total = float(y_node.sum())
        pure = float(y_node.min()) == float(y_node.max())
        if pure or n < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            node.leaf_value = float(y_node[0]) if pure else total / n
            continue
        if mtry is None or mtry >= feature_pool.size:
            feats = feature_pool
        else:
            feats = np.sort(rng.choice(feature_pool, size=mtry, replace=False))
        split = _best_split(X, y_node, idx, feats, total, min_leaf)
        if split is None or split[0] <= min_gain:
            node.leaf_value = total / n
            continue
        _, feat, threshold, left_mask = split
        node.split_feature = feat
        node.split_threshold = threshold
        node.left = TreeNode(n_samples=int(left_mask.sum()))
        node.right = TreeNode(n_samples=int(n - left_mask.sum()))
        # Push right first so the left child is grown first (stable rng order).
        worklist.append((node.right, idx[~left_mask], depth + 1))
        worklist.append((node.left, idx[left_mask], depth + 1))
    return root


def scale_leaf_values(root: TreeNode, factor: float) -> None:
    """Multiply every leaf value in place (boosting shrinkage)."""
    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            node.leaf_value *= factor
        else:
            stack.append(node.left)
            stack.append(node.right)


def dump_tree(root: TreeNode, feature_names) -> str:
    """Indented text rendering of a tree, one node per line."""
    lines: list[str] = []
    stack: list[tuple[TreeNode, int, str]] = [(root, 0, "root")]
    while stack:
        node, depth, tag = stack.pop()
        pad = "  " * depth
        if node.is_leaf:
            lines.append(f"{pad}{tag}: leaf value={node.leaf_value:.6g} n={node.n_samples}")
        else:
            name = feature_names[node.split_feature]
            lines.append(
                f"{pad}{tag}: split {name} <= {node.split_threshold:.6g} n={node.n_samples}"
            )
            stack.append((node.right, depth + 1, "right"))
            stack.append((node.left, depth + 1, "left"))
    return "\n".join(lines)
