"""
CART 回归树

切分准则为最大化 GL²/(nL+λ) + GR²/(nR+λ) - G²/(n+λ)，λ = 0 时等价于 SSE 下降量。
候选阈值取相邻不同取值的中点，叶子输出 Σr/(n+λ)。
"""

from collections.abc import Sequence
from typing import Any

import numpy as np

from src.exceptions import DimensionError, PreconditionError
from src.models import tree_kernels
from src.models.base import array_payload

TIE_REL = 1e-10
MIN_GAIN_REL = 1e-10


class RegressionTree:
    """先序编号的扁平节点表，feature == -1 的节点为叶子"""

    def __init__(self, feature, threshold, left, right, value, depth: int, n_features: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.depth = int(depth)
        self.n_features = int(n_features)
        if not np.all(np.isfinite(self.value[self.feature == tree_kernels.LEAF])):
            raise PreconditionError("Leaf values must be finite")
        # 参考解释器用的 Python 列表
        self._nodes = (
            self.feature.tolist(),
            self.threshold.tolist(),
            self.left.tolist(),
            self.right.tolist(),
            self.value.tolist(),
        )

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_internal(self) -> int:
        return int(np.count_nonzero(self.feature != tree_kernels.LEAF))

    def split_counts(self) -> np.ndarray:
        used = self.feature[self.feature != tree_kernels.LEAF]
        return np.bincount(used, minlength=self.n_features)

    def predict_one(self, x: Sequence[float]) -> float:
        feature, threshold, left, right, value = self._nodes
        node = 0
        while feature[node] != -1:
            node = left[node] if x[feature[node]] <= threshold[node] else right[node]
        return value[node]

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != self.n_features:
            raise DimensionError(f"Tree expects {self.n_features} features, got {X.shape[1]}")
        return tree_kernels.predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    def to_payload(self) -> dict[str, Any]:
        return {
            "feature": array_payload(self.feature),
            "threshold": array_payload(self.threshold),
            "left": array_payload(self.left),
            "right": array_payload(self.right),
            "value": array_payload(self.value),
            "depth": self.depth,
            "n_features": self.n_features,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "RegressionTree":
        return cls(
            payload["feature"],
            payload["threshold"],
            payload["left"],
            payload["right"],
            payload["value"],
            payload["depth"],
            payload["n_features"],
        )

    @classmethod
    def constant(cls, value: float, n_features: int) -> "RegressionTree":
        return cls([tree_kernels.LEAF], [0.0], [tree_kernels.LEAF], [tree_kernels.LEAF], [value], 0, n_features)


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    feature_subset: Sequence[int] | None = None,
    lambda_reg: float = 0.0,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    rows: np.ndarray | None = None,
) -> RegressionTree:
    """贪心自顶向下建树

    Args:
        max_depth: None 表示不限深度，0 得到单叶子树
        feature_subset: 允许使用的特征下标，缺省为全部
        max_features: 每个节点从 feature_subset 中随机抽取的特征数，需配合 rng
        rows: 参与训练的样本下标（可重复），缺省为全部样本
    """
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64).ravel())
    if X.shape[0] != y.shape[0]:
        raise DimensionError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    rows = np.arange(X.shape[0], dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    if rows.shape[0] < 1:
        raise PreconditionError("fit_tree needs at least one sample")
    if min_samples_leaf < 1 or min_samples_split < 2:
        raise PreconditionError("min_samples_leaf must be >= 1 and min_samples_split >= 2")
    if lambda_reg < 0:
        raise PreconditionError(f"lambda_reg must be >= 0, got {lambda_reg}")

    p = X.shape[1]
    candidates = np.array(sorted(set(range(p) if feature_subset is None else feature_subset)), dtype=np.int64)
    if candidates.size == 0 or candidates[0] < 0 or candidates[-1] >= p:
        raise DimensionError(f"feature_subset must be a non-empty subset of 0..{p - 1}")

    n_cand = candidates.shape[0]
    if max_features is None or max_features >= n_cand:
        max_features = n_cand
        keys = np.zeros((1, n_cand))
    else:
        if max_features < 1:
            raise PreconditionError(f"max_features must be >= 1, got {max_features}")
        if rng is None:
            raise PreconditionError("max_features below the candidate count needs a random generator")
        # 每个可能的节点预先抽一行随机键，节点内取键最小的 max_features 个特征
        keys = rng.random((2 * rows.shape[0] + 1, n_cand))

    feature, threshold, left, right, value, n_nodes, depth = tree_kernels.build_tree(
        X,
        y,
        rows,
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        int(min_samples_leaf),
        float(lambda_reg),
        candidates,
        int(max_features),
        keys,
        TIE_REL,
        MIN_GAIN_REL,
    )
    return RegressionTree(
        feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes], depth, p
    )
