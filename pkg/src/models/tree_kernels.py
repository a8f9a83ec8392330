"""
回归树的 numba 内核

树以扁平数组表示：feature（叶子为 -1）、threshold、left、right、value，节点按先序编号，
x[feature] <= threshold 走左子树。
"""

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True)
def _sorted_gain(xs, rs, total, lam, min_leaf):
    """按特征值排序后的各切分位置增益，非法位置为 -inf"""
    n = xs.shape[0]
    gains = np.full(n, -np.inf)
    parent = total * total / (n + lam)
    left = 0.0
    for k in range(1, n):
        left += rs[k - 1]
        if k < min_leaf or n - k < min_leaf:
            continue
        if not xs[k - 1] < xs[k]:
            continue
        right = total - left
        gains[k] = left * left / (k + lam) + right * right / (n - k + lam) - parent
    return gains


@njit(cache=True)
def _gather_sorted(X, r, members, f, shift, xs, rs):
    """把节点样本按第 f 个特征稳定排序，写入 xs 与 rs（rs 减去 shift）"""
    n = members.shape[0]
    raw = np.empty(n)
    for i in range(n):
        raw[i] = X[members[i], f]
    order = np.argsort(raw, kind="mergesort")
    for i in range(n):
        xs[i] = raw[order[i]]
        rs[i] = r[members[order[i]]] - shift


@njit(cache=True)
def _node_split(X, r, members, candidates, lam, min_leaf, tie_rel, min_gain_rel):
    """返回 (feature, threshold)，无合法切分时 feature 为 -1

    容差以节点内残差的中心化平方和为尺度；增益在容差内相等时取较小的特征下标，再取较小的阈值。
    lam = 0 时增益即 SSE 下降量，与平移无关，按中心化后的残差计算。
    """
    n = members.shape[0]
    total = 0.0
    for i in range(n):
        total += r[members[i]]
    mean = total / n
    scale = 0.0
    for i in range(n):
        d = r[members[i]] - mean
        scale += d * d
    shift = mean if lam == 0.0 else 0.0
    if shift != 0.0:
        total = 0.0
        for i in range(n):
            total += r[members[i]] - shift
    tol = tie_rel * scale
    xs = np.empty(n)
    rs = np.empty(n)

    n_cand = candidates.shape[0]
    feature_best = np.full(n_cand, -np.inf)
    for c in range(n_cand):
        f = candidates[c]
        _gather_sorted(X, r, members, f, shift, xs, rs)
        gains = _sorted_gain(xs, rs, total, lam, min_leaf)
        feature_best[c] = gains.max()

    best = feature_best.max()
    if not best > min_gain_rel * scale or not np.isfinite(best):
        return LEAF, 0.0

    for c in range(n_cand):
        if feature_best[c] < best - tol:
            continue
        f = candidates[c]
        _gather_sorted(X, r, members, f, shift, xs, rs)
        gains = _sorted_gain(xs, rs, total, lam, min_leaf)
        for k in range(1, n):
            if gains[k] >= best - tol:
                lo = xs[k - 1]
                hi = xs[k]
                threshold = (lo + hi) / 2.0
                if threshold >= hi:
                    threshold = lo
                return f, threshold
    return LEAF, 0.0


@njit(cache=True, nogil=True)
def build_tree(X, r, rows, max_depth, min_samples_split, min_samples_leaf, lam, candidates, max_features, keys,
               tie_rel, min_gain_rel):
    """迭代式自顶向下建树

    rows 为参与训练的样本下标（可重复，自助采样）；max_depth < 0 表示不限深度。
    max_features < len(candidates) 时，节点 i 使用 keys[i] 最小的 max_features 个候选特征。
    返回 (feature, threshold, left, right, value, n_nodes, depth)。
    """
    n = rows.shape[0]
    capacity = 2 * n + 1
    feature = np.full(capacity, LEAF, dtype=np.int64)
    threshold = np.zeros(capacity)
    left = np.full(capacity, LEAF, dtype=np.int64)
    right = np.full(capacity, LEAF, dtype=np.int64)
    value = np.zeros(capacity)

    order = rows.copy()
    buffer = np.empty(n, dtype=np.int64)
    stack_start = np.empty(capacity, dtype=np.int64)
    stack_end = np.empty(capacity, dtype=np.int64)
    stack_depth = np.empty(capacity, dtype=np.int64)
    stack_parent = np.empty(capacity, dtype=np.int64)
    stack_side = np.empty(capacity, dtype=np.int64)

    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    stack_parent[0] = -1
    stack_side[0] = 0
    top = 1
    n_nodes = 0
    depth_reached = 0

    while top > 0:
        top -= 1
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        node = n_nodes
        n_nodes += 1
        if stack_parent[top] >= 0:
            if stack_side[top] == 0:
                left[stack_parent[top]] = node
            else:
                right[stack_parent[top]] = node
        if depth > depth_reached:
            depth_reached = depth

        members = order[start:end]
        count = end - start
        total = 0.0
        for i in range(count):
            total += r[members[i]]
        value[node] = total / (count + lam)

        if count < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        if max_features < candidates.shape[0]:
            picked = np.sort(candidates[np.argsort(keys[node], kind="mergesort")[:max_features]])
        else:
            picked = candidates
        f, thr = _node_split(X, r, members, picked, lam, min_samples_leaf, tie_rel, min_gain_rel)
        if f == LEAF:
            continue

        # 稳定划分：左子树样本在前
        n_left = 0
        n_right = 0
        for i in range(count):
            if X[members[i], f] <= thr:
                order[start + n_left] = members[i]
                n_left += 1
            else:
                buffer[n_right] = members[i]
                n_right += 1
        for i in range(n_right):
            order[start + n_left + i] = buffer[i]

        feature[node] = f
        threshold[node] = thr
        # 右子树先入栈，左子树先出栈，保证先序编号
        stack_start[top] = start + n_left
        stack_end[top] = end
        stack_depth[top] = depth + 1
        stack_parent[top] = node
        stack_side[top] = 1
        top += 1
        stack_start[top] = start
        stack_end[top] = start + n_left
        stack_depth[top] = depth + 1
        stack_parent[top] = node
        stack_side[top] = 0
        top += 1

    return feature, threshold, left, right, value, n_nodes, depth_reached


@njit(cache=True)
def walk(x, feature, threshold, left, right, value, root):
    node = root
    while feature[node] != LEAF:
        if x[feature[node]] <= threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return value[node]


@njit(cache=True, nogil=True)
def predict_tree(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = walk(X[i], feature, threshold, left, right, value, 0)
    return out


@njit(cache=True)
def boosted_one(x, base, learning_rate, feature, threshold, left, right, value, roots):
    """base + Σ lr·tree(x)，按树的顺序累加"""
    s = base
    for t in range(roots.shape[0]):
        s += learning_rate * walk(x, feature, threshold, left, right, value, roots[t])
    return s


@njit(cache=True, nogil=True)
def boosted_batch(X, base, learning_rate, feature, threshold, left, right, value, roots):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = boosted_one(X[i], base, learning_rate, feature, threshold, left, right, value, roots)
    return out
