"""
单行预测时延基准

只计时模型预测（不含特征提取）：先对每行预测一次作为预热，再计时 reps·|X| 次单行调用。
严格单线程。
"""

import platform
import time

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.evaluation.predictor import TrainedPredictor
from src.exceptions import PreconditionError
from src.utils import logger

MIN_REPS = 100


class LatencyStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    host: str
    reps: int
    calls: int
    mean_ns: float
    p50_ns: float
    p99_ns: float


def host_tag() -> str:
    runtime = f"{platform.python_implementation()}-{platform.python_version()}"
    return f"{platform.node() or 'host'}/{platform.machine()}/{runtime}"


def bench_latency(p: TrainedPredictor, X, reps: int = MIN_REPS) -> LatencyStats:
    if reps < MIN_REPS:
        raise PreconditionError(f"bench_latency needs reps >= {MIN_REPS}, got {reps}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise PreconditionError("bench_latency needs at least one row")
    # 以 Python 列表传入，与调用方逐行预测的场景一致
    rows = X.tolist()

    for row in rows:
        p.predict_one(row)

    timings = np.empty(reps * len(rows), dtype=np.int64)
    clock = time.perf_counter_ns
    i = 0
    for _ in range(reps):
        for row in rows:
            start = clock()
            p.predict_one(row)
            timings[i] = clock() - start
            i += 1

    stats = LatencyStats(
        host=host_tag(),
        reps=reps,
        calls=int(timings.size),
        mean_ns=float(timings.mean()),
        p50_ns=float(np.percentile(timings, 50)),
        p99_ns=float(np.percentile(timings, 99)),
    )
    logger.info(f"{p.kind} prediction latency: mean {stats.mean_ns:.0f} ns, p50 {stats.p50_ns:.0f} ns")
    return stats
