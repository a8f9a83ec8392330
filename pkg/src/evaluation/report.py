"""
三个探索空间（NIS / NCV / NCA）上的评估报告与散点数据导出
"""

from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from tabulate import tabulate

from src.dataset.records import Dataset
from src.dataset.split import SplitPlan
from src.evaluation.bench import LatencyStats, bench_latency
from src.evaluation.metrics import adjusted_r2, ape, mape_ci95, r2
from src.evaluation.predictor import TrainedPredictor
from src.exceptions import DataIOError, DegenerateError, EmptySpaceError, PreconditionError
from src.features.vector import N_FEATURES
from src.utils import logger

SPACES = ("NIS", "NCV", "NCA")
NOT_MEASURED = "not-measured"
# evaluate 内置基准最多使用的测试行数
BENCH_ROWS = 100


class SpaceMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: str
    count: int
    mape_percent: float
    mape_ci95: float | None
    adjusted_r2: float | None
    r2: float | None


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    device: str
    spaces: tuple[SpaceMetrics, ...]
    training_time_s: float | None = None
    tuning_time_s: float | None = None
    latency: LatencyStats | None = None

    def space(self, name: str) -> SpaceMetrics:
        for metrics in self.spaces:
            if metrics.space == name:
                return metrics
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        """每个空间一行，未测量的字段写为 not-measured"""

        def cell(value):
            return NOT_MEASURED if value is None else value

        latency = self.latency
        rows = [
            {
                "model": self.kind,
                "device": self.device,
                "space": m.space,
                "count": m.count,
                "mape_percent": m.mape_percent,
                "mape_ci95": cell(m.mape_ci95),
                "adjusted_r2": cell(m.adjusted_r2),
                "r2": cell(m.r2),
                "training_time_s": cell(self.training_time_s),
                "tuning_time_s": cell(self.tuning_time_s),
                "latency_host": cell(latency and latency.host),
                "latency_mean_ns": cell(latency and latency.mean_ns),
                "latency_p50_ns": cell(latency and latency.p50_ns),
                "latency_p99_ns": cell(latency and latency.p99_ns),
            }
            for m in self.spaces
        ]
        return pd.DataFrame(rows)

    def render(self) -> str:
        frame = self.to_frame()[["space", "count", "mape_percent", "mape_ci95", "adjusted_r2"]]
        table = tabulate(frame.values.tolist(), headers=list(frame.columns), floatfmt=".4f", tablefmt="github")
        title = f"{self.kind} on {self.device}"
        if self.latency is not None:
            title += f" | prediction latency mean {self.latency.mean_ns:.0f} ns ({self.latency.host})"
        return f"{title}\n{table}"


def _space_indices(plan: SplitPlan) -> dict[str, tuple[int, ...]]:
    spaces = plan.spaces()
    for name in SPACES:
        if not spaces[name]:
            raise EmptySpaceError(f"Test space {name} has no records", space=name)
    return spaces


def _check_plan(ds: Dataset, plan: SplitPlan):
    if plan.dataset_fingerprint and plan.dataset_fingerprint != ds.fingerprint():
        raise PreconditionError("Split plan was not derived from this dataset")
    top = max((*plan.train, *plan.test), default=-1)
    if top >= len(ds):
        raise PreconditionError(f"Split plan references row {top} but the dataset has {len(ds)} records")


def _feature_count(p: TrainedPredictor) -> int:
    selected = getattr(p.model, "selected_features", None)
    return len(selected) if selected is not None else N_FEATURES


def evaluate(p: TrainedPredictor, ds: Dataset, plan: SplitPlan, bench_reps: int | None = None) -> EvalReport:
    """只在测试行上评估；bench_reps 给定时附带预测时延基准"""
    _check_plan(ds, plan)
    spaces = _space_indices(plan)
    n_features = _feature_count(p)

    metrics = []
    for name in SPACES:
        indices = list(spaces[name])
        y = ds.targets(indices)
        y_hat = p.predict(ds.feature_matrix(indices))
        apes = ape(y, y_hat)
        half_width = mape_ci95(apes)[1] if apes.size >= 2 else None
        try:
            adj, plain = adjusted_r2(y, y_hat, n_features), r2(y, y_hat)
        except DegenerateError:
            adj = plain = None
        metrics.append(
            SpaceMetrics(
                space=name,
                count=len(indices),
                mape_percent=float(apes.mean()),
                mape_ci95=half_width,
                adjusted_r2=adj,
                r2=plain,
            )
        )
        logger.info(f"{p.kind} {name}: MAPE {apes.mean():.2f}% over {len(indices)} records")

    latency = None
    if bench_reps:
        latency = bench_latency(p, ds.feature_matrix(list(plan.test[:BENCH_ROWS])), bench_reps)

    return EvalReport(
        kind=p.kind,
        device=p.metadata.device,
        spaces=tuple(metrics),
        training_time_s=p.metadata.training_time_s,
        tuning_time_s=p.metadata.tuning_time_s,
        latency=latency,
    )


def scatter_frame(p: TrainedPredictor, ds: Dataset, plan: SplitPlan) -> pd.DataFrame:
    _check_plan(ds, plan)
    spaces = _space_indices(plan)
    frames = []
    for name in SPACES:
        indices = list(spaces[name])
        records = [ds.records[i] for i in indices]
        frames.append(
            pd.DataFrame(
                {
                    "space": name,
                    "model_name": [r.model_name for r in records],
                    "variant": [r.variant for r in records],
                    "input_size": [r.input_size for r in records],
                    "measured_ms": ds.targets(indices),
                    "predicted_ms": np.asarray(p.predict(ds.feature_matrix(indices)), dtype=np.float64),
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def export_scatter(p: TrainedPredictor, ds: Dataset, plan: SplitPlan, path: str | Path) -> int:
    """写出预测值-实测值散点数据，返回行数"""
    frame = scatter_frame(p, ds, plan)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise DataIOError(f"Cannot write scatter CSV: {e}", path=str(path)) from e
    return len(frame)
