"""
测量记录与数据集

CSV 格式：必须带表头，列名固定（顺序不限），UTF-8，LF 换行。
行号从 1 开始计数，不含表头。
"""

import re
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.exceptions import DataIOError, InvariantError, SchemaError
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.utils import hashstr, logger

ID_COLUMNS = ("model_name", "family", "variant", "input_size", "device", "replicates", "latency_ms", "latency_std_ms")
MEASUREMENT_COLUMNS: tuple[str, ...] = (*ID_COLUMNS, *FEATURE_NAMES)
INT_COLUMNS = frozenset({"input_size", "replicates"})


class MeasurementRecord(BaseModel):
    """一次 (模型, 输入尺寸, 设备) 测量"""

    model_config = ConfigDict(frozen=True)

    model_name: str = Field(min_length=1)
    family: str = Field(min_length=1)
    variant: str
    input_size: int = Field(ge=1)
    device: str
    features: FeatureVector
    latency_ms: float = Field(gt=0, allow_inf_nan=False)
    latency_std_ms: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    replicates: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _size_matches_features(self):
        if self.features.input_image_size != self.input_size:
            raise ValueError(
                f"input_image_size {self.features.input_image_size} differs from input_size {self.input_size}"
            )
        return self

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.model_name, self.variant, self.input_size)

    def to_row(self) -> dict[str, Any]:
        row = {
            "model_name": self.model_name,
            "family": self.family,
            "variant": self.variant,
            "input_size": self.input_size,
            "device": self.device,
            "replicates": self.replicates,
            "latency_ms": self.latency_ms,
            "latency_std_ms": self.latency_std_ms,
        }
        row.update(zip(FEATURE_NAMES, self.features.as_tuple()))
        return row


class Dataset(BaseModel):
    """同一设备上的测量集合，加载后不可变"""

    model_config = ConfigDict(frozen=True)

    device: str
    records: tuple[MeasurementRecord, ...] = ()

    @model_validator(mode="after")
    def _check_invariants(self):
        seen: set[tuple] = set()
        for row, record in enumerate(self.records, start=1):
            if record.device != self.device:
                raise InvariantError(
                    f"Record device '{record.device}' differs from dataset device '{self.device}'", row=row
                )
            if record.key in seen:
                raise InvariantError(f"Duplicate record key {record.key}", row=row)
            seen.add(record.key)
        return self

    def __len__(self) -> int:
        return len(self.records)

    def feature_row(self, index: int) -> np.ndarray:
        return self.records[index].features.as_array()

    def feature_matrix(self, indices=None) -> np.ndarray:
        indices = range(len(self.records)) if indices is None else indices
        rows = [self.feature_row(i) for i in indices]
        if not rows:
            return np.empty((0, len(FEATURE_NAMES)), dtype=np.float64)
        return np.vstack(rows)

    def targets(self, indices=None) -> np.ndarray:
        indices = range(len(self.records)) if indices is None else indices
        return np.array([self.records[i].latency_ms for i in indices], dtype=np.float64)

    def subset(self, indices) -> "Dataset":
        return Dataset(device=self.device, records=tuple(self.records[i] for i in indices))

    def families(self) -> list[str]:
        return sorted({record.family for record in self.records})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.to_row() for record in self.records], columns=list(MEASUREMENT_COLUMNS))

    def fingerprint(self) -> str:
        """内容指纹：记录顺序与数值都参与计算"""
        return hashstr(self.to_frame().to_csv(index=False, lineterminator="\n"))


def _parse_row(raw: dict[str, str], row: int) -> MeasurementRecord:
    values: dict[str, Any] = {}
    for column in MEASUREMENT_COLUMNS:
        text = raw[column].strip()
        if column in ("model_name", "family", "variant", "device"):
            values[column] = text
            continue
        try:
            values[column] = int(text) if column in INT_COLUMNS else float(text)
        except ValueError:
            raise SchemaError(f"Column '{column}' holds non-numeric value '{text}'", row=row) from None

    try:
        features = FeatureVector(**{name: values.pop(name) for name in FEATURE_NAMES})
        return MeasurementRecord(features=features, **values)
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(map(str, err["loc"])) or "record"
        raise InvariantError(f"{field}: {err['msg']}", row=row) from None


def load_measurements(path: str | Path) -> Dataset:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise DataIOError(f"Measurement file not found: {path}", path=str(path)) from e
    except pd.errors.EmptyDataError:
        raise SchemaError("Measurement file is empty (header required)", path=str(path)) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        row = int(match.group(1)) - 1 if match else None
        raise SchemaError(f"Wrong number of fields: {e}", row=row, path=str(path)) from None
    except OSError as e:
        raise DataIOError(f"Cannot read measurement file: {e}", path=str(path)) from e

    missing = [c for c in MEASUREMENT_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"Missing columns: {', '.join(missing)}", path=str(path))
    extra = [c for c in frame.columns if c not in MEASUREMENT_COLUMNS]
    if extra:
        raise SchemaError(f"Unexpected columns: {', '.join(map(str, extra))}", path=str(path))

    # 字段不足的行会被补成 NaN
    short = frame.isna().any(axis=1)
    if short.any():
        row = int(np.flatnonzero(short.to_numpy())[0]) + 1
        raise SchemaError("Wrong number of fields", row=row, path=str(path))

    records = []
    seen: dict[tuple, int] = {}
    device = None
    for row, raw in enumerate(frame.to_dict(orient="records"), start=1):
        record = _parse_row(raw, row)
        if record.key in seen:
            raise InvariantError(f"Duplicate record key {record.key} (first seen at row {seen[record.key]})", row=row)
        seen[record.key] = row
        if device is None:
            device = record.device
        elif record.device != device:
            raise InvariantError(f"Mixed devices '{device}' and '{record.device}'", row=row)
        records.append(record)

    logger.debug(f"Loaded {len(records)} measurements from {path}")
    return Dataset(device=device or "", records=tuple(records))


def save_measurements(ds: Dataset, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ds.to_frame().to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"Cannot write measurement file: {e}", path=str(path)) from e
    return path
