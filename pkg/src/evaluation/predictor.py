"""
训练好的预测器及其容器格式

容器文件布局：
    LATPROPH\\n
    {"format_version": 1, "kind": "gbt", "payload_sha256": "...", "payload_bytes": 1234}\\n
    <UTF-8 JSON payload>

float 以 repr 形式写入 JSON，读回后预测逐位一致。
"""

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.dataset.standardize import Standardizer
from src.exceptions import ChecksumError, ContainerError, DataIOError, InvariantError, VersionError
from src.features.vector import FeatureVector
from src.models import PredictorFactory, Regressor
from src.utils import hashstr, logger

MAGIC = b"LATPROPH\n"
FORMAT_VERSION = 1


class PredictorMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    device: str = "unknown"
    train_fingerprint: str = ""
    created_at: str = ""
    version: str = ""
    params: dict[str, Any] = {}
    # None 表示未测量（固定种子运行时不写入墙钟时间）
    training_time_s: float | None = None
    tuning_time_s: float | None = None


class TrainedPredictor:
    """模型 + 输入预处理 + 元数据，predict 接受原始特征，输出毫秒"""

    def __init__(
        self,
        kind: str,
        model: Regressor,
        metadata: PredictorMetadata,
        standardizer: Standardizer | None = None,
        transform: str = "raw",
    ):
        if model.kind != kind:
            raise InvariantError(f"Predictor kind '{kind}' does not match model kind '{model.kind}'")
        if getattr(model, "requires_standardized", False) and standardizer is None:
            raise InvariantError(f"A {kind} predictor needs a standardizer")
        self.kind = kind
        self.model = model
        self.metadata = metadata
        self.standardizer = standardizer
        self.transform = transform
        self._raw_rows = transform == "raw" and standardizer is None

    @property
    def log_target(self) -> bool:
        return self.model.log_target

    def prepare(self, X) -> np.ndarray:
        """原始特征 -> 模型输入"""
        X = np.asarray(X, dtype=np.float64)
        if self.transform == "log1p":
            X = np.log1p(X)
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return X

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.model.predict(self.prepare(X))

    def predict_one(self, x: Sequence[float]) -> float:
        if self._raw_rows:
            return self.model.predict_one(x)
        return self.model.predict_one(self.prepare(x))

    def predict_features(self, fv: FeatureVector) -> float:
        return self.predict_one(fv.as_tuple())

    def to_payload(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "transform": self.transform,
            "standardizer": self.standardizer.model_dump(mode="json") if self.standardizer else None,
            "metadata": self.metadata.model_dump(mode="json"),
            "model": self.model.to_payload(),
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "TrainedPredictor":
        standardizer = payload.get("standardizer")
        return cls(
            payload["kind"],
            PredictorFactory.from_payload(payload["kind"], payload["model"]),
            PredictorMetadata.model_validate(payload["metadata"]),
            Standardizer.model_validate(standardizer) if standardizer else None,
            payload.get("transform", "raw"),
        )


def save_predictor(p: TrainedPredictor, path: str | Path) -> Path:
    path = Path(path)
    body = json.dumps(p.to_payload(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = {
        "format_version": FORMAT_VERSION,
        "kind": p.kind,
        "payload_sha256": hashstr(body),
        "payload_bytes": len(body),
    }
    blob = MAGIC + json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + body
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    except OSError as e:
        raise DataIOError(f"Cannot write predictor: {e}", path=str(path)) from e
    logger.info(f"Saved {p.kind} predictor to {path} ({len(blob)} bytes)")
    return path


def load_predictor(path: str | Path) -> TrainedPredictor:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataIOError(f"Cannot read predictor: {e}", path=str(path)) from e

    if len(blob) < len(MAGIC) and MAGIC.startswith(blob):
        raise ChecksumError("Predictor container is truncated inside the magic bytes", path=str(path))
    if not blob.startswith(MAGIC):
        raise ContainerError("Not a latproph predictor container", path=str(path))
    header_line, sep, body = blob[len(MAGIC) :].partition(b"\n")
    if not sep:
        raise ChecksumError("Predictor container is truncated inside the header", path=str(path))
    try:
        header = json.loads(header_line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise ContainerError("Predictor container header is not valid JSON", path=str(path)) from None

    found = header.get("format_version")
    if not isinstance(found, int):
        raise ContainerError("Predictor container header has no format_version", path=str(path))
    if found > FORMAT_VERSION:
        raise VersionError(found=found, supported=FORMAT_VERSION)
    if len(body) != header.get("payload_bytes") or hashstr(body) != header.get("payload_sha256"):
        raise ChecksumError("Predictor payload does not match its checksum", path=str(path))

    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise ContainerError("Predictor payload is not valid JSON", path=str(path)) from None
    if payload.get("kind") != header.get("kind"):
        raise ContainerError("Header kind and payload kind disagree", path=str(path))
    return TrainedPredictor.from_payload(payload)
