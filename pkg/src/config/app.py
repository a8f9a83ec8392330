"""
应用配置模块

默认值定义在代码中，用户在 ${SAVE_DIR}/config/base.toml 中覆盖，
保存时只写出与默认值不同的字段。命令行参数优先于这里的配置。
"""

import os
from pathlib import Path

import tomli
import tomli_w
from pydantic import BaseModel, Field

from src.utils.logging_config import logger


class Config(BaseModel):
    """实验流程的默认参数"""

    save_dir: str = Field(default="saves", description="保存目录（日志、用户配置）")

    # ============================================================
    # 实验流程
    # ============================================================
    seed: int = Field(default=42, description="默认随机种子")
    train_ratio: float = Field(default=0.7, gt=0, lt=1, description="训练集比例（70% 训练 / 30% 测试）")
    k_folds: int = Field(default=5, ge=2, description="网格搜索的 K 折数")
    jobs: int = Field(default=1, ge=1, description="网格搜索并行度")
    valid_fraction: float = Field(default=0.1, gt=0, lt=1, description="早停使用的内部验证集比例")

    # ============================================================
    # 模型与评估
    # ============================================================
    stop_delta: float = Field(default=0.0005, ge=0, description="逐步回归的调整 R² 最小增益")
    bench_reps: int = Field(default=100, ge=100, description="预测时延基准测试的重复次数")

    _config_file: Path | None = None

    model_config = {"validate_assignment": True}

    def __init__(self, **data):
        super().__init__(**data)
        self.save_dir = os.getenv("SAVE_DIR") or self.save_dir
        self._config_file = Path(self.save_dir) / "config" / "base.toml"
        self._load_user_config()

    @property
    def config_file(self) -> Path | None:
        return self._config_file

    def _load_user_config(self):
        """从 TOML 文件加载用户配置，非法值保留默认并记录错误"""
        if not self._config_file.exists():
            logger.debug(f"Config file not found, using defaults: {self._config_file}")
            return

        logger.info(f"Loading config from {self._config_file}")
        try:
            with open(self._config_file, "rb") as f:
                user_config = tomli.load(f)
        except (OSError, tomli.TOMLDecodeError) as e:
            logger.error(f"Failed to load config from {self._config_file}: {e}")
            return

        for key, value in user_config.items():
            if key not in type(self).model_fields or key == "save_dir":
                logger.warning(f"Unknown config key: {key}")
                continue
            try:
                setattr(self, key, value)
            except ValueError as e:
                logger.error(f"Invalid value for '{key}' in {self._config_file}: {e}")

    def save(self) -> Path:
        """保存配置到 TOML 文件（仅保存与默认值不同的字段）"""
        defaults = Config.model_construct()
        user_modified = {
            name: getattr(self, name)
            for name in type(self).model_fields
            if name != "save_dir" and getattr(self, name) != getattr(defaults, name)
        }
        self._config_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self._config_file, "wb") as f:
            tomli_w.dump(user_modified, f)
        logger.info(f"Config saved to {self._config_file}")
        return self._config_file


# 全局配置实例
config = Config()
