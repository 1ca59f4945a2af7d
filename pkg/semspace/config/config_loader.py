"""配置加载器模块

负责进程启动时的配置初始化工作：
1. 从 .env 文件与 SEMSPACE_* 环境变量加载运行选项到 RUNTIME
2. 读取 YAML 流水线配置文件并校验为 PipelineConfig
"""

import os
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv
from loguru import logger
from pydantic import ValidationError

from ..exceptions import AppError
from ..model import PipelineConfig
from .config_manager import RUNTIME, WORKDIR

# 环境变量 -> RUNTIME 字段
ENV_KEYS = {
    "SEMSPACE_SEED": "seed",
    "SEMSPACE_THREADS": "threads",
    "SEMSPACE_CACHE_DIR": "cache_dir",
    "SEMSPACE_LOG_LEVEL": "log_level",
    "SEMSPACE_PROGRESS": "progress",
    "SEMSPACE_ERROR_LOG": "error_log",
}


class ConfigLoader:
    """配置加载器

    按特定顺序初始化运行所需的配置：
    1. 运行选项：.env 文件与环境变量
    2. 命令行覆盖：仅覆盖显式给出的全局参数
    """

    @classmethod
    def create_and_load(cls, env_file: Path | None = None, overrides: dict[str, Any] | None = None) -> "ConfigLoader":
        """创建配置加载器实例并加载运行选项
        Args:
            env_file: 指定 .env 文件, 为空时按 python-dotenv 的规则向上查找
            overrides: 命令行给出的覆盖值, 值为 None 的项被忽略
        Returns:
            ConfigLoader: 已加载完成的实例
        """
        loader = cls()
        loader._load_env(env_file)
        loader._apply_overrides(overrides or {})
        return loader

    def _load_env(self, env_file: Path | None) -> None:
        """从 .env/环境变量读取运行选项（已存在的环境变量优先）"""
        if env_file is not None and not env_file.is_file():
            AppError.ConfigFileReadError.raise_(f"环境文件不存在 —— 路径:{env_file}")
        load_dotenv(dotenv_path=env_file, override=False)
        values = {field: os.environ[key] for key, field in ENV_KEYS.items() if os.environ.get(key)}
        self._apply_overrides(values)

    @staticmethod
    def _apply_overrides(values: dict[str, Any]) -> None:
        try:
            for field, value in values.items():
                if value is None:
                    continue
                if field == "error_log":
                    WORKDIR.error_log = value
                else:
                    setattr(RUNTIME, field, value)
        except ValidationError as e:
            AppError.InvalidConfiguration.raise_(f"运行选项无效 —— {e.errors()[0]['loc']}: {e.errors()[0]['msg']}")


def load_pipeline_config(path: Path) -> PipelineConfig:
    """读取并校验 YAML 流水线配置
    Args:
        path: 配置文件路径
    Returns:
        PipelineConfig: 校验后的配置
    Raises:
        AppError.ConfigFileReadError: 文件不存在或不是合法 YAML
        AppError.InvalidConfiguration: 字段校验失败
    """
    path = Path(path)
    if not path.is_file():
        AppError.ConfigFileReadError.raise_(f"配置文件不存在 —— 路径:{path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        AppError.ConfigFileReadError.raise_(f"配置文件 {path} 解析失败 —— {e}")
    if not isinstance(raw, dict):
        AppError.ConfigFileReadError.raise_(f"配置文件 {path} 顶层必须为映射")
    config = parse_pipeline_config(raw, base_dir=path.parent)
    logger.opt(colors=True).info("<g>Config</g>:读取配置 <c>{}</c> |<g>SUCCESS</g>", path)
    return config


def parse_pipeline_config(raw: dict[str, Any], base_dir: Path | None = None) -> PipelineConfig:
    """将字典校验为 PipelineConfig；data 段中的相对路径相对配置文件所在目录解析"""
    raw = dict(raw)
    if base_dir is not None and isinstance(raw.get("data"), dict):
        data = dict(raw["data"])
        for key, value in data.items():
            if key == "synthetic" or not isinstance(value, str):
                continue
            if not Path(value).is_absolute():
                data[key] = str(base_dir / value)
        raw["data"] = data
    try:
        return PipelineConfig.model_validate(raw)
    except AppError.Exception:
        raise
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        AppError.InvalidConfiguration.raise_(f"配置项 {location} 无效 —— {first['msg']}")
