"""配置管理模块

该模块提供应用程序的全局配置管理功能，包含所有运行时配置对象的统一访问接口。

导入的配置对象包括：
- RUNTIME: 进程级运行选项
- WORKDIR: 工作目录配置
- ConfigLoader / load_pipeline_config: .env 与 YAML 配置加载
"""

from .config_manager import RUNTIME, WORKDIR
from .config_loader import ConfigLoader, load_pipeline_config, parse_pipeline_config

__all__ = ["RUNTIME", "WORKDIR", "ConfigLoader", "load_pipeline_config", "parse_pipeline_config"]
