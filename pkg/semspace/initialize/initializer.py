"""初始化协调器模块
命令行进程启动时的初始化：加载 .env/环境变量中的运行选项、应用命令行全局参数覆盖，并配置 loguru 输出。
库代码从不配置日志输出，只有这里会。
"""
import sys
from pathlib import Path
from typing import Any

from loguru import logger

from ..config import RUNTIME, ConfigLoader

LOG_FORMAT = ("<g>{time:MM-DD HH:mm:ss}</g> [<lvl>{level}</lvl>] "
              "<c><u>{name}</u></c> | {message}")


class Initializer:
    """进程初始化协调器
    Attributes:
        _initialized: 标记初始化是否成功完成
    """

    def __init__(self) -> None:
        self._initialized = False

    @classmethod
    def create_and_run(cls, env_file: Path | None = None, overrides: dict[str, Any] | None = None) -> "Initializer":
        """工厂方法：创建并运行初始化
        Args:
            env_file: 指定的 .env 文件
            overrides: 命令行全局参数（None 表示未指定）
        Returns:
            Initializer: 初始化完成的实例
        """
        instance = cls()
        instance.initialize(env_file, overrides)
        return instance

    def initialize(self, env_file: Path | None, overrides: dict[str, Any] | None) -> None:
        """1. 加载运行选项  2. 配置日志输出"""
        ConfigLoader.create_and_load(env_file, overrides)
        self.setup_logging(RUNTIME.log_level)
        logger.opt(colors=True).debug(
            "<g>Init</g>:seed=<c>{}</c> threads=<c>{}</c> cache=<c>{}</c> |<g>SUCCESS</g>",
            RUNTIME.seed, RUNTIME.threads, RUNTIME.cache_dir)
        self._initialized = True

    @staticmethod
    def setup_logging(level: str) -> None:
        """替换默认输出为带颜色标签的 stderr 输出"""
        logger.remove()
        logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT, colorize=None, diagnose=False)

    @property
    def is_ready(self) -> bool:
        return self._initialized
