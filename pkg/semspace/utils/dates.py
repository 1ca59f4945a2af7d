# -*- coding: utf-8 -*-
"""
日期时间工具模块
提供与日期和时间相关的工具函数，用于生成时间戳与统计流水线各阶段耗时
"""
import time
from contextlib import contextmanager
from datetime import datetime
from typing import Iterator


def get_iso8601_timestamp() -> str:
    """获取 ISO 8601 格式的当前时间戳（精确到毫秒）
    Returns:
        str: ISO 8601 格式的时间戳字符串，格式为 YYYY-MM-DDTHH:MM:SS.sss
    """
    return datetime.now().isoformat(timespec='milliseconds')


class StageTimer:
    """按阶段累计墙钟耗时（秒）"""

    def __init__(self) -> None:
        self.durations: dict[str, float] = {}

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.durations[stage] = self.durations.get(stage, 0.0) + time.perf_counter() - start

    @property
    def total(self) -> float:
        return sum(self.durations.values())
