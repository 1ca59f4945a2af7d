from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from ..exceptions import AppError


def convert_to_str(v: Any) -> str | None:
    """将任意类型转换为字符串，若为空则返回None
    Args:
        v: 任意类型的值
    Returns:
        转换后的字符串或None
    """
    if v is None:
        return None
    try:
        str_value = str(v).strip()
        return str_value if str_value else None
    except Exception:
        return None


def convert_to_jsonable(value: Any) -> Any:
    """将配置/报告中的对象转换为可写入 YAML 或 JSON 的基础类型
    Args:
        value: 任意嵌套的 dict/list/tuple/numpy 标量/Path/Enum
    Returns:
        只包含 dict、list、str、int、float、bool、None 的结构
    """
    if isinstance(value, dict):
        return {str(k): convert_to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [convert_to_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def parse_float_tokens(tokens: list[str], context: str) -> np.ndarray:
    """把一组十进制字符串解析为64位浮点数组，失败时指出上下文（文件与行号）"""
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        AppError.MatrixFormatError.raise_(f"{context} 数值解析失败 —— {e}")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        AppError.NonFiniteValue.raise_(f"{context} 第 {int(bad[0])} 列的值为 {tokens[bad[0]]}")
    return values
