"""产物旁注（sidecar）模块

每个写出的产物旁边都有一个同名的 `.yaml` 文件，记录产物类型、创建时间、
产物自身的内容哈希、输入文件/数组的内容哈希以及生成它的配置。
"""
from pathlib import Path
from typing import Any

import yaml

from ..exceptions import AppError
from ..utils import convert_to_jsonable, get_iso8601_timestamp, hash_file

SIDECAR_SUFFIX = ".yaml"


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


def write_sidecar(path: Path, artifact: str, payload: dict[str, Any] | None = None,
                  inputs: dict[str, str] | None = None, config: dict[str, Any] | None = None) -> Path:
    """为产物写出旁注
    Args:
        path: 产物文件路径（必须已写出）
        artifact: 产物类型，如 gram、kernel_block、projector、scores
        payload: 读取产物所需的元数据（kernel_id、列标识、词表等）
        inputs: 输入名称 -> 内容哈希
        config: 生成产物所用的配置
    Returns:
        Path: 旁注文件路径
    """
    document = {
        "artifact": artifact,
        "created": get_iso8601_timestamp(),
        "sha256": hash_file(path),
        "inputs": dict(inputs or {}),
        "config": convert_to_jsonable(config or {}),
        "payload": convert_to_jsonable(payload or {}),
    }
    target = sidecar_path(path)
    try:
        with open(target, "w", encoding="utf-8") as f:
            yaml.safe_dump(document, f, allow_unicode=True, sort_keys=False)
    except OSError as e:
        AppError.FileIOError.raise_(f"写入旁注失败 {target} —— {e}")
    return target


def read_sidecar(path: Path, required: bool = True) -> dict[str, Any] | None:
    """读取产物旁注；required=False 且旁注缺失时返回 None"""
    target = sidecar_path(path)
    if not target.is_file():
        if required:
            AppError.ResourceNotFound.raise_(f"产物 {path} 缺少旁注 {target.name}")
        return None
    try:
        with open(target, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        AppError.MatrixFormatError.raise_(f"旁注 {target} 解析失败 —— {e}")
    if not isinstance(document, dict):
        AppError.MatrixFormatError.raise_(f"旁注 {target} 顶层必须为映射")
    return document


def payload_of(path: Path, artifact: str | tuple[str, ...], required: bool = True) -> dict[str, Any]:
    """读取旁注中的 payload 段并检查产物类型"""
    document = read_sidecar(path, required=required)
    if document is None:
        return {}
    expected = (artifact,) if isinstance(artifact, str) else artifact
    if document.get("artifact") not in expected:
        AppError.MatrixFormatError.raise_(
            f"{path} 的产物类型为 {document.get('artifact')!r}, 期望 {' / '.join(expected)}")
    return document.get("payload") or {}
