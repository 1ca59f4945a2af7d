# -*- coding: utf-8 -*-
"""语义投影器持久化模块

.ssp 二进制格式（小端）:
    magic "SSPJ" | u32 version | u64 头部长度 | JSON 头部
    | 对偶基 A (N×M, f64, 行优先) | 相关系数 r (M, f64) | 前述全部字节的 sha256 摘要 (32 字节)
JSON 头部记录 n、m、kernel_id、visual_scale 与训练图像标识。
读取时先校验长度与摘要，再由 SemanticProjector 校验不变量。
"""
import hashlib
import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from ..exceptions import AppError
from ..model import SemanticProjector

MAGIC = b"SSPJ"
VERSION = 1
PREFIX = struct.Struct("<4sIQ")
DIGEST_SIZE = 32


def _write_payload(path: Path, header: dict[str, Any], dual_basis: np.ndarray, correlations: np.ndarray,
                   version: int = VERSION) -> None:
    """按 .ssp 格式写出原始内容，不做投影器不变量校验"""
    head = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    body = (PREFIX.pack(MAGIC, version, len(head)) + head
            + np.ascontiguousarray(dual_basis, dtype="<f8").tobytes()
            + np.ascontiguousarray(correlations, dtype="<f8").tobytes())
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(body + hashlib.sha256(body).digest())
    except OSError as e:
        AppError.FileIOError.raise_(f"写入投影器失败 {path} —— {e}")


def save_projector(p: SemanticProjector, path: Path) -> None:
    """保存投影器（A 与 r 以 64 位保存，读回逐位一致）"""
    header = {
        "n": p.n_train,
        "m": p.m_dims,
        "kernel_id": p.kernel_id,
        "visual_scale": p.visual_scale,
        "train_row_ids": list(p.train_row_ids),
    }
    _write_payload(path, header, p.dual_basis, p.correlations)


def load_projector(path: Path) -> SemanticProjector:
    """读取投影器
    Raises:
        AppError.IntegrityError: 文件被截断或摘要不符
        AppError.VersionMismatch: 格式版本不受支持
        AppError.InvariantViolation: 内容违反投影器不变量（如 r_j > 1）
    """
    path = Path(path)
    if not path.is_file():
        AppError.ResourceNotFound.raise_(f"投影器文件不存在 —— 路径:{path}")
    data = path.read_bytes()
    if len(data) < PREFIX.size + DIGEST_SIZE:
        AppError.IntegrityError.raise_(f"{path}: 文件被截断 ({len(data)} 字节)")
    magic, version, head_len = PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        AppError.IntegrityError.raise_(f"{path}: 文件标识 {magic!r} 不是 SSPJ")
    if version != VERSION:
        AppError.VersionMismatch.raise_(f"{path}: 投影器格式版本 {version}, 仅支持 {VERSION}")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if PREFIX.size + head_len > len(body):
        AppError.IntegrityError.raise_(f"{path}: 头部被截断")
    try:
        header = json.loads(body[PREFIX.size:PREFIX.size + head_len].decode("utf-8"))
        n, m = int(header["n"]), int(header["m"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        if hashlib.sha256(body).digest() != digest:
            AppError.IntegrityError.raise_(f"{path}: 摘要校验失败")
        AppError.IntegrityError.raise_(f"{path}: 头部无法解析 —— {e}")
    expected = PREFIX.size + head_len + 8 * (n * m + m)
    if len(body) != expected:
        AppError.IntegrityError.raise_(f"{path}: 文件长度 {len(data)} 与头部声明的 {expected + DIGEST_SIZE} 不符")
    if hashlib.sha256(body).digest() != digest:
        AppError.IntegrityError.raise_(f"{path}: 摘要校验失败")
    offset = PREFIX.size + head_len
    dual_basis = np.frombuffer(body, dtype="<f8", count=n * m, offset=offset).reshape(n, m)
    correlations = np.frombuffer(body, dtype="<f8", count=m, offset=offset + 8 * n * m)
    return SemanticProjector(dual_basis=dual_basis, correlations=correlations,
                             train_row_ids=tuple(header.get("train_row_ids", ())),
                             kernel_id=str(header.get("kernel_id", "")),
                             visual_scale=float(header.get("visual_scale", 1.0)))
