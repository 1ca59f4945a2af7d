# -*- coding: utf-8 -*-
"""矩阵文件编解码模块

FMAT 二进制格式（小端）:
    magic "FMAT" | u32 version=1 | u8 dtype (0=f32, 1=f64) | u64 rows | u64 cols
    | rows×cols 行优先数值 | u64 标识块字节数 | 以换行分隔的 UTF-8 行标识
CSV 格式: 第一列为图像标识, 其余列为十进制浮点数。
"""
import csv
import struct
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from ..exceptions import AppError
from ..model import FeatureMatrix
from ..utils import parse_float_tokens

MAGIC = b"FMAT"
VERSION = 1
HEADER = struct.Struct("<4sIBQQ")
LENGTH = struct.Struct("<Q")
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DTYPE_CODES = {"f32": 0, "f64": 1}

MatrixFormat = Literal["binary", "csv"]
StorageDtype = Literal["f32", "f64"]


def infer_format(path: Path) -> MatrixFormat:
    return "csv" if Path(path).suffix.lower() in (".csv", ".txt") else "binary"


def encode_fmat(values: np.ndarray, row_ids: Sequence[str], dtype: StorageDtype = "f64") -> bytes:
    """把矩阵编码为 FMAT 字节串"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        AppError.DimensionMismatch.raise_(f"FMAT 只能保存二维矩阵, 实际为 {arr.ndim} 维")
    if len(row_ids) != arr.shape[0]:
        AppError.DimensionMismatch.raise_(f"矩阵有 {arr.shape[0]} 行, 但提供了 {len(row_ids)} 个行标识")
    for rid in row_ids:
        if "\n" in rid:
            AppError.InvalidParameter.raise_(f"行标识 {rid!r} 含有换行符")
    code = DTYPE_CODES[dtype]
    body = np.ascontiguousarray(arr.astype(DTYPES[code])).tobytes()
    ids = "\n".join(row_ids).encode("utf-8")
    return HEADER.pack(MAGIC, VERSION, code, arr.shape[0], arr.shape[1]) + body + LENGTH.pack(len(ids)) + ids


def decode_fmat(data: bytes, source: str = "<bytes>") -> tuple[np.ndarray, tuple[str, ...]]:
    """解析 FMAT 字节串，返回 (64位数值矩阵, 行标识)"""
    if len(data) < HEADER.size:
        AppError.MatrixFormatError.raise_(f"{source}: 文件头被截断 ({len(data)} 字节)")
    magic, version, code, rows, cols = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        AppError.MatrixFormatError.raise_(f"{source}: 文件标识 {magic!r} 不是 FMAT")
    if version != VERSION:
        AppError.VersionMismatch.raise_(f"{source}: FMAT 版本 {version}, 仅支持 {VERSION}")
    if code not in DTYPES:
        AppError.MatrixFormatError.raise_(f"{source}: 未知数据类型代码 {code}")
    if rows == 0:
        AppError.EmptyMatrix.raise_(f"{source}: 文件头 rows=0")
    dtype = DTYPES[code]
    offset = HEADER.size
    n_bytes = rows * cols * dtype.itemsize
    if len(data) < offset + n_bytes + LENGTH.size:
        AppError.MatrixFormatError.raise_(f"{source}: 数值区被截断, 文件头声明 {rows}×{cols}")
    values = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=offset).reshape(rows, cols)
    offset += n_bytes
    (id_len,) = LENGTH.unpack_from(data, offset)
    offset += LENGTH.size
    if len(data) < offset + id_len:
        AppError.MatrixFormatError.raise_(f"{source}: 行标识块被截断")
    if len(data) > offset + id_len:
        AppError.MatrixFormatError.raise_(f"{source}: 文件末尾存在 {len(data) - offset - id_len} 字节多余数据")
    try:
        ids = tuple(data[offset:offset + id_len].decode("utf-8").split("\n"))
    except UnicodeDecodeError as e:
        AppError.MatrixFormatError.raise_(f"{source}: 行标识不是合法 UTF-8 —— {e}")
    if len(ids) != rows:
        AppError.DimensionMismatch.raise_(f"{source}: 文件头声明 {rows} 行, 行标识块有 {len(ids)} 个")
    return values.astype(np.float64), ids


def read_fmat(path: Path) -> tuple[np.ndarray, tuple[str, ...]]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        AppError.FileIOError.raise_(f"读取矩阵文件失败 {path} —— {e}")
    return decode_fmat(data, str(path))


def write_fmat(path: Path, values: np.ndarray, row_ids: Sequence[str], dtype: StorageDtype = "f64") -> None:
    payload = encode_fmat(values, row_ids, dtype)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(payload)
    except OSError as e:
        AppError.FileIOError.raise_(f"写入矩阵文件失败 {path} —— {e}")


def read_csv_matrix(path: Path, with_ids: bool = True) -> tuple[np.ndarray, tuple[str, ...]]:
    """读取 CSV 矩阵；with_ids=False 时没有标识列，行标识为空元组"""
    rows: list[np.ndarray] = []
    ids: list[str] = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            for line_no, record in enumerate(csv.reader(f), start=1):
                if not record or all(not cell.strip() for cell in record):
                    continue
                if with_ids:
                    ids.append(record[0].strip())
                    record = record[1:]
                row = parse_float_tokens([cell.strip() for cell in record], f"{path} 第 {line_no} 行")
                if rows and row.size != rows[0].size:
                    AppError.DimensionMismatch.raise_(
                        f"{path} 第 {line_no} 行有 {row.size} 列, 首行为 {rows[0].size} 列")
                rows.append(row)
    except OSError as e:
        AppError.FileIOError.raise_(f"读取CSV文件失败 {path} —— {e}")
    except UnicodeDecodeError as e:
        AppError.MatrixFormatError.raise_(f"{path} 不是合法 UTF-8 —— {e}")
    if not rows:
        AppError.EmptyMatrix.raise_(f"{path} 中没有数据行")
    return np.vstack(rows), tuple(ids)


def write_csv_matrix(path: Path, values: np.ndarray, row_ids: Sequence[str] | None = None) -> None:
    """写出 CSV 矩阵，数值使用 repr 以保证读回时逐位一致"""
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            for i, row in enumerate(np.asarray(values, dtype=np.float64)):
                cells = [repr(float(v)) for v in row]
                writer.writerow(([row_ids[i]] if row_ids is not None else []) + cells)
    except OSError as e:
        AppError.FileIOError.raise_(f"写入CSV文件失败 {path} —— {e}")


def load_feature_matrix(path: Path, format: MatrixFormat | None = None) -> FeatureMatrix:
    """读取特征矩阵（FMAT 或 CSV），拒绝非有限值
    Args:
        path: 文件路径
        format: binary 或 csv, 为空时按扩展名推断
    Returns:
        FeatureMatrix: 64位特征矩阵
    """
    path = Path(path)
    if not path.is_file():
        AppError.ResourceNotFound.raise_(f"特征文件不存在 —— 路径:{path}")
    fmt = format or infer_format(path)
    values, ids = read_csv_matrix(path) if fmt == "csv" else read_fmat(path)
    return FeatureMatrix(values=values, row_ids=ids)


def save_feature_matrix(fm: FeatureMatrix, path: Path, format: MatrixFormat | None = None,
                        dtype: StorageDtype = "f32") -> None:
    """保存特征矩阵；二进制格式默认按 32 位存储"""
    fmt = format or infer_format(path)
    if fmt == "csv":
        write_csv_matrix(path, fm.values, fm.row_ids)
    else:
        write_fmat(path, fm.values, fm.row_ids, dtype)
