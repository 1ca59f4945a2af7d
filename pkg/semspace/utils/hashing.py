"""内容哈希工具：为核缓存键与产物旁注记录输入指纹"""
import hashlib
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..exceptions import AppError

_CHUNK = 1 << 20


def hash_file(path: Path) -> str:
    """文件内容的 sha256 十六进制摘要"""
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(_CHUNK), b""):
                digest.update(chunk)
    except OSError as e:
        AppError.FileIOError.raise_(f"计算文件哈希失败 {path} —— {e}")
    return digest.hexdigest()


def hash_array(values: np.ndarray | sp.spmatrix, *ids: tuple[str, ...]) -> str:
    """数组（稠密或稀疏）及其标识序列的 sha256 摘要"""
    digest = hashlib.sha256()
    if sp.issparse(values):
        m = sp.csr_matrix(values)
        digest.update(repr(m.shape).encode())
        for part in (m.indptr.astype("<i8"), m.indices.astype("<i8"), m.data.astype("<f8")):
            digest.update(np.ascontiguousarray(part).tobytes())
    else:
        arr = np.ascontiguousarray(values, dtype="<f8")
        digest.update(repr(arr.shape).encode())
        digest.update(arr.tobytes())
    for block in ids:
        digest.update("\n".join(block).encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def hash_text(*parts: str) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()
