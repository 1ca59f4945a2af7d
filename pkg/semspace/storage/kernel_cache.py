"""核矩阵缓存

缓存键由核函数标识与各输入的内容哈希共同决定；命中时直接读回核块，跳过计算。
"""
from pathlib import Path

from loguru import logger

from ..exceptions import AppError
from ..model import KernelBlock
from ..utils import hash_text
from .artifact_store import load_kernel_block, save_kernel_block


class KernelCache:
    """以目录为存储的核块缓存，cache_dir 为空时缓存关闭"""

    def __init__(self, cache_dir: Path | None) -> None:
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.hits = 0
        self.misses = 0

    @property
    def enabled(self) -> bool:
        return self.cache_dir is not None

    @staticmethod
    def make_key(kernel_id: str, *input_hashes: str) -> str:
        return hash_text(kernel_id, *input_hashes)

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.fmat"

    def load(self, key: str) -> KernelBlock | None:
        if not self.enabled:
            return None
        path = self._path(key)
        if not path.is_file():
            self.misses += 1
            return None
        try:
            block = load_kernel_block(path)
        except AppError.Exception as e:
            logger.opt(colors=True).warning("<y>KernelCache</y>:缓存 {} 无法读取, 将重新计算 —— {}", key[:12], e)
            self.misses += 1
            return None
        self.hits += 1
        logger.opt(colors=True).info("<g>KernelCache</g>:命中缓存 <c>{}</c> ({})", key[:12], block.kernel_id)
        return block

    def store(self, key: str, block: KernelBlock) -> None:
        if not self.enabled:
            return
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        save_kernel_block(block, self._path(key), inputs={"cache_key": key})
