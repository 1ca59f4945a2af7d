"""随机数流派生

所有随机性都来自配置中的唯一种子：每个用途按名称派生一条独立的流，
派生方式为 splitmix64(seed XOR blake2b(name)) 的前两个输出，作为 numpy Generator 的种子。
同一 (seed, name) 永远得到同一条流，不同名称之间互不影响。
"""
import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """splitmix64 单步：返回 (新状态, 输出)"""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, stream: str) -> int:
    """由根种子与流名称派生 128 位子种子"""
    name_key = int.from_bytes(hashlib.blake2b(stream.encode("utf-8"), digest_size=8).digest(), "little")
    state = (int(seed) & MASK64) ^ name_key
    state, high = splitmix64(state)
    _, low = splitmix64(state)
    return (high << 64) | low


def stream_rng(seed: int, stream: str) -> np.random.Generator:
    """按名称获取确定性的随机数生成器，例如 stream_rng(seed, "svm.shuffle")"""
    return np.random.default_rng(derive_seed(seed, stream))
