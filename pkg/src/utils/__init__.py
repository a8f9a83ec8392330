import hashlib

import numpy as np

from src.utils.logging_config import logger


def hashstr(input_data, length=None):
    """生成字符串或字节串的 sha256 哈希值

    Args:
        input_data: 输入字符串或 bytes
        length: 截取长度，默认为None，表示不截取
    """
    if isinstance(input_data, bytes | bytearray | memoryview):
        encoded = bytes(input_data)
    else:
        try:
            encoded = str(input_data).encode("utf-8")
        except UnicodeEncodeError:
            # 如果编码失败，替换无效字符
            encoded = str(input_data).encode("utf-8", errors="replace")

    digest = hashlib.sha256(encoded).hexdigest()
    if length:
        return digest[:length]
    return digest


def fingerprint_arrays(*arrays) -> str:
    """对若干 numpy 数组的字节内容做指纹，用于训练集标识"""
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """由 (seed, *keys) 派生独立的随机数流，结果与调度顺序无关"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """派生一个 32 位整数种子，供需要整型 seed 的配置使用"""
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)
    return int(state[0])


__all__ = ["logger", "hashstr", "fingerprint_arrays", "derive_rng", "derive_seed"]
