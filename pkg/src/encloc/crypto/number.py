"""
数论与随机数工具

- 生产路径使用 secrets.SystemRandom（CSPRNG）
- 测试可通过 seed_rng() 或环境变量 ENCLOC_RNG_SEED 注入确定性随机源
- 大数运算统一走 gmpy2
"""

import hashlib
import random
import secrets
from typing import Optional, Union

import gmpy2
from loguru import logger

from ..utils.config import config

# Miller-Rabin 轮数：错误概率 < 2^-128
MILLER_RABIN_ROUNDS = 64

RandomSource = Union[random.Random, secrets.SystemRandom]

_rng: Optional[RandomSource] = None


def _default_rng() -> RandomSource:
    seed = config.get_rng_seed()
    if seed is not None:
        logger.warning(f"使用确定性随机数种子 ENCLOC_RNG_SEED={seed}（仅限测试）")
        return random.Random(seed)
    return secrets.SystemRandom()


def get_rng(rng: Optional[RandomSource] = None) -> RandomSource:
    """返回调用方传入的随机源，否则返回全局随机源"""
    global _rng
    if rng is not None:
        return rng
    if _rng is None:
        _rng = _default_rng()
    return _rng


def seed_rng(seed: int) -> None:
    """测试钩子：将全局随机源替换为可复现的 random.Random(seed)"""
    global _rng
    _rng = random.Random(seed)


def reset_rng() -> None:
    """丢弃全局随机源，下次使用时按 ENCLOC_RNG_SEED 重新选择"""
    global _rng
    _rng = None


def is_probable_prime(n: int) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, MILLER_RABIN_ROUNDS))


def random_prime(bits: int, rng: Optional[RandomSource] = None, top_two: bool = False) -> int:
    """
    生成恰好 bits 位的随机概率素数

    Args:
        bits: 位数（>= 2）
        rng: 随机源
        top_two: 置最高两位，保证两个同长素数之积恰好 2*bits 位

    Returns:
        素数
    """
    if bits < 2:
        raise ValueError(f"素数位数过小: {bits}")
    rng = get_rng(rng)
    high = (3 << (bits - 2)) if top_two and bits >= 3 else (1 << (bits - 1))
    while True:
        candidate = rng.getrandbits(bits) | high | 1
        if is_probable_prime(candidate):
            return candidate


def powmod(base: int, exponent: int, modulus: int) -> int:
    return int(gmpy2.powmod(base, exponent, modulus))


def invert(a: int, modulus: int) -> int:
    """模逆，不存在时抛出 ZeroDivisionError"""
    return int(gmpy2.invert(a, modulus))


def lcm(a: int, b: int) -> int:
    return int(gmpy2.lcm(a, b))


def crt_pair(a_p: int, p: int, a_q: int, q: int) -> int:
    """中国剩余定理：求 x ≡ a_p (mod p), x ≡ a_q (mod q)"""
    q_inv = invert(q, p)
    h = ((a_p - a_q) * q_inv) % p
    return a_q + h * q


def key_fingerprint(*components: int) -> str:
    """公钥指纹：公钥参数十六进制串的 SHA-256 前 16 位"""
    material = ':'.join(format(c, 'x') for c in components)
    return hashlib.sha256(material.encode('ascii')).hexdigest()[:16]


def to_hex(value: int) -> str:
    """规范十六进制：小写、无符号、无前导零（0 编码为 '0'）"""
    if value < 0:
        raise ValueError("线路中的大整数必须预先约简为非负数")
    return format(value, 'x')


def from_hex(text: str) -> int:
    return int(text, 16)
