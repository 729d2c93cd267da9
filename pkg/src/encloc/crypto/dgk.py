"""
DGK 加法同态加密

明文空间为小素数 u 的剩余类 Z_u，支持：
- 快速零值检测：c^(v_p·v_q) mod n == 1  <=>  m ≡ 0 (mod u)
- 完整解密：c^v_p mod p 后在 u 阶子群中用小步大步法求离散对数

小步表按 g^v_p mod p 的幂次的低 64 位建立有序 numpy 数组，
大步在 gmpy2 上迭代、分批用 searchsorted 查找，命中后与目标精确比对。
"""

from dataclasses import dataclass, field
from math import isqrt
from typing import Optional, Tuple

import gmpy2
import numpy as np
from gmpy2 import f_mod_2exp, mpz
from loguru import logger

from ..exceptions import DecryptionError, KeyGenerationError, PlaintextRangeError, WrongKeyError
from ..utils.accounting import record
from .ciphertext import Ciphertext, MessageSpace, SCHEME_DGK
from .number import (
    RandomSource,
    crt_pair,
    get_rng,
    is_probable_prime,
    key_fingerprint,
    powmod,
    random_prime,
)

DEFAULT_KEY_BITS = 2048
DEFAULT_T_BITS = 160
MIN_KEY_BITS = 512

# 小步表的目标项数（约 16 MiB 键 + 16 MiB 指数）；39 位 u 时大步不超过 2^18
BABY_STEP_TARGET = 1 << 21
# 大步分批大小
GIANT_STEP_BATCH = 4096


@dataclass(frozen=True)
class DGKPublicKey:
    """DGK 公钥"""
    n: int
    g: int
    h: int
    u: int
    t: int = DEFAULT_T_BITS
    scheme: str = field(default=SCHEME_DGK, init=False)
    key_fingerprint: str = field(default='', init=False)

    def __post_init__(self):
        if self.u <= 2:
            raise KeyGenerationError(f"DGK 明文空间 u 必须大于 2: {self.u}")
        if not (2 <= self.g < self.n and 2 <= self.h < self.n):
            raise KeyGenerationError("DGK 生成元 g, h 必须位于 [2, n)")
        object.__setattr__(self, 'key_fingerprint',
                           key_fingerprint(self.n, self.g, self.h, self.u, self.t))

    @property
    def key_bits(self) -> int:
        return self.n.bit_length()

    @property
    def plaintext_modulus(self) -> int:
        return self.u

    @property
    def ciphertext_modulus(self) -> int:
        return self.n

    @property
    def message_space(self) -> MessageSpace:
        return MessageSpace(self.u)

    @property
    def randomness_bits(self) -> int:
        # 每次加密使用 2.5·t 位随机数
        return (5 * self.t) // 2


class DlogTable:
    """
    u 阶子群离散对数的小步表

    小步数取 max(ceil(sqrt(u)), BABY_STEP_TARGET)，且不超过 u；
    表越大，单次解密的大步越少。
    """

    def __init__(self, base: int, p: int, u: int, baby_steps: Optional[int] = None):
        self.p = mpz(p)
        self.u = u
        self.base = mpz(base)
        if baby_steps is None:
            baby_steps = max(isqrt(u - 1) + 1, BABY_STEP_TARGET)
        self.size = max(1, min(u, baby_steps))

        keys = np.empty(self.size, dtype=np.uint64)
        value = mpz(1)
        base_mpz, p_mpz = self.base, self.p
        for j in range(self.size):
            keys[j] = int(f_mod_2exp(value, 64))
            value = value * base_mpz % p_mpz
        order = np.argsort(keys, kind='stable')
        self.keys = keys[order]
        self.exponents = order.astype(np.int64)
        # 大步因子 base^(-size)
        self.giant_factor = gmpy2.invert(gmpy2.powmod(self.base, self.size, self.p), self.p)
        self.giant_steps = -(-u // self.size)

    def log(self, target: int) -> int:
        """
        求 m 使 base^m ≡ target (mod p)，0 <= m < u

        Raises:
            DecryptionError: 子群中不存在该离散对数
        """
        p, factor, keys = self.p, self.giant_factor, self.keys
        target = mpz(target) % p
        y = target
        i = 0
        while i < self.giant_steps:
            batch = min(GIANT_STEP_BATCH, self.giant_steps - i)
            lows = np.empty(batch, dtype=np.uint64)
            for k in range(batch):
                lows[k] = int(f_mod_2exp(y, 64))
                y = y * factor % p
            pos = np.searchsorted(keys, lows)
            pos[pos >= self.size] = 0
            for k in np.nonzero(keys[pos] == lows)[0]:
                # 低 64 位可能碰撞，逐个与目标精确比对
                idx = int(pos[k])
                while idx < self.size and keys[idx] == lows[k]:
                    m = (i + int(k)) * self.size + int(self.exponents[idx])
                    if m < self.u and gmpy2.powmod(self.base, m, p) == target:
                        return m
                    idx += 1
            i += batch
        raise DecryptionError("DGK 离散对数不存在，密文可能已损坏")


@dataclass(frozen=True)
class DGKPrivateKey:
    """DGK 私钥；dlog_table 在构造时重建，不参与序列化"""
    public_key: DGKPublicKey
    p: int
    q: int
    v_p: int
    v_q: int
    dlog_table: DlogTable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pk = self.public_key
        if self.p * self.q != pk.n:
            raise KeyGenerationError("p·q 与 DGK 公钥模数不符")
        if (self.p - 1) % (pk.u * self.v_p) or (self.q - 1) % (pk.u * self.v_q):
            raise KeyGenerationError("要求 u·v_p | p-1 且 u·v_q | q-1")
        base = powmod(pk.g, self.v_p, self.p)
        if base == 1:
            raise KeyGenerationError("g^v_p mod p 退化为 1")
        object.__setattr__(self, 'dlog_table', DlogTable(base, self.p, pk.u))

    @property
    def v_pq(self) -> int:
        return self.v_p * self.v_q


def _element_of_order(prime: int, order_factors: Tuple[int, ...], rng: RandomSource) -> int:
    """在 Z_prime* 中找阶恰为 prod(order_factors) 的元素（各因子为互异素数）"""
    order = 1
    for f in order_factors:
        order *= f
    cofactor = (prime - 1) // order
    while True:
        x = rng.randrange(2, prime - 1)
        candidate = powmod(x, cofactor, prime)
        if candidate == 1:
            continue
        if all(powmod(candidate, order // f, prime) != 1 for f in order_factors):
            return candidate


def _dgk_prime(half_bits: int, u: int, v: int, rng: RandomSource) -> int:
    """生成 half_bits 位素数 p = 2·u·v·f + 1"""
    base = 2 * u * v
    f_bits = half_bits - base.bit_length()
    if f_bits < 2:
        raise KeyGenerationError(
            f"参数组合无法满足 u·v < p-1: key_bits/2={half_bits}, u 位数={u.bit_length()}, t={v.bit_length()}"
        )
    for _ in range(1_000_000):
        f = rng.getrandbits(f_bits) | (1 << (f_bits - 1))
        candidate = base * f + 1
        if candidate.bit_length() == half_bits and is_probable_prime(candidate):
            return candidate
    raise KeyGenerationError("DGK 素数搜索失败")


def dgk_keygen(key_bits: int = DEFAULT_KEY_BITS,
               t_bits: int = DEFAULT_T_BITS,
               u_bits: int = 16,
               u: Optional[int] = None,
               rng: Optional[RandomSource] = None) -> Tuple[DGKPublicKey, DGKPrivateKey]:
    """
    生成 DGK 密钥对

    Args:
        key_bits: 模数 n 的位数，>= 512
        t_bits: v_p, v_q 的位数
        u_bits: 明文空间素数 u 的位数（按角色选择）
        u: 直接指定明文空间素数（测试钩子，优先于 u_bits）
        rng: 随机源

    Returns:
        (公钥, 私钥)
    """
    if key_bits < MIN_KEY_BITS:
        raise KeyGenerationError(f"DGK 密钥位数不能小于 {MIN_KEY_BITS}: {key_bits}")
    if key_bits % 2:
        raise KeyGenerationError(f"DGK 密钥位数必须为偶数: {key_bits}")
    if t_bits < 8:
        raise KeyGenerationError(f"t_bits 过小: {t_bits}")

    rng = get_rng(rng)
    if u is None:
        if u_bits < 2:
            raise KeyGenerationError(f"u_bits 过小: {u_bits}")
        u = random_prime(u_bits, rng)
    elif u <= 2 or not is_probable_prime(u):
        raise KeyGenerationError(f"u 必须是大于 2 的素数: {u}")

    half = key_bits // 2
    while True:
        v_p = random_prime(t_bits, rng)
        v_q = random_prime(t_bits, rng)
        if v_p == v_q or v_p == u or v_q == u:
            continue
        p = _dgk_prime(half, u, v_p, rng)
        q = _dgk_prime(half, u, v_q, rng)
        if p != q and (p * q).bit_length() == key_bits:
            break

    n = p * q
    # g: 阶 u·v_p·v_q；h: 阶 v_p·v_q（CRT 合成）
    g = crt_pair(_element_of_order(p, (u, v_p), rng), p,
                 _element_of_order(q, (u, v_q), rng), q)
    h = crt_pair(_element_of_order(p, (v_p,), rng), p,
                 _element_of_order(q, (v_q,), rng), q)

    public_key = DGKPublicKey(n=n, g=g, h=h, u=u, t=t_bits)
    private_key = DGKPrivateKey(public_key, p, q, v_p, v_q)
    logger.debug(f"已生成 {key_bits} 位 DGK 密钥，u 为 {u.bit_length()} 位，小步表 {private_key.dlog_table.size} 项")
    return public_key, private_key


def dgk_encrypt(public_key: DGKPublicKey, m: int,
                rng: Optional[RandomSource] = None, r: Optional[int] = None) -> Ciphertext:
    """
    DGK 加密：c = g^m·h^r mod n

    Args:
        public_key: 公钥
        m: 明文，0 <= m < u
        rng: 随机源
        r: 强制指定随机数（测试钩子）

    Returns:
        密文
    """
    if not 0 <= m < public_key.u:
        raise PlaintextRangeError(f"DGK 明文超出 [0, u) 范围")
    if r is None:
        r = get_rng(rng).getrandbits(public_key.randomness_bits)
    n = public_key.n
    value = powmod(public_key.g, m, n) * powmod(public_key.h, r, n) % n
    record('encryptions')
    return Ciphertext.wrap(public_key, value)


def _check_key(private_key: DGKPrivateKey, ciphertext: Ciphertext) -> None:
    public_key = private_key.public_key
    if ciphertext.scheme != SCHEME_DGK or ciphertext.key_fingerprint != public_key.key_fingerprint:
        raise WrongKeyError("密文不是在该 DGK 公钥下生成的")
    if not 0 <= ciphertext.value < public_key.n:
        raise PlaintextRangeError("DGK 密文超出 [0, n) 范围")


def dgk_decrypt(private_key: DGKPrivateKey, ciphertext: Ciphertext) -> int:
    """
    DGK 完整解密

    Args:
        private_key: 私钥
        ciphertext: 密文

    Returns:
        [0, u) 内的明文
    """
    _check_key(private_key, ciphertext)
    record('decryptions')
    target = powmod(ciphertext.value, private_key.v_p, private_key.p)
    return private_key.dlog_table.log(target)


def dgk_is_zero(private_key: DGKPrivateKey, ciphertext: Ciphertext) -> bool:
    """零值检测：明文 ≡ 0 (mod u) 当且仅当 c^(v_p·v_q) mod n == 1"""
    _check_key(private_key, ciphertext)
    record('zero_checks')
    return powmod(ciphertext.value, private_key.v_pq, private_key.public_key.n) == 1
