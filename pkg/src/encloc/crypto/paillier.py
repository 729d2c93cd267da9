"""
Paillier 加法同态加密

生成元固定为 g = n + 1，加密化简为 (1 + m·n)·r^n mod n²。
"""

from dataclasses import dataclass, field
from math import gcd
from typing import Optional, Tuple

from loguru import logger

from ..exceptions import KeyGenerationError, PlaintextRangeError, WrongKeyError
from ..utils.accounting import record
from .ciphertext import Ciphertext, MessageSpace, SCHEME_PAILLIER
from .number import (
    RandomSource,
    get_rng,
    invert,
    key_fingerprint,
    lcm,
    powmod,
    random_prime,
)

DEFAULT_KEY_BITS = 2048
MIN_KEY_BITS = 256


@dataclass(frozen=True)
class PaillierPublicKey:
    """Paillier 公钥"""
    n: int
    scheme: str = field(default=SCHEME_PAILLIER, init=False)
    key_fingerprint: str = field(default='', init=False)

    def __post_init__(self):
        if self.n % 2 == 0 or self.n < 3:
            raise KeyGenerationError("Paillier 模数必须为大于 1 的奇数")
        object.__setattr__(self, 'key_fingerprint', key_fingerprint(self.n))
        object.__setattr__(self, 'nsquare', self.n * self.n)

    @property
    def g(self) -> int:
        return self.n + 1

    @property
    def key_bits(self) -> int:
        return self.n.bit_length()

    @property
    def plaintext_modulus(self) -> int:
        return self.n

    @property
    def ciphertext_modulus(self) -> int:
        return self.nsquare

    @property
    def message_space(self) -> MessageSpace:
        return MessageSpace(self.n)


@dataclass(frozen=True)
class PaillierPrivateKey:
    """Paillier 私钥（陷门）"""
    public_key: PaillierPublicKey
    p: int
    q: int
    lam: int = field(init=False)
    mu: int = field(init=False)

    def __post_init__(self):
        if self.p == self.q:
            raise KeyGenerationError("p 与 q 不能相同")
        if self.p * self.q != self.public_key.n:
            raise KeyGenerationError("p·q 与公钥模数不符")
        lam = lcm(self.p - 1, self.q - 1)
        try:
            mu = invert(lam % self.public_key.n, self.public_key.n)
        except ZeroDivisionError as e:
            raise KeyGenerationError("lambda 在模 n 下不可逆") from e
        object.__setattr__(self, 'lam', lam)
        object.__setattr__(self, 'mu', mu)


def paillier_keypair_from_primes(p: int, q: int) -> Tuple[PaillierPublicKey, PaillierPrivateKey]:
    """
    由给定素数构造密钥对（测试钩子，不检查位数下限）

    Args:
        p: 素数
        q: 素数

    Returns:
        (公钥, 私钥)
    """
    public_key = PaillierPublicKey(p * q)
    return public_key, PaillierPrivateKey(public_key, p, q)


def paillier_keygen(key_bits: int = DEFAULT_KEY_BITS,
                    rng: Optional[RandomSource] = None) -> Tuple[PaillierPublicKey, PaillierPrivateKey]:
    """
    生成 Paillier 密钥对

    Args:
        key_bits: 模数 n 的位数，>= 256 且为偶数
        rng: 随机源（测试可传入带种子的 random.Random）

    Returns:
        (公钥, 私钥)
    """
    if key_bits < MIN_KEY_BITS:
        raise KeyGenerationError(f"Paillier 密钥位数不能小于 {MIN_KEY_BITS}: {key_bits}")
    if key_bits % 2:
        raise KeyGenerationError(f"Paillier 密钥位数必须为偶数: {key_bits}")

    rng = get_rng(rng)
    half = key_bits // 2
    while True:
        p = random_prime(half, rng, top_two=True)
        q = random_prime(half, rng, top_two=True)
        if p != q and (p * q).bit_length() == key_bits and gcd(p * q, (p - 1) * (q - 1)) == 1:
            break

    logger.debug(f"已生成 {key_bits} 位 Paillier 密钥")
    return paillier_keypair_from_primes(p, q)


def paillier_encrypt(public_key: PaillierPublicKey, m: int,
                     rng: Optional[RandomSource] = None, r: Optional[int] = None) -> Ciphertext:
    """
    Paillier 加密

    Args:
        public_key: 公钥
        m: 明文，0 <= m < n
        rng: 随机源
        r: 强制指定随机数（测试钩子），须与 n 互素

    Returns:
        密文
    """
    n = public_key.n
    if not 0 <= m < n:
        raise PlaintextRangeError(f"Paillier 明文超出 [0, n) 范围")
    if r is None:
        rng = get_rng(rng)
        while True:
            r = rng.randrange(1, n)
            if gcd(r, n) == 1:
                break
    nsquare = public_key.nsquare
    # g = n+1 时 g^m = 1 + m·n (mod n²)
    value = ((1 + m * n) % nsquare) * powmod(r, n, nsquare) % nsquare
    record('encryptions')
    return Ciphertext.wrap(public_key, value)


def paillier_decrypt(private_key: PaillierPrivateKey, ciphertext: Ciphertext) -> int:
    """
    Paillier 解密：L(c^lambda mod n²)·mu mod n，L(u) = (u-1)/n

    Args:
        private_key: 私钥
        ciphertext: 密文

    Returns:
        [0, n) 内的明文
    """
    public_key = private_key.public_key
    if ciphertext.scheme != SCHEME_PAILLIER or ciphertext.key_fingerprint != public_key.key_fingerprint:
        raise WrongKeyError("密文不是在该 Paillier 公钥下生成的")
    nsquare = public_key.nsquare
    if not 0 <= ciphertext.value < nsquare:
        raise PlaintextRangeError("Paillier 密文超出 [0, n²) 范围")

    n = public_key.n
    u = powmod(ciphertext.value, private_key.lam, nsquare)
    record('decryptions')
    return ((u - 1) // n) * private_key.mu % n
