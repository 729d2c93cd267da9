"""
与方案无关的同态密文代数

距离计算与比较协议通过这些函数运行，Paillier 与 DGK 作为载体方案可以互换。
"""

from typing import Optional, Union

from ..exceptions import IncompatibleCiphertextError, PlaintextOverflowError, PlaintextRangeError
from .ciphertext import Ciphertext, SCHEME_DGK, SCHEME_PAILLIER
from .dgk import DGKPrivateKey, DGKPublicKey, dgk_decrypt, dgk_encrypt
from .number import RandomSource, invert, powmod
from .paillier import PaillierPrivateKey, PaillierPublicKey, paillier_decrypt, paillier_encrypt

AnyPublicKey = Union[PaillierPublicKey, DGKPublicKey]
AnyPrivateKey = Union[PaillierPrivateKey, DGKPrivateKey]


def _check_compatible(c1: Ciphertext, c2: Ciphertext) -> None:
    if c1.scheme != c2.scheme:
        raise IncompatibleCiphertextError(f"方案不一致: {c1.scheme} vs {c2.scheme}")
    if c1.key_fingerprint != c2.key_fingerprint:
        raise IncompatibleCiphertextError(
            f"公钥不一致: {c1.key_fingerprint} vs {c2.key_fingerprint}"
        )


def he_add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """[[m1]] + [[m2]] = [[m1 + m2 mod M]]，实现为密文模乘"""
    _check_compatible(c1, c2)
    public_key = c1.public_key
    return Ciphertext.wrap(public_key, c1.value * c2.value % public_key.ciphertext_modulus)


def he_scalar_mul(c: Ciphertext, k: int) -> Ciphertext:
    """[[m]]^k = [[m·k mod M]]；k 先约简到 [0, M)，负数按 k mod M 处理"""
    public_key = c.public_key
    exponent = k % public_key.plaintext_modulus
    return Ciphertext.wrap(public_key, powmod(c.value, exponent, public_key.ciphertext_modulus))


def he_sub(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """[[m1 - m2 mod M]] = [[m1]] + [[m2]]^(M-1)"""
    _check_compatible(c1, c2)
    return he_add(c1, he_scalar_mul(c2, c2.public_key.plaintext_modulus - 1))


def he_negate(c: Ciphertext) -> Ciphertext:
    """[[-m]] = [[m]]^(-1)，密文求逆代替以 M-1 为指数的模幂"""
    public_key = c.public_key
    return Ciphertext.wrap(public_key, invert(c.value, public_key.ciphertext_modulus))


def encode_signed(m: int, M: int) -> int:
    """
    有符号整数编码到 Z_M

    Args:
        m: 整数，要求 |m| < M/2
        M: 明文模数

    Returns:
        m mod M
    """
    if 2 * abs(m) >= M:
        raise PlaintextOverflowError(f"有符号明文 {m} 超出明文空间（M 为 {M.bit_length()} 位）")
    return m % M


def decode_signed(r: int, M: int) -> int:
    """Z_M 中的剩余解码为有符号整数：r <= M/2 时为 r，否则 r - M"""
    if not 0 <= r < M:
        raise PlaintextRangeError(f"剩余 {r} 不在 [0, M) 内")
    return r if 2 * r <= M else r - M


def encrypt(public_key: AnyPublicKey, m: int, rng: Optional[RandomSource] = None) -> Ciphertext:
    """按方案分派加密"""
    if public_key.scheme == SCHEME_PAILLIER:
        return paillier_encrypt(public_key, m, rng)
    if public_key.scheme == SCHEME_DGK:
        return dgk_encrypt(public_key, m, rng)
    raise IncompatibleCiphertextError(f"未知方案: {public_key.scheme}")


def encrypt_signed(public_key: AnyPublicKey, m: int, rng: Optional[RandomSource] = None) -> Ciphertext:
    return encrypt(public_key, encode_signed(m, public_key.plaintext_modulus), rng)


def decrypt(private_key: AnyPrivateKey, c: Ciphertext) -> int:
    """按方案分派解密"""
    if isinstance(private_key, PaillierPrivateKey):
        return paillier_decrypt(private_key, c)
    if isinstance(private_key, DGKPrivateKey):
        return dgk_decrypt(private_key, c)
    raise IncompatibleCiphertextError(f"未知私钥类型: {type(private_key).__name__}")


def decrypt_signed(private_key: AnyPrivateKey, c: Ciphertext) -> int:
    return decode_signed(decrypt(private_key, c), private_key.public_key.plaintext_modulus)
