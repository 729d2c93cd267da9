"""
密文与明文空间类型

密文同时携带方案标签和公钥指纹，同态运算只允许组合同一方案、同一公钥下的密文。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Protocol

from ..exceptions import IncompatibleCiphertextError, PlaintextRangeError, WrongKeyError
from .number import from_hex, to_hex

SCHEME_PAILLIER = 'paillier'
SCHEME_DGK = 'dgk'
SCHEMES = (SCHEME_PAILLIER, SCHEME_DGK)


class PublicKey(Protocol):
    """两种加法同态方案公钥的公共接口"""

    scheme: str
    key_fingerprint: str

    @property
    def plaintext_modulus(self) -> int: ...

    @property
    def ciphertext_modulus(self) -> int: ...


@dataclass(frozen=True)
class MessageSpace:
    """明文空间 Z_M（Paillier 为 n，DGK 为 u）"""
    M: int

    def __post_init__(self):
        if self.M < 3:
            raise PlaintextRangeError(f"明文空间过小: M={self.M}")

    def __contains__(self, m: int) -> bool:
        return 0 <= m < self.M


@dataclass(frozen=True)
class Ciphertext:
    """加密值 [[v]]"""
    scheme: str
    value: int
    key_fingerprint: str
    public_key: Any = field(repr=False, compare=False, hash=False)

    @classmethod
    def wrap(cls, public_key: PublicKey, value: int) -> 'Ciphertext':
        """在 public_key 下包装一个原始密文值，并检查范围"""
        if not 0 <= value < public_key.ciphertext_modulus:
            raise PlaintextRangeError(
                f"{public_key.scheme} 密文值超出 [0, {public_key.ciphertext_modulus.bit_length()} 位模数) 范围"
            )
        return cls(
            scheme=public_key.scheme,
            value=int(value),
            key_fingerprint=public_key.key_fingerprint,
            public_key=public_key,
        )

    @property
    def message_space(self) -> MessageSpace:
        return MessageSpace(self.public_key.plaintext_modulus)


Keyring = Mapping[str, Any]


def make_keyring(*public_keys: Any) -> Dict[str, Any]:
    """按公钥指纹建立密钥环"""
    return {pk.key_fingerprint: pk for pk in public_keys}


def ciphertext_to_record(c: Ciphertext) -> Dict[str, str]:
    """密文 -> 线路记录 {scheme, c, kf}"""
    return {'scheme': c.scheme, 'c': to_hex(c.value), 'kf': c.key_fingerprint}


def ciphertext_from_record(record: Mapping[str, Any], keyring: Keyring) -> Ciphertext:
    """
    线路记录 -> 密文

    Args:
        record: {scheme, c, kf}
        keyring: 指纹到公钥的映射

    Returns:
        绑定到对应公钥的密文
    """
    try:
        public_key = keyring[record['kf']]
    except KeyError as e:
        raise WrongKeyError(f"未知的公钥指纹: {record.get('kf')}") from e
    if record.get('scheme') != public_key.scheme:
        raise IncompatibleCiphertextError(
            f"密文方案 {record.get('scheme')} 与公钥方案 {public_key.scheme} 不符"
        )
    return Ciphertext.wrap(public_key, from_hex(record['c']))
