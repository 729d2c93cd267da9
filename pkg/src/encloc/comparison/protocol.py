"""
加密比较协议

求值方（服务器）持有密钥方（客户端）公钥下的两个密文 [[x]]、[[y]]，
经过六条消息后得到明文比特 t = (x >= y)，密钥方看不到 x、y 与 t。

    M1 eval->key  [[z + r]]，z = 2^l + x - y
    M2 key->eval  a' = 2·(d mod 2^l) + 1 的逐位 DGK 密文，以及 [[floor(d / 2^l)]]
    M3 eval->key  乘法盲化并打乱后的 [e_i]
    M4 key->eval  [[delta_B]]，delta_B = 是否存在零
    M5 eval->key  [[t + gamma]]
    M6 key->eval  t + gamma（明文）

a' 为奇数、b' = 2·(r mod 2^l) 为偶数，二者永不相等，逐位比较无需处理相等情形；
方向盲化 s ∈ {+1, -1} 使密钥方看到的零模式与真实借位无关。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Protocol, Tuple, Union

from loguru import logger

from ..crypto.algebra import AnyPrivateKey, decrypt, encrypt, he_add, he_scalar_mul, he_sub
from ..crypto.ciphertext import (
    Ciphertext,
    Keyring,
    ciphertext_from_record,
    ciphertext_to_record,
)
from ..crypto.dgk import DGKPrivateKey, DGKPublicKey, dgk_encrypt, dgk_is_zero
from ..crypto.number import RandomSource, from_hex, get_rng, to_hex
from ..exceptions import (
    ComparisonAbortedError,
    DecryptionError,
    IncompatibleCiphertextError,
    PlaintextRangeError,
    ProtocolIntegrityError,
    ProtocolStageError,
    WrongKeyError,
)
from ..utils.accounting import record
from .params import ComparisonParams


# ---------------------------------------------------------------------------
# 消息
# ---------------------------------------------------------------------------

@dataclass
class CompareM1:
    masked: Ciphertext
    msg_type = 'cmp1'

    def to_body(self) -> Dict[str, Any]:
        return {'masked': ciphertext_to_record(self.masked)}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM1':
        return cls(ciphertext_from_record(body['masked'], keyring))


@dataclass
class CompareM2:
    bits: List[Ciphertext]  # a'_l .. a'_0，最高位在前
    top: Ciphertext
    msg_type = 'cmp2'

    def to_body(self) -> Dict[str, Any]:
        return {'bits': [ciphertext_to_record(c) for c in self.bits],
                'top': ciphertext_to_record(self.top)}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM2':
        return cls([ciphertext_from_record(c, keyring) for c in body['bits']],
                   ciphertext_from_record(body['top'], keyring))


@dataclass
class CompareM3:
    blinded: List[Ciphertext]
    msg_type = 'cmp3'

    def to_body(self) -> Dict[str, Any]:
        return {'blinded': [ciphertext_to_record(c) for c in self.blinded]}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM3':
        return cls([ciphertext_from_record(c, keyring) for c in body['blinded']])


@dataclass
class CompareM4:
    borrow: Ciphertext  # [[delta_B]]
    msg_type = 'cmp4'

    def to_body(self) -> Dict[str, Any]:
        return {'borrow': ciphertext_to_record(self.borrow)}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM4':
        return cls(ciphertext_from_record(body['borrow'], keyring))


@dataclass
class CompareM5:
    masked_result: Ciphertext
    msg_type = 'cmp5'

    def to_body(self) -> Dict[str, Any]:
        return {'masked_result': ciphertext_to_record(self.masked_result)}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM5':
        return cls(ciphertext_from_record(body['masked_result'], keyring))


@dataclass
class CompareM6:
    w: int
    msg_type = 'cmp6'

    def to_body(self) -> Dict[str, Any]:
        return {'w': to_hex(self.w)}

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'CompareM6':
        return cls(from_hex(body['w']))


ComparisonMessage = Union[CompareM1, CompareM2, CompareM3, CompareM4, CompareM5, CompareM6]

MESSAGE_CLASSES = {cls.msg_type: cls for cls in
                   (CompareM1, CompareM2, CompareM3, CompareM4, CompareM5, CompareM6)}

# 每条请求期望的应答类型
EXPECTED_REPLY = {'cmp1': 'cmp2', 'cmp3': 'cmp4', 'cmp5': 'cmp6'}


# ---------------------------------------------------------------------------
# 会话状态
# ---------------------------------------------------------------------------

class EvaluatorStage(Enum):
    AWAIT_M2 = 1
    AWAIT_M4 = 2
    AWAIT_M6 = 3
    DONE = 4


class KeyholderStage(Enum):
    AWAIT_M1 = 1
    AWAIT_M3 = 2
    AWAIT_M5 = 3
    CLOSED = 4


@dataclass
class EvaluatorSession:
    """求值方单次比较的状态；r, s, gamma, rho 每次会话重新抽取"""
    cx: Ciphertext
    cy: Ciphertext
    params: ComparisonParams
    bit_key: DGKPublicKey
    r: int
    s: int
    gamma: int
    rng: Any = field(repr=False)
    rho: List[int] = field(default_factory=list, repr=False)
    permutation: List[int] = field(default_factory=list)
    top_ct: Optional[Ciphertext] = field(default=None, repr=False)
    stage: EvaluatorStage = EvaluatorStage.AWAIT_M2

    @property
    def carrier_key(self):
        return self.cx.public_key

    def advance(self, expected: EvaluatorStage, to: EvaluatorStage) -> None:
        if self.stage is not expected:
            raise ProtocolStageError(f"求值方阶段错误: 期望 {expected.name}，当前 {self.stage.name}")
        self.stage = to


@dataclass
class KeyholderSession:
    """密钥方单次比较的状态，只保存私钥与阶段，不保留 d、d̂、delta"""
    carrier_key: AnyPrivateKey = field(repr=False)
    bit_key: DGKPrivateKey = field(repr=False)
    stage: KeyholderStage = KeyholderStage.AWAIT_M1
    rng: Any = field(default=None, repr=False)

    def advance(self, expected: KeyholderStage, to: KeyholderStage) -> None:
        if self.stage is not expected:
            raise ProtocolStageError(f"密钥方阶段错误: 期望 {expected.name}，当前 {self.stage.name}")
        self.stage = to


# ---------------------------------------------------------------------------
# 协议步骤
# ---------------------------------------------------------------------------

def eval_start(cx: Ciphertext, cy: Ciphertext, params: ComparisonParams, bit_key: DGKPublicKey,
               rng: Optional[RandomSource] = None, *,
               r: Optional[int] = None, s: Optional[int] = None,
               gamma: Optional[int] = None) -> Tuple[EvaluatorSession, CompareM1]:
    """
    求值方第一步：计算 M1 = [[2^l + x - y + r]]

    Args:
        cx, cy: 载体方案下的密文，明文须位于 [0, 2^l)
        params: 比较参数
        bit_key: 逐位阶段使用的 DGK 公钥
        rng: 随机源
        r, s, gamma: 测试钩子，强制指定掩码

    Returns:
        (求值方会话, M1)
    """
    if cx.scheme != cy.scheme or cx.key_fingerprint != cy.key_fingerprint:
        raise IncompatibleCiphertextError("待比较的两个密文不在同一密钥下")
    params.validate(cx.public_key, bit_key)

    rng = get_rng(rng)
    carrier = cx.public_key
    if r is None:
        r = rng.randrange(params.mask_bound)
    if s is None:
        s = rng.choice((1, -1))
    if gamma is None:
        gamma = rng.randrange(carrier.plaintext_modulus)
    if s not in (1, -1):
        raise ValueError(f"方向盲化 s 只能为 ±1: {s}")

    z = he_add(he_sub(cx, cy), encrypt(carrier, params.two_l, rng))
    masked = he_add(z, encrypt(carrier, r, rng))

    session = EvaluatorSession(cx=cx, cy=cy, params=params, bit_key=bit_key,
                               r=r, s=s, gamma=gamma, rng=rng)
    return session, CompareM1(masked)


def keyh_mask_decompose(ks: KeyholderSession, m1: CompareM1, params: ComparisonParams) -> CompareM2:
    """
    密钥方：解密 d = z + r，拆出 d̂ = d mod 2^l 与 top = floor(d / 2^l)，
    返回 a' = 2·d̂ + 1 的 l+1 个 DGK 比特密文和 [[top]]
    """
    ks.advance(KeyholderStage.AWAIT_M1, KeyholderStage.AWAIT_M3)
    try:
        d = decrypt(ks.carrier_key, m1.masked)
    except (DecryptionError, WrongKeyError, PlaintextRangeError) as e:
        ks.stage = KeyholderStage.CLOSED
        raise ComparisonAbortedError(f"M1 解密失败: {e}") from e

    l = params.l
    a_prime = 2 * (d & ((1 << l) - 1)) + 1
    top = d >> l
    bit_pk = ks.bit_key.public_key
    bits = [dgk_encrypt(bit_pk, (a_prime >> i) & 1, ks.rng) for i in range(l, -1, -1)]
    top_ct = encrypt(ks.carrier_key.public_key, top, ks.rng)
    return CompareM2(bits=bits, top=top_ct)


def eval_bit_stage(es: EvaluatorSession, m2: CompareM2, params: ComparisonParams) -> CompareM3:
    """
    求值方逐位阶段

    对 i = l..0：
        [w_i] = [a'_i]              (b'_i = 0)
              = E(1)·[a'_i]^(u-1)    (b'_i = 1)
        [c_i] = E(b'_i + s)·[a'_i]^(u-1)·(prod_{j>i} [w_j])^3
        [e_i] = [c_i]^rho_i
    然后随机打乱。
    """
    es.advance(EvaluatorStage.AWAIT_M2, EvaluatorStage.AWAIT_M4)
    n_bits = params.n_bits
    if len(m2.bits) != n_bits:
        raise ComparisonAbortedError(f"M2 比特数 {len(m2.bits)} != l+1 = {n_bits}")
    for c in m2.bits:
        if c.key_fingerprint != es.bit_key.key_fingerprint:
            raise ComparisonAbortedError("M2 比特密文不在约定的 DGK 密钥下")
    if m2.top.key_fingerprint != es.carrier_key.key_fingerprint:
        raise ComparisonAbortedError("M2 中 top 不在载体密钥下")

    rng = es.rng
    u = es.bit_key.u
    b_prime = 2 * (es.r & ((1 << params.l) - 1))
    enc_one = dgk_encrypt(es.bit_key, 1, rng)

    c_list: List[Ciphertext] = []
    w_sum: Optional[Ciphertext] = None
    for pos, a_ct in enumerate(m2.bits):
        i = params.l - pos
        b_i = (b_prime >> i) & 1
        neg_a = he_scalar_mul(a_ct, u - 1)
        c_i = he_add(dgk_encrypt(es.bit_key, (b_i + es.s) % u, rng), neg_a)
        if w_sum is not None:
            c_i = he_add(c_i, he_scalar_mul(w_sum, 3))
        c_list.append(c_i)

        w_i = a_ct if b_i == 0 else he_add(enc_one, neg_a)
        w_sum = w_i if w_sum is None else he_add(w_sum, w_i)

    es.rho = [rng.randrange(1, u) for _ in range(n_bits)]
    blinded = [he_scalar_mul(c, rho) for c, rho in zip(c_list, es.rho)]

    permutation = list(range(n_bits))
    rng.shuffle(permutation)
    es.permutation = permutation
    es.top_ct = m2.top
    return CompareM3([blinded[k] for k in permutation])


def keyh_zero_stage(ks: KeyholderSession, m3: CompareM3) -> CompareM4:
    """密钥方：delta_B = 1 当且仅当存在某个 e_i 加密 0，返回载体密文 [[delta_B]]"""
    ks.advance(KeyholderStage.AWAIT_M3, KeyholderStage.AWAIT_M5)
    try:
        # 全部检测，不提前退出
        zeros = [dgk_is_zero(ks.bit_key, c) for c in m3.blinded]
    except WrongKeyError as e:
        ks.stage = KeyholderStage.CLOSED
        raise ComparisonAbortedError(f"M3 密文不在逐位密钥下: {e}") from e
    delta_b = 1 if any(zeros) else 0
    return CompareM4(encrypt(ks.carrier_key.public_key, delta_b, ks.rng))


def eval_mask_result(es: EvaluatorSession, m4: CompareM4,
                     top_ct: Optional[Ciphertext] = None) -> CompareM5:
    """
    求值方：去方向盲化得到借位 [[beta]]，计算
    [[t]] = [[top]] - E(floor(r / 2^l)) - [[beta]]，返回 [[t + gamma]]
    """
    es.advance(EvaluatorStage.AWAIT_M4, EvaluatorStage.AWAIT_M6)
    top_ct = top_ct if top_ct is not None else es.top_ct
    carrier = es.carrier_key
    M = carrier.plaintext_modulus
    rng = es.rng

    if es.s == -1:
        beta = m4.borrow
    else:
        beta = he_add(encrypt(carrier, 1, rng), he_scalar_mul(m4.borrow, M - 1))

    t_ct = he_sub(top_ct, encrypt(carrier, es.r >> es.params.l, rng))
    t_ct = he_add(t_ct, he_scalar_mul(beta, -1))
    return CompareM5(he_add(t_ct, encrypt(carrier, es.gamma, rng)))


def keyh_unmask(ks: KeyholderSession, m5: CompareM5) -> CompareM6:
    """密钥方：解密 t + gamma 并以明文返回，随后关闭会话"""
    ks.advance(KeyholderStage.AWAIT_M5, KeyholderStage.CLOSED)
    try:
        return CompareM6(decrypt(ks.carrier_key, m5.masked_result))
    except (DecryptionError, WrongKeyError, PlaintextRangeError) as e:
        raise ComparisonAbortedError(f"M5 解密失败: {e}") from e


def eval_finish(es: EvaluatorSession, m6: CompareM6) -> int:
    """
    求值方：t = (w - gamma) mod M

    Returns:
        t = (x >= y)，取值 0 或 1

    Raises:
        ProtocolIntegrityError: t 不是比特
    """
    es.advance(EvaluatorStage.AWAIT_M6, EvaluatorStage.DONE)
    t = (m6.w - es.gamma) % es.carrier_key.plaintext_modulus
    if t not in (0, 1):
        raise ProtocolIntegrityError(f"比较结果不是比特（输入可能超出 2^{es.params.l}）")
    record('comparisons')
    return t


# ---------------------------------------------------------------------------
# 信道与组合调用
# ---------------------------------------------------------------------------

class KeyholderChannel(Protocol):
    """求值方到密钥方的请求/应答信道"""

    def exchange(self, message: ComparisonMessage) -> ComparisonMessage: ...


class LocalKeyholderChannel:
    """进程内信道：直接驱动本地 KeyholderSession（测试与单机基准使用）"""

    def __init__(self, carrier_key: AnyPrivateKey, bit_key: DGKPrivateKey,
                 params: ComparisonParams, rng: Optional[RandomSource] = None):
        self.carrier_key = carrier_key
        self.bit_key = bit_key
        self.params = params
        self.rng = rng
        self.session: Optional[KeyholderSession] = None
        self.sessions_opened = 0

    def exchange(self, message: ComparisonMessage) -> ComparisonMessage:
        if isinstance(message, CompareM1):
            self.session = KeyholderSession(self.carrier_key, self.bit_key, rng=self.rng)
            self.sessions_opened += 1
            return keyh_mask_decompose(self.session, message, self.params)
        if self.session is None:
            raise ProtocolStageError(f"收到 {message.msg_type} 但没有进行中的比较会话")
        if isinstance(message, CompareM3):
            return keyh_zero_stage(self.session, message)
        if isinstance(message, CompareM5):
            reply = keyh_unmask(self.session, message)
            self.session = None
            return reply
        raise ProtocolStageError(f"密钥方不接受 {message.msg_type}")


def _expect(reply: ComparisonMessage, cls) -> Any:
    if not isinstance(reply, cls):
        raise ComparisonAbortedError(f"期望 {cls.msg_type}，收到 {getattr(reply, 'msg_type', type(reply).__name__)}")
    return reply


def joint_compare(cx: Ciphertext, cy: Ciphertext, params: ComparisonParams,
                  bit_key: DGKPublicKey, channel: KeyholderChannel,
                  rng: Optional[RandomSource] = None) -> int:
    """
    驱动完整的六条消息交换

    Returns:
        t = (x >= y)
    """
    session, m1 = eval_start(cx, cy, params, bit_key, rng)
    m2 = _expect(channel.exchange(m1), CompareM2)
    m3 = eval_bit_stage(session, m2, params)
    m4 = _expect(channel.exchange(m3), CompareM4)
    if m4.borrow.key_fingerprint != session.carrier_key.key_fingerprint:
        raise ComparisonAbortedError("M4 不在载体密钥下")
    m5 = eval_mask_result(session, m4)
    m6 = _expect(channel.exchange(m5), CompareM6)
    t = eval_finish(session, m6)
    logger.debug(f"比较完成: t={t}")
    return t
