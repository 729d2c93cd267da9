"""
比较协议参数

l 为输入位数上界（x, y < 2^l），sigma 为统计掩码位数。
"""

from dataclasses import dataclass

from ..crypto.ciphertext import SCHEME_DGK, SCHEME_PAILLIER, SCHEMES
from ..exceptions import ComparisonSetupError, PlaintextOverflowError

# 指纹 RSS 的最大差值 |v_c|
MAX_RSS_DELTA = 120
MAX_L = 32
MIN_SIGMA = 16

DEFAULT_SIGMA = {
    SCHEME_PAILLIER: 80,
    # DGK 载体的解密受小步大步法限制，只能使用较窄的掩码
    SCHEME_DGK: 16,
}


def comparison_bit_length(n_aps: int, max_rss_delta: int = MAX_RSS_DELTA, cap: int = MAX_L) -> int:
    """
    由查找表列数计算 l = ceil(log2(N_AP · delta²)) + 1

    Args:
        n_aps: AP 列数
        max_rss_delta: 单列 RSS 的最大差值
        cap: l 的上限

    Returns:
        l

    Raises:
        PlaintextOverflowError: 所需 l 超过上限
    """
    if n_aps < 1:
        raise ComparisonSetupError(f"AP 列数必须 >= 1: {n_aps}")
    bound = n_aps * max_rss_delta * max_rss_delta
    l = (bound - 1).bit_length() + 1
    if l > cap:
        raise PlaintextOverflowError(f"距离上界需要 l={l} 位，超过上限 {cap}")
    return l


def dgk_carrier_u_bits(l: int, sigma: int = DEFAULT_SIGMA[SCHEME_DGK]) -> int:
    """DGK 作为载体时 u 的位数：l + 1 + sigma + 2"""
    return l + 1 + sigma + 2


@dataclass(frozen=True)
class ComparisonParams:
    """比较协议参数"""
    l: int
    sigma: int
    carrier: str
    bit_scheme: str = SCHEME_DGK

    def __post_init__(self):
        if self.carrier not in SCHEMES:
            raise ComparisonSetupError(f"未知载体方案: {self.carrier}")
        if self.bit_scheme != SCHEME_DGK:
            raise ComparisonSetupError("逐位比较阶段必须使用 DGK")
        if self.l < 1:
            raise ComparisonSetupError(f"l 必须 >= 1: {self.l}")
        if self.sigma < MIN_SIGMA:
            raise ComparisonSetupError(f"sigma 必须 >= {MIN_SIGMA}: {self.sigma}")

    @classmethod
    def for_carrier(cls, carrier: str, l: int, sigma: int = None) -> 'ComparisonParams':
        """按载体方案选择默认 sigma"""
        if sigma is None:
            sigma = DEFAULT_SIGMA.get(carrier, MIN_SIGMA)
        return cls(l=l, sigma=sigma, carrier=carrier)

    @property
    def two_l(self) -> int:
        return 1 << self.l

    @property
    def mask_bound(self) -> int:
        """掩码 r 的取值上界 2^(l+1+sigma)"""
        return 1 << (self.l + 1 + self.sigma)

    @property
    def n_bits(self) -> int:
        """逐位阶段的位数 l + 1"""
        return self.l + 1

    def validate(self, carrier_key, bit_key) -> None:
        """
        校验明文空间约束

        Args:
            carrier_key: 载体方案公钥
            bit_key: 逐位阶段的 DGK 公钥

        Raises:
            ComparisonSetupError: 约束不满足
        """
        if carrier_key.scheme != self.carrier:
            raise ComparisonSetupError(f"载体密钥方案 {carrier_key.scheme} 与参数 {self.carrier} 不符")
        if bit_key.scheme != SCHEME_DGK:
            raise ComparisonSetupError("逐位阶段密钥必须为 DGK")
        M = carrier_key.plaintext_modulus
        if M <= (1 << (self.l + 1)) + self.mask_bound:
            raise ComparisonSetupError(
                f"载体明文空间过小: M 为 {M.bit_length()} 位，需要大于 2^{self.l + 1} + 2^{self.l + 1 + self.sigma}"
            )
        if bit_key.u <= 3 * (self.l + 1) + 6:
            raise ComparisonSetupError(
                f"逐位阶段 DGK 的 u={bit_key.u} 过小，需要大于 {3 * (self.l + 1) + 6}"
            )
