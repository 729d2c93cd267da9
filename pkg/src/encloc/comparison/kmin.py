"""
基于加密比较的 k 次冒泡选择

每一轮把当前最小值移到未排序区间的最右端，k 轮后 rows[n-p] 为第 p 小的元素。
比较次数恰好为 sum_{i<k} (n - i - 1)，复杂度 O(nk)。
"""

from dataclasses import dataclass
from operator import attrgetter
from typing import Any, Callable, List, Optional, Sequence

from loguru import logger
from tqdm import tqdm

from ..crypto.ciphertext import Ciphertext
from ..crypto.dgk import DGKPublicKey
from ..crypto.number import RandomSource
from ..exceptions import ComparisonAbortedError, LocalizationParameterError
from .params import ComparisonParams
from .protocol import KeyholderChannel, joint_compare


@dataclass
class SelectionResult:
    """k 次冒泡后的结果"""
    rows: List[Any]       # 部分排序后的完整序列
    winners: List[Any]    # 第 1..k 小，升序
    comparisons: int


def expected_comparisons(n: int, k: int) -> int:
    """k 轮冒泡所需的比较次数"""
    return sum(n - i - 1 for i in range(k))


def k_min_select(rows: Sequence[Any], k: int, channel: KeyholderChannel,
                 params: ComparisonParams, bit_key: DGKPublicKey,
                 distance_of: Callable[[Any], Ciphertext] = attrgetter('dist'),
                 rng: Optional[RandomSource] = None,
                 show_progress: bool = False) -> SelectionResult:
    """
    k 轮冒泡选择

    第 i 轮中对 j = 0..n-i-2 比较 rows[j] 与 rows[j+1]，t = 0（rows[j] 更小）时交换，
    相等时不交换，因此等值元素中位置靠后者胜出。

    Args:
        rows: 携带加密距离的行
        k: 选出的个数，1 <= k <= n
        channel: 到密钥方的信道
        params: 比较参数
        bit_key: 逐位阶段的 DGK 公钥
        distance_of: 从行中取出距离密文
        rng: 随机源
        show_progress: 是否显示进度条

    Returns:
        SelectionResult
    """
    rows = list(rows)
    n = len(rows)
    if n < 1:
        raise LocalizationParameterError("待选择的行为空")
    if not 1 <= k <= n:
        raise LocalizationParameterError(f"k 必须位于 [1, {n}]: {k}")

    total = expected_comparisons(n, k)
    comparisons = 0
    with tqdm(total=total, desc="加密冒泡", unit="cmp", disable=not show_progress) as pbar:
        for i in range(k):
            for j in range(n - i - 1):
                try:
                    t = joint_compare(distance_of(rows[j]), distance_of(rows[j + 1]),
                                      params, bit_key, channel, rng)
                except ComparisonAbortedError:
                    logger.error(f"第 {i + 1} 轮第 {j + 1} 次比较中止，已完成 {comparisons}/{total}")
                    raise
                comparisons += 1
                pbar.update(1)
                if t == 0:
                    rows[j], rows[j + 1] = rows[j + 1], rows[j]

    winners = [rows[n - 1 - p] for p in range(k)]
    logger.debug(f"k={k} 选择完成: n={n}, 比较 {comparisons} 次")
    return SelectionResult(rows=rows, winners=winners, comparisons=comparisons)
