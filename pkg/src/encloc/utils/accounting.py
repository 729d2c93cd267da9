"""
操作计数模块

按执行上下文（线程）统计加密、解密、零值检测与比较次数，
作为基准测试中“能耗”的替代指标。
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, asdict
from typing import Dict, Iterator, Optional

OPERATION_NAMES = ('encryptions', 'decryptions', 'zero_checks', 'comparisons')


@dataclass
class OpStats:
    """单侧操作计数"""
    encryptions: int = 0
    decryptions: int = 0
    zero_checks: int = 0
    comparisons: int = 0

    def add(self, name: str, count: int = 1) -> None:
        setattr(self, name, getattr(self, name) + count)

    def merge(self, other: 'OpStats') -> None:
        for name in OPERATION_NAMES:
            self.add(name, getattr(other, name))

    def snapshot(self) -> 'OpStats':
        return OpStats(**asdict(self))

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


_current_stats: ContextVar[Optional[OpStats]] = ContextVar('encloc_op_stats', default=None)


@contextmanager
def track_operations(stats: Optional[OpStats] = None) -> Iterator[OpStats]:
    """
    在当前上下文内统计操作次数

    Args:
        stats: 累加目标，None 时新建

    Yields:
        正在累加的 OpStats
    """
    stats = stats if stats is not None else OpStats()
    token = _current_stats.set(stats)
    try:
        yield stats
    finally:
        _current_stats.reset(token)


def record(name: str, count: int = 1) -> None:
    """记录一次操作；当前上下文未开启统计时忽略"""
    stats = _current_stats.get()
    if stats is not None:
        stats.add(name, count)
