"""时区工具模块

系统统一使用 UTC 记录时间（日志、指纹时间戳、基准测试报告）。
"""

from datetime import datetime, timezone, timedelta

UTC_TZ = timezone.utc


def now_utc() -> datetime:
    """获取当前 UTC 时间（带时区信息）。"""
    return datetime.now(UTC_TZ)


def now_utc_str(fmt: str = "%Y-%m-%d %H:%M:%S") -> str:
    """获取当前 UTC 时间的字符串表示。"""
    return now_utc().strftime(fmt)


def now_utc_iso() -> str:
    """获取当前 UTC 时间的 ISO-8601 字符串（精确到秒）。"""
    return now_utc().strftime("%Y-%m-%dT%H:%M:%SZ")


def iso_after(base: str, seconds: int) -> str:
    """返回 base 之后若干秒的 ISO-8601 时间戳。

    用于生成确定性的合成指纹时间戳，base 形如 '2019-06-01T12:00:00Z'。
    """
    dt = datetime.strptime(base, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=UTC_TZ)
    return (dt + timedelta(seconds=seconds)).strftime("%Y-%m-%dT%H:%M:%SZ")
