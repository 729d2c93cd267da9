import sys
import os
from pathlib import Path
from typing import Optional
from loguru import logger

from .timezone import UTC_TZ

# 默认日志配置
DEFAULT_LOG_LEVEL = 'INFO'
DEFAULT_LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {module}:{function}:{line} | {message}"
DEFAULT_LOG_FILE = './logs/encloc.log'
DEFAULT_LOG_ROTATION = '10 MB'
DEFAULT_LOG_RETENTION = '30 days'


def utc_time_formatter(record):
    """将日志时间转换为 UTC"""
    record["time"] = record["time"].astimezone(UTC_TZ)


# 立即配置 loguru 使用 UTC（在任何其他模块导入 logger 之前）
logger.configure(patcher=utc_time_formatter)


def setup_logger(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """设置日志配置

    不依赖 config 模块，调用方把 logging 配置段作为参数传入。
    环境变量 ENCLOC_LOG_LEVEL / ENCLOC_LOG_FILE 优先于参数，
    日志文件为空字符串时不写文件（测试环境使用）。
    """
    # 移除默认处理器
    logger.remove()
    logger.configure(patcher=utc_time_formatter)

    log_level = os.environ.get('ENCLOC_LOG_LEVEL') or level or DEFAULT_LOG_LEVEL
    log_format = DEFAULT_LOG_FORMAT
    log_file = os.environ.get('ENCLOC_LOG_FILE', log_file if log_file is not None else DEFAULT_LOG_FILE)

    # 控制台输出
    logger.add(
        sys.stderr,
        format=log_format,
        level=log_level,
        colorize=True
    )

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_file,
            format=log_format,
            level=log_level,
            rotation=DEFAULT_LOG_ROTATION,
            retention=DEFAULT_LOG_RETENTION,
            encoding='utf-8',
            enqueue=True
        )

    logger.debug("日志系统初始化完成")
