"""
异常定义

库代码统一抛出 EnclocError 的子类；值类错误同时继承 ValueError，
便于调用方按通用方式捕获。
"""

from typing import List, Optional, Tuple


class EnclocError(Exception):
    """encloc 基础异常"""


# ---------------------------------------------------------------------------
# 密码学
# ---------------------------------------------------------------------------

class KeyGenerationError(EnclocError, ValueError):
    """密钥参数不合法或无法生成"""


class PlaintextRangeError(EnclocError, ValueError):
    """明文或密文超出合法范围"""


class PlaintextOverflowError(PlaintextRangeError):
    """有符号编码溢出：|m| >= M/2，明文空间耗尽"""


class WrongKeyError(EnclocError, ValueError):
    """密文与密钥指纹不匹配"""


class IncompatibleCiphertextError(EnclocError, ValueError):
    """不同方案或不同密钥下的密文不能组合"""


class DecryptionError(EnclocError):
    """解密失败（例如离散对数不存在）"""


class KeyFormatError(EnclocError, ValueError):
    """密钥记录格式错误"""


# ---------------------------------------------------------------------------
# 加密比较协议
# ---------------------------------------------------------------------------

class ComparisonSetupError(EnclocError, ValueError):
    """比较参数不满足明文空间约束"""


class ProtocolStageError(EnclocError, RuntimeError):
    """会话阶段顺序错误"""


class ProtocolIntegrityError(EnclocError):
    """比较结果不是比特，通常说明上游违反了 l 位约束"""


class ComparisonAbortedError(EnclocError):
    """比较会话中途中止（信道失败或对端报错）"""


# ---------------------------------------------------------------------------
# 指纹库
# ---------------------------------------------------------------------------

class IngestError(EnclocError, ValueError):
    """CSV 导入失败，附带按行号排列的错误列表"""

    def __init__(self, errors: List[Tuple[int, str]]):
        self.errors = errors
        preview = '; '.join(f"第{line}行: {msg}" for line, msg in errors[:5])
        more = f" ...（共{len(errors)}处错误）" if len(errors) > 5 else ""
        super().__init__(f"指纹CSV导入失败: {preview}{more}")


class EmptyTableError(EnclocError, ValueError):
    """过滤后没有剩余 AP 列或没有指纹行"""


# ---------------------------------------------------------------------------
# 定位
# ---------------------------------------------------------------------------

class LocalizationError(EnclocError):
    """定位失败"""


class LocalizationParameterError(LocalizationError, ValueError):
    """定位参数错误（例如 k 超过指纹数）"""


# ---------------------------------------------------------------------------
# 网络协议
# ---------------------------------------------------------------------------

class ProtocolError(EnclocError):
    """线路协议错误"""

    code = 'protocol_error'


class FrameDecodeError(ProtocolError, ValueError):
    """报文解析失败，offset 为出错位置（字节偏移）"""

    code = 'decode_error'

    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"{message} (offset={offset})")


class UnknownMessageTypeError(FrameDecodeError):
    """未知报文类型"""

    code = 'unknown_type'


class FrameSizeError(ProtocolError, ValueError):
    """报文超过单行上限"""

    code = 'frame_too_large'


class ProtocolOrderError(ProtocolError):
    """报文顺序不符合状态机"""

    code = 'protocol_order'


class RemoteError(ProtocolError):
    """对端返回 error 报文"""

    code = 'remote_error'

    def __init__(self, remote_code: str, message: str, stage: Optional[str] = None):
        self.remote_code = remote_code
        self.stage = stage
        super().__init__(f"对端错误[{remote_code}]@{stage}: {message}")


class ClientError(EnclocError):
    """客户端失败，stage 标明出错阶段"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
