"""
线路协议

每条报文为一行 JSON：{"v": 1, "type": ..., "sid": ..., "body": {...}}，以 '\\n' 结尾，单行不超过 16 MiB。
大整数以无符号、小写、无前导零的十六进制字符串传输；密文记录为 {scheme, c, kf}。
"""

import json
import re
import socket
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from loguru import logger

from ..exceptions import FrameDecodeError, FrameSizeError, UnknownMessageTypeError

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024

MESSAGE_TYPES = frozenset({
    'hello', 'columns', 'scan',
    'cmp1', 'cmp2', 'cmp3', 'cmp4', 'cmp5', 'cmp6',
    'result', 'error',
})

# 这些字段的值必须是规范十六进制
HEX_FIELDS = frozenset({'c', 'n', 'g', 'h', 'u', 'w'})
CANONICAL_HEX = re.compile(r'^(0|[1-9a-f][0-9a-f]*)$')


@dataclass
class WireMessage:
    type: str
    sid: str
    body: Dict[str, Any] = field(default_factory=dict)
    v: int = PROTOCOL_VERSION


def _find_offset(line: bytes, needle: str) -> int:
    pos = line.find(needle.encode('utf-8'))
    return max(pos, 0)


def _check_hex_fields(value: Any, line: bytes, path: str = 'body') -> None:
    """递归检查 HEX_FIELDS 中的值是否为规范十六进制"""
    if isinstance(value, dict):
        for key, item in value.items():
            if key in HEX_FIELDS:
                if not isinstance(item, str) or not CANONICAL_HEX.match(item):
                    raise FrameDecodeError(f"{path}.{key} 不是规范十六进制: {item!r}",
                                           offset=_find_offset(line, json.dumps(item)))
            else:
                _check_hex_fields(item, line, f"{path}.{key}")
    elif isinstance(value, list):
        for i, item in enumerate(value):
            _check_hex_fields(item, line, f"{path}[{i}]")


def frame_encode(msg: WireMessage) -> bytes:
    """
    编码为一行

    Raises:
        UnknownMessageTypeError: 未知报文类型
        FrameSizeError: 超过单行上限
    """
    if msg.type not in MESSAGE_TYPES:
        raise UnknownMessageTypeError(f"未知报文类型: {msg.type}")
    data = json.dumps(
        {'v': msg.v, 'type': msg.type, 'sid': msg.sid, 'body': msg.body},
        ensure_ascii=False, separators=(',', ':'),
    ).encode('utf-8') + b'\n'
    if len(data) > MAX_FRAME_BYTES:
        raise FrameSizeError(f"报文 {msg.type} 长度 {len(data)} 超过上限 {MAX_FRAME_BYTES}")
    return data


def frame_decode(line: Union[bytes, str]) -> WireMessage:
    """
    解码一行

    Raises:
        FrameSizeError: 超过单行上限
        FrameDecodeError: JSON 或结构错误，offset 为出错的字节偏移
        UnknownMessageTypeError: 未知报文类型
    """
    if isinstance(line, str):
        line = line.encode('utf-8')
    if len(line) > MAX_FRAME_BYTES:
        raise FrameSizeError(f"报文长度 {len(line)} 超过上限 {MAX_FRAME_BYTES}")
    line = line.rstrip(b'\r\n')

    try:
        obj = json.loads(line.decode('utf-8'))
    except UnicodeDecodeError as e:
        raise FrameDecodeError(f"非 UTF-8 数据: {e.reason}", offset=e.start) from e
    except json.JSONDecodeError as e:
        raise FrameDecodeError(f"JSON 解析失败: {e.msg}", offset=e.pos) from e

    if not isinstance(obj, dict):
        raise FrameDecodeError("报文必须是 JSON 对象", offset=0)
    missing = [k for k in ('v', 'type', 'sid', 'body') if k not in obj]
    if missing:
        raise FrameDecodeError(f"报文缺少字段: {', '.join(missing)}", offset=0)
    if obj['v'] != PROTOCOL_VERSION:
        raise FrameDecodeError(f"不支持的协议版本: {obj['v']}", offset=_find_offset(line, '"v"'))
    if not isinstance(obj['type'], str) or obj['type'] not in MESSAGE_TYPES:
        raise UnknownMessageTypeError(f"未知报文类型: {obj['type']!r}", offset=_find_offset(line, '"type"'))
    if not isinstance(obj['sid'], str):
        raise FrameDecodeError("sid 必须是字符串", offset=_find_offset(line, '"sid"'))
    if not isinstance(obj['body'], dict):
        raise FrameDecodeError("body 必须是 JSON 对象", offset=_find_offset(line, '"body"'))

    _check_hex_fields(obj['body'], line)
    return WireMessage(type=obj['type'], sid=obj['sid'], body=obj['body'], v=obj['v'])


def error_message(sid: str, code: str, message: str, stage: Optional[str] = None) -> WireMessage:
    return WireMessage(type='error', sid=sid, body={'code': code, 'message': message, 'stage': stage})


class MessageStream:
    """
    套接字上的报文流，按报文类型统计收发字节数

    Attributes:
        bytes_sent / bytes_received: 报文类型 -> 字节数（含换行）
        count_sent / count_received: 报文类型 -> 条数
    """

    def __init__(self, sock: socket.socket, peer: str = ''):
        self.sock = sock
        self.peer = peer
        self._reader = sock.makefile('rb')
        self.bytes_sent: Counter = Counter()
        self.bytes_received: Counter = Counter()
        self.count_sent: Counter = Counter()
        self.count_received: Counter = Counter()

    @property
    def total_sent(self) -> int:
        return sum(self.bytes_sent.values())

    @property
    def total_received(self) -> int:
        return sum(self.bytes_received.values())

    def send(self, msg: WireMessage) -> int:
        data = frame_encode(msg)
        self.sock.sendall(data)
        self.bytes_sent[msg.type] += len(data)
        self.count_sent[msg.type] += 1
        logger.trace(f"-> {self.peer} {msg.type} ({len(data)} B)")
        return len(data)

    def receive(self) -> Optional[WireMessage]:
        """
        读取一条报文

        Returns:
            WireMessage；对端关闭连接时返回 None
        """
        line = self._reader.readline(MAX_FRAME_BYTES + 1)
        if not line:
            return None
        if len(line) > MAX_FRAME_BYTES:
            raise FrameSizeError(f"收到的报文超过上限 {MAX_FRAME_BYTES}")
        if not line.endswith(b'\n'):
            raise FrameDecodeError("连接在报文中途关闭", offset=len(line))
        msg = frame_decode(line)
        self.bytes_received[msg.type] += len(line)
        self.count_received[msg.type] += 1
        logger.trace(f"<- {self.peer} {msg.type} ({len(line)} B)")
        return msg

    def traffic(self) -> Dict[str, Dict[str, int]]:
        return {
            'bytes_sent': dict(self.bytes_sent),
            'bytes_received': dict(self.bytes_received),
            'count_sent': dict(self.count_sent),
            'count_received': dict(self.count_received),
        }

    def close(self) -> None:
        try:
            self._reader.close()
        finally:
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.sock.close()


def parse_address(address: str) -> Tuple[str, int]:
    """'host:port' -> (host, port)"""
    host, sep, port = address.rpartition(':')
    if not sep or not port.isdigit():
        raise ValueError(f"地址格式应为 host:port: {address!r}")
    return host or '127.0.0.1', int(port)
