"""
定位服务端

每个连接一个线程，连接内按状态机顺序处理报文：

    hello -> columns -> scan -> [cmp1..cmp6]* -> result -> scan -> ...

任何越序报文都会得到 error 应答并关闭连接；查找表在所有连接间只读共享。
"""

import socketserver
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from loguru import logger

from ..comparison.params import ComparisonParams, comparison_bit_length
from ..comparison.protocol import EXPECTED_REPLY, MESSAGE_CLASSES, ComparisonMessage
from ..crypto.ciphertext import SCHEME_DGK, ciphertext_to_record, make_keyring
from ..crypto.keystore import public_key_from_record
from ..data_storage.fingerprint_db import LookupTable, build_lookup_table, ingest_csv
from ..data_storage.parquet_storage import ParquetStorage
from ..exceptions import (
    ComparisonAbortedError,
    ComparisonSetupError,
    EmptyTableError,
    EnclocError,
    IncompatibleCiphertextError,
    KeyFormatError,
    LocalizationError,
    LocalizationParameterError,
    PlaintextRangeError,
    ProtocolError,
    ProtocolOrderError,
    WrongKeyError,
)
from ..localization.distance import EncryptedScan
from ..localization.localizer import localize_client_mode, localize_server_mode
from ..utils.accounting import OpStats, track_operations
from .settings import MODE_CLIENT, MODE_SERVER, MODES, ServerConfig
from .wire import MessageStream, WireMessage, error_message, parse_address


class ConnectionStage(Enum):
    AWAIT_HELLO = 'hello'
    AWAIT_SCAN = 'scan'
    COMPARING = 'compare'
    CLOSED = 'closed'


@dataclass
class SessionSummary:
    """一次定位（一条 scan）的服务端记录"""
    sid: str
    peer: str
    scheme: str
    mode: str
    k: int
    n_fingerprints: int
    n_aps: int
    ok: bool
    comparisons: int = 0
    elapsed_ms: float = 0.0
    ops: Dict[str, int] = field(default_factory=dict)
    traffic: Dict[str, Dict[str, int]] = field(default_factory=dict)
    error: Optional[str] = None


def error_code(exc: BaseException) -> str:
    """异常 -> error 报文中的 code"""
    if isinstance(exc, ProtocolError):
        return exc.code
    if isinstance(exc, LocalizationParameterError):
        return 'bad_parameter'
    if isinstance(exc, (ComparisonSetupError, PlaintextRangeError)):
        return 'setup_error'
    if isinstance(exc, (WrongKeyError, IncompatibleCiphertextError, KeyFormatError)):
        return 'bad_key'
    if isinstance(exc, (LocalizationError, ComparisonAbortedError)):
        return 'comparison_aborted'
    return 'internal_error'


class NetworkKeyholderChannel:
    """通过连接把比较请求转发给客户端（密钥方）"""

    def __init__(self, stream: MessageStream, sid: str, keyring):
        self.stream = stream
        self.sid = sid
        self.keyring = keyring
        self.sessions = 0

    def exchange(self, message: ComparisonMessage) -> ComparisonMessage:
        if message.msg_type == 'cmp1':
            self.sessions += 1
        self.stream.send(WireMessage(type=message.msg_type, sid=self.sid, body=message.to_body()))
        reply = self.stream.receive()
        if reply is None:
            raise ComparisonAbortedError("密钥方在比较过程中断开连接")
        if reply.type == 'error':
            raise ComparisonAbortedError(f"密钥方报告错误: {reply.body.get('message')}")
        expected = EXPECTED_REPLY[message.msg_type]
        if reply.type != expected:
            raise ProtocolOrderError(f"比较中期望 {expected}，收到 {reply.type}")
        try:
            return MESSAGE_CLASSES[reply.type].from_body(reply.body, self.keyring)
        except (KeyError, TypeError, ValueError) as e:
            raise ComparisonAbortedError(f"{reply.type} 报文内容错误: {e}") from e


class ConnectionSession:
    """单个连接的状态机"""

    def __init__(self, server: 'LocalizationServer', stream: MessageStream, peer: str):
        self.server = server
        self.stream = stream
        self.peer = peer
        self.stage = ConnectionStage.AWAIT_HELLO
        self.sid = ''
        self.scheme = ''
        self.mode = ''
        self.k = 1
        self.carrier_key = None
        self.bit_key = None
        self.keyring = None
        self.params: Optional[ComparisonParams] = None

    @property
    def table(self) -> LookupTable:
        return self.server.table

    def run(self) -> None:
        logger.info(f"连接建立: {self.peer}")
        try:
            while self.stage is not ConnectionStage.CLOSED:
                msg = self.stream.receive()
                if msg is None:
                    break
                self.dispatch(msg)
        except EnclocError as e:
            self.fail(e)
        except (ConnectionError, OSError) as e:
            logger.warning(f"连接 {self.peer} 异常断开: {e}")
        except Exception as e:
            logger.exception(f"处理连接 {self.peer} 时发生未预期错误")
            self.fail(e)
        finally:
            self.stage = ConnectionStage.CLOSED
            self.stream.close()
            logger.info(f"连接关闭: {self.peer}")

    def fail(self, exc: BaseException) -> None:
        code = error_code(exc)
        logger.error(f"[{self.sid or '-'}] {self.stage.value} 阶段失败 ({code}): {exc}")
        try:
            self.stream.send(error_message(self.sid, code, str(exc), self.stage.value))
        except (OSError, ProtocolError):
            pass
        self.stage = ConnectionStage.CLOSED

    def dispatch(self, msg: WireMessage) -> None:
        if msg.type == 'hello' and self.stage is ConnectionStage.AWAIT_HELLO:
            self.on_hello(msg)
        elif msg.type == 'scan' and self.stage is ConnectionStage.AWAIT_SCAN:
            self.on_scan(msg)
        elif msg.type == 'error':
            logger.warning(f"[{self.sid}] 客户端报告错误: {msg.body.get('message')}")
            self.stage = ConnectionStage.CLOSED
        else:
            raise ProtocolOrderError(f"{self.stage.value} 阶段不接受 {msg.type} 报文")

    def on_hello(self, msg: WireMessage) -> None:
        body = msg.body
        self.sid = msg.sid or uuid.uuid4().hex
        self.scheme = body.get('scheme', '')
        self.mode = body.get('mode', '')
        try:
            self.k = int(body.get('k', 1))
        except (TypeError, ValueError):
            raise LocalizationParameterError(f"k 不是整数: {body.get('k')!r}")
        if 'carrier' not in body:
            raise KeyFormatError("hello 缺少载体公钥")
        if self.mode not in MODES:
            raise LocalizationParameterError(f"未知模式: {self.mode!r}")
        if not 1 <= self.k <= self.table.n_fingerprints:
            raise LocalizationParameterError(f"k 必须位于 [1, {self.table.n_fingerprints}]: {self.k}")

        self.carrier_key = public_key_from_record(body['carrier'])
        if self.carrier_key.scheme != self.scheme:
            raise IncompatibleCiphertextError(f"hello 中方案 {self.scheme} 与载体公钥 {self.carrier_key.scheme} 不符")

        cfg = self.server.config
        l = comparison_bit_length(self.table.n_aps, cap=cfg.max_l)
        self.params = ComparisonParams.for_carrier(self.scheme, l, cfg.sigma_for(self.scheme))
        if self.mode == MODE_SERVER:
            if 'bit_key' not in body:
                raise KeyFormatError("服务器模式需要逐位比较的 DGK 公钥")
            self.bit_key = public_key_from_record(body['bit_key'])
            if self.bit_key.scheme != SCHEME_DGK:
                raise KeyFormatError("逐位比较公钥必须为 DGK")
            self.params.validate(self.carrier_key, self.bit_key)
            self.keyring = make_keyring(self.carrier_key, self.bit_key)
        else:
            if self.carrier_key.plaintext_modulus <= (1 << (l + 1)):
                raise ComparisonSetupError(f"载体明文空间不足以容纳 {l} 位距离")
            self.keyring = make_keyring(self.carrier_key)

        self.stream.send(WireMessage(type='columns', sid=self.sid, body={
            'ap_columns': list(self.table.ap_columns),
            'l': self.params.l,
            'sigma': self.params.sigma,
            'v_c': self.table.v_c,
        }))
        self.stage = ConnectionStage.AWAIT_SCAN
        logger.info(f"[{self.sid}] hello: scheme={self.scheme}, mode={self.mode}, k={self.k}, l={l}")

    def on_scan(self, msg: WireMessage) -> None:
        try:
            enc_scan = EncryptedScan.from_body(msg.body, self.keyring)
        except (KeyError, TypeError) as e:
            raise KeyFormatError(f"scan 报文内容错误: {e}") from e
        if enc_scan.s3.key_fingerprint != self.carrier_key.key_fingerprint:
            raise WrongKeyError("scan 不在 hello 声明的载体公钥下")

        started = time.perf_counter()
        bytes_before = self.stream.traffic()
        self.stage = ConnectionStage.COMPARING
        ops = OpStats()
        comparisons = 0
        try:
            with track_operations(ops):
                if self.mode == MODE_SERVER:
                    channel = NetworkKeyholderChannel(self.stream, self.sid, self.keyring)
                    result = localize_server_mode(self.table, enc_scan, self.k, channel, self.bit_key,
                                                  self.params, show_progress=self.server.config.show_progress)
                    comparisons = result.comparisons
                    body: Dict[str, Any] = {'mode': MODE_SERVER, 'coords': [
                        {'x': ciphertext_to_record(cx), 'y': ciphertext_to_record(cy)} for cx, cy in result.coords
                    ]}
                else:
                    rows = localize_client_mode(self.table, enc_scan)
                    body = {'mode': MODE_CLIENT, 'rows': [
                        {'x': row.coord[0], 'y': row.coord[1], 'dist': ciphertext_to_record(row.dist)}
                        for row in rows
                    ]}
            self.stream.send(WireMessage(type='result', sid=self.sid, body=body))
        except Exception as e:
            self.server.record_summary(self._summary(False, started, ops, comparisons, bytes_before, str(e)))
            raise

        self.server.record_summary(self._summary(True, started, ops, comparisons, bytes_before))
        self.stage = ConnectionStage.AWAIT_SCAN

    def _summary(self, ok: bool, started: float, ops: OpStats, comparisons: int,
                 bytes_before: Dict[str, Dict[str, int]], error: Optional[str] = None) -> SessionSummary:
        after = self.stream.traffic()
        traffic = {
            key: {t: after[key].get(t, 0) - bytes_before[key].get(t, 0) for t in after[key]}
            for key in after
        }
        return SessionSummary(
            sid=self.sid, peer=self.peer, scheme=self.scheme, mode=self.mode, k=self.k,
            n_fingerprints=self.table.n_fingerprints, n_aps=self.table.n_aps, ok=ok,
            comparisons=comparisons, elapsed_ms=(time.perf_counter() - started) * 1000,
            ops=ops.to_dict(), traffic=traffic, error=error,
        )


class LocalizationRequestHandler(socketserver.BaseRequestHandler):
    server: 'LocalizationServer'

    def handle(self) -> None:
        peer = '%s:%s' % self.client_address[:2]
        ConnectionSession(self.server, MessageStream(self.request, peer), peer).run()


class LocalizationServer(socketserver.ThreadingTCPServer):
    """多线程定位服务端，查找表只读共享"""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, config: ServerConfig, table: LookupTable):
        self.config = config
        self.table = table
        self.summaries: List[SessionSummary] = []
        self._summary_cond = threading.Condition()
        self._thread: Optional[threading.Thread] = None
        super().__init__(parse_address(config.listen), LocalizationRequestHandler)

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def record_summary(self, summary: SessionSummary) -> None:
        with self._summary_cond:
            self.summaries.append(summary)
            self._summary_cond.notify_all()
        logger.info(f"[{summary.sid}] 定位{'完成' if summary.ok else '失败'}: mode={summary.mode}, "
                    f"scheme={summary.scheme}, 比较 {summary.comparisons} 次, 用时 {summary.elapsed_ms:.1f} ms")

    def summary_for(self, sid: str, timeout: float = 10.0) -> Optional[SessionSummary]:
        """等待并返回指定会话最近一次的记录"""
        def _find():
            for summary in reversed(self.summaries):
                if summary.sid == sid:
                    return summary
            return None

        with self._summary_cond:
            self._summary_cond.wait_for(lambda: _find() is not None, timeout=timeout)
            return _find()

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, name='encloc-server', daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def load_table(config: ServerConfig, storage: Optional[ParquetStorage] = None) -> LookupTable:
    """
    按配置准备查找表：优先读取缓存，否则由指纹 CSV 构建（并写入缓存）

    Raises:
        EmptyTableError: 既没有缓存也没有指纹文件
    """
    if config.table_cache:
        storage = storage or ParquetStorage()
        table = storage.load_lookup_table(config.table_cache)
        if table is not None:
            logger.info(f"使用缓存查找表 {config.table_cache}")
            return table
    if not config.db:
        raise EmptyTableError("未指定指纹文件（server.db）且没有可用的缓存查找表")

    records = ingest_csv(config.db)
    table = build_lookup_table(records, min_count=config.min_count, v_c=config.v_c, map_id=config.map_id)
    if config.table_cache:
        storage = storage or ParquetStorage()
        storage.save_lookup_table(config.table_cache, table)
    return table


def serve(config: ServerConfig, table: Optional[LookupTable] = None,
          background: bool = False) -> LocalizationServer:
    """
    启动定位服务端

    Args:
        config: 服务端配置
        table: 已构建的查找表，None 时按配置加载
        background: True 时在后台线程运行并立即返回

    Returns:
        LocalizationServer
    """
    if table is None:
        table = load_table(config)
    server = LocalizationServer(config, table)
    logger.info(f"定位服务端监听 {server.address}: {table.n_fingerprints} 个指纹 × {table.n_aps} 个 AP")

    if background:
        server.start_background()
        return server

    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("收到中断信号，服务端退出")
    finally:
        server.server_close()
    return server
