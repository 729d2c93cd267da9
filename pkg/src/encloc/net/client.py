"""
定位客户端

生成（或加载）密钥，完成握手后加密扫描；服务器模式下作为比较协议的密钥方应答
cmp1/cmp3/cmp5，客户端模式下解密全部距离取最小值。
"""

import socket
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from loguru import logger

from ..comparison.params import ComparisonParams
from ..comparison.protocol import MESSAGE_CLASSES, LocalKeyholderChannel
from ..crypto.algebra import AnyPrivateKey
from ..crypto.ciphertext import SCHEME_DGK, SCHEME_PAILLIER, ciphertext_from_record, make_keyring
from ..crypto.dgk import DGKPrivateKey, dgk_keygen
from ..crypto.keystore import load_keypair, public_key_to_record, save_keypair
from ..crypto.number import RandomSource
from ..crypto.paillier import paillier_keygen
from ..exceptions import ClientError, EnclocError, RemoteError
from ..localization.distance import LocalizationScan, load_scan_csv, prepare_scan
from ..localization.localizer import client_argmin, decrypt_coords
from ..utils.accounting import OpStats, track_operations
from .settings import MODE_SERVER, ClientConfig
from .wire import MessageStream, WireMessage, error_message, parse_address


@dataclass
class ClientKeys:
    """客户端密钥：DGK 载体模式下 carrier 与 bit 为同一把密钥"""
    carrier: AnyPrivateKey
    bit: DGKPrivateKey

    @property
    def scheme(self) -> str:
        return self.carrier.public_key.scheme


@dataclass
class _RowView:
    coord: Tuple[int, int]
    dist: Any


@dataclass
class LocalizationResult:
    position: Tuple[int, int]
    candidates: List[Tuple[int, int]]
    scheme: str
    mode: str
    sid: str
    comparisons: int = 0
    rows_received: int = 0
    elapsed_ms: float = 0.0
    ops: Dict[str, int] = field(default_factory=dict)
    traffic: Dict[str, Dict[str, int]] = field(default_factory=dict)


def generate_client_keys(scheme: str, key_bits: int, t_bits: int = 160, bit_u_bits: int = 16,
                         carrier_u_bits: int = 39, rng: Optional[RandomSource] = None) -> ClientKeys:
    """
    生成客户端密钥

    Args:
        scheme: 载体方案
        key_bits: 模数位数
        t_bits: DGK 的 v_p, v_q 位数
        bit_u_bits: 逐位比较 DGK 的 u 位数（Paillier 载体时使用）
        carrier_u_bits: DGK 载体的 u 位数
        rng: 随机源
    """
    if scheme == SCHEME_DGK:
        _, sk = dgk_keygen(key_bits, t_bits, u_bits=carrier_u_bits, rng=rng)
        return ClientKeys(carrier=sk, bit=sk)
    if scheme == SCHEME_PAILLIER:
        _, carrier = paillier_keygen(key_bits, rng)
        _, bit = dgk_keygen(key_bits, t_bits, u_bits=bit_u_bits, rng=rng)
        return ClientKeys(carrier=carrier, bit=bit)
    raise ValueError(f"未知方案: {scheme}")


def _key_paths(key_dir: Path, scheme: str) -> Tuple[Path, Path]:
    if scheme == SCHEME_DGK:
        path = key_dir / 'dgk_carrier.json'
        return path, path
    return key_dir / 'paillier_carrier.json', key_dir / 'dgk_bit.json'


def load_or_generate_keys(config: ClientConfig, rng: Optional[RandomSource] = None) -> ClientKeys:
    """key_dir 中有密钥时加载，否则生成（并保存到 key_dir）"""
    if config.key_dir:
        carrier_path, bit_path = _key_paths(Path(config.key_dir), config.scheme)
        if carrier_path.exists() and bit_path.exists():
            _, carrier = load_keypair(carrier_path)
            _, bit = load_keypair(bit_path) if bit_path != carrier_path else (None, carrier)
            return ClientKeys(carrier=carrier, bit=bit)

    logger.info(f"生成 {config.key_bits} 位 {config.scheme} 密钥...")
    keys = generate_client_keys(config.scheme, config.key_bits, config.t_bits,
                                config.bit_u_bits, config.carrier_u_bits, rng)
    if config.key_dir:
        carrier_path, bit_path = _key_paths(Path(config.key_dir), config.scheme)
        save_keypair(keys.carrier, carrier_path)
        if bit_path != carrier_path:
            save_keypair(keys.bit, bit_path)
    return keys


class _ClientRun:
    def __init__(self, config: ClientConfig, keys: ClientKeys, scan: LocalizationScan,
                 rng: Optional[RandomSource]):
        self.config = config
        self.keys = keys
        self.scan = scan
        self.rng = rng
        self.sid = uuid.uuid4().hex
        self.stage = 'connect'
        self.stream: Optional[MessageStream] = None

    def _receive(self) -> WireMessage:
        msg = self.stream.receive()
        if msg is None:
            raise ClientError(self.stage, "服务端关闭了连接")
        if msg.type == 'error':
            body = msg.body
            raise RemoteError(body.get('code', 'unknown'), body.get('message', ''), body.get('stage'))
        return msg

    def run(self) -> LocalizationResult:
        config = self.config
        started = time.perf_counter()
        ops = OpStats()

        try:
            sock = socket.create_connection(parse_address(config.server), timeout=config.timeout)
        except OSError as e:
            raise ClientError('connect', f"无法连接 {config.server}: {e}") from e
        self.stream = MessageStream(sock, config.server)

        try:
            with track_operations(ops):
                result = self._session()
        except RemoteError as e:
            raise ClientError(self.stage, str(e)) from e
        except ClientError:
            raise
        except EnclocError as e:
            try:
                self.stream.send(error_message(self.sid, getattr(e, 'code', 'client_error'), str(e), self.stage))
            except OSError:
                pass
            raise ClientError(self.stage, str(e)) from e
        except OSError as e:
            raise ClientError(self.stage, f"连接异常: {e}") from e
        except (KeyError, TypeError) as e:
            raise ClientError(self.stage, f"报文内容错误: {e!r}") from e
        finally:
            self.stream.close()

        result.elapsed_ms = (time.perf_counter() - started) * 1000
        result.ops = ops.to_dict()
        result.traffic = self.stream.traffic()
        return result

    def _session(self) -> LocalizationResult:
        config, keys = self.config, self.keys
        carrier_pk = keys.carrier.public_key
        bit_pk = keys.bit.public_key

        self.stage = 'hello'
        hello = {'scheme': config.scheme, 'mode': config.mode, 'k': config.k,
                 'carrier': public_key_to_record(carrier_pk)}
        if config.mode == MODE_SERVER:
            hello['bit_key'] = public_key_to_record(bit_pk)
        self.stream.send(WireMessage(type='hello', sid=self.sid, body=hello))
        columns = self._receive()
        if columns.type != 'columns':
            raise ClientError(self.stage, f"期望 columns，收到 {columns.type}")
        ap_columns = columns.body['ap_columns']
        params = ComparisonParams.for_carrier(config.scheme, int(columns.body['l']), int(columns.body['sigma']))
        logger.info(f"收到 {len(ap_columns)} 个 AP 列，l={params.l}")

        self.stage = 'scan'
        enc_scan = prepare_scan(self.scan, ap_columns, carrier_pk, config.scheme,
                                v_c=int(columns.body.get('v_c', -120)), rng=self.rng)
        self.stream.send(WireMessage(type='scan', sid=self.sid, body=enc_scan.to_body()))

        keyring = make_keyring(carrier_pk, bit_pk)
        keyholder = LocalKeyholderChannel(keys.carrier, keys.bit, params, self.rng)
        while True:
            msg = self._receive()
            if msg.type in ('cmp1', 'cmp3', 'cmp5'):
                self.stage = 'compare'
                request = MESSAGE_CLASSES[msg.type].from_body(msg.body, keyring)
                reply = keyholder.exchange(request)
                self.stream.send(WireMessage(type=reply.msg_type, sid=self.sid, body=reply.to_body()))
            elif msg.type == 'result':
                break
            else:
                raise ClientError(self.stage, f"意外的报文 {msg.type}")

        self.stage = 'result'
        body = msg.body
        if body.get('mode') == MODE_SERVER:
            coords = [(ciphertext_from_record(c['x'], keyring), ciphertext_from_record(c['y'], keyring))
                      for c in body['coords']]
            candidates = decrypt_coords(coords, keys.carrier)
            position, rows_received = candidates[0], 0
        else:
            rows = [_RowView((int(r['x']), int(r['y'])), ciphertext_from_record(r['dist'], keyring))
                    for r in body['rows']]
            position = client_argmin(rows, keys.carrier)
            candidates, rows_received = [position], len(rows)

        logger.info(f"定位结果: ({position[0]}, {position[1]})，比较会话 {keyholder.sessions_opened} 次")
        return LocalizationResult(position=position, candidates=candidates, scheme=config.scheme,
                                  mode=config.mode, sid=self.sid, comparisons=keyholder.sessions_opened,
                                  rows_received=rows_received)


def run_client(config: ClientConfig, scan: Optional[LocalizationScan] = None,
               keys: Optional[ClientKeys] = None, rng: Optional[RandomSource] = None) -> LocalizationResult:
    """
    执行一次定位

    Args:
        config: 客户端配置
        scan: 扫描，None 时读取 config.scan
        keys: 已有密钥，None 时按 config 加载或生成
        rng: 随机源

    Returns:
        LocalizationResult

    Raises:
        ClientError: 任一阶段失败，stage 标明出错阶段
    """
    if keys is None:
        keys = load_or_generate_keys(config, rng)
    if keys.scheme != config.scheme:
        raise ClientError('keys', f"密钥方案 {keys.scheme} 与配置 {config.scheme} 不符")
    if scan is None:
        if not config.scan:
            raise ClientError('scan', "未指定扫描文件")
        scan = load_scan_csv(config.scan)
    return _ClientRun(config, keys, scan, rng).run()
