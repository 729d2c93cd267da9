"""
定位流程

服务器模式：计算加密距离后以加密冒泡选出最近的 k 个指纹，只返回其坐标密文。
客户端模式：服务器返回全部 (坐标, [[d²]])，客户端解密后取最小值。
两种模式的并列规则一致：距离相同时取原始行号较小者。
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..comparison.kmin import k_min_select
from ..comparison.params import ComparisonParams, comparison_bit_length
from ..comparison.protocol import KeyholderChannel
from ..crypto.algebra import AnyPrivateKey, decrypt, decrypt_signed, encrypt_signed
from ..crypto.ciphertext import Ciphertext
from ..crypto.dgk import DGKPublicKey
from ..data_storage.fingerprint_db import LookupTable
from ..exceptions import (
    ComparisonAbortedError,
    DecryptionError,
    LocalizationError,
    LocalizationParameterError,
    PlaintextRangeError,
    ProtocolIntegrityError,
    WrongKeyError,
)
from .distance import DistanceRow, EncryptedScan, LocalizationScan, compute_distance_rows, plaintext_distances

EncryptedCoord = Tuple[Ciphertext, Ciphertext]


@dataclass
class ServerModeResult:
    coords: List[EncryptedCoord]
    comparisons: int
    # 胜出行的原始行号（仅用于服务器端日志）
    winner_indices: List[int] = field(default_factory=list)


def default_params(table: LookupTable, carrier: str, sigma: Optional[int] = None,
                   cap: Optional[int] = None) -> ComparisonParams:
    """由查找表列数推出比较参数"""
    l = comparison_bit_length(table.n_aps) if cap is None else comparison_bit_length(table.n_aps, cap=cap)
    return ComparisonParams.for_carrier(carrier, l, sigma)


def localize_server_mode(table: LookupTable, enc_scan: EncryptedScan, k: int, channel: KeyholderChannel,
                         bit_key: DGKPublicKey, params: Optional[ComparisonParams] = None,
                         rng=None, show_progress: bool = False) -> ServerModeResult:
    """
    服务器模式定位

    行按查找表逆序送入冒泡选择：等值时不交换，位置靠后者留在尾部，
    逆序后即原始行号较小者胜出。

    Args:
        table: 查找表
        enc_scan: 加密扫描
        k: 返回的坐标个数
        channel: 到密钥方（客户端）的比较信道
        bit_key: 客户端的逐位 DGK 公钥
        params: 比较参数，None 时由查找表推出
        rng: 随机源
        show_progress: 是否显示进度条

    Returns:
        ServerModeResult，coords[p] 为第 p+1 近指纹的 (E(x), E(y))

    Raises:
        LocalizationParameterError: k 不在 [1, N_F]
        LocalizationError: 比较中止
    """
    if not 1 <= k <= table.n_fingerprints:
        raise LocalizationParameterError(f"k 必须位于 [1, {table.n_fingerprints}]: {k}")
    carrier_key = enc_scan.s3.public_key
    if params is None:
        params = default_params(table, carrier_key.scheme)

    rows = compute_distance_rows(table, enc_scan, rng)
    try:
        selection = k_min_select(list(reversed(rows)), k, channel, params, bit_key,
                                 rng=rng, show_progress=show_progress)
    except (ComparisonAbortedError, ProtocolIntegrityError) as e:
        raise LocalizationError(f"加密比较失败: {e}") from e

    coords = [(encrypt_signed(carrier_key, row.coord[0], rng), encrypt_signed(carrier_key, row.coord[1], rng))
              for row in selection.winners]
    indices = [row.index for row in selection.winners]
    logger.info(f"服务器模式定位完成: N_F={table.n_fingerprints}, k={k}, 比较 {selection.comparisons} 次")
    return ServerModeResult(coords=coords, comparisons=selection.comparisons, winner_indices=indices)


def localize_client_mode(table: LookupTable, enc_scan: EncryptedScan, rng=None) -> List[DistanceRow]:
    """客户端模式：返回全部行（坐标明文，距离为密文）"""
    rows = compute_distance_rows(table, enc_scan, rng)
    logger.info(f"客户端模式: 返回 {len(rows)} 行加密距离")
    return rows


def client_argmin(rows: Iterable, key: AnyPrivateKey) -> Tuple[int, int]:
    """
    解密全部距离并取最小值，距离相同时取靠前的行

    Args:
        rows: 具有 coord 与 dist 属性的行，按查找表行序
        key: 客户端载体私钥

    Returns:
        (x, y)

    Raises:
        LocalizationError: 没有任何一行可以解密
    """
    best: Optional[Tuple[int, Tuple[int, int]]] = None
    failed = 0
    for pos, row in enumerate(rows):
        try:
            d = decrypt(key, row.dist)
        except (DecryptionError, WrongKeyError, PlaintextRangeError) as e:
            failed += 1
            logger.warning(f"第 {pos} 行距离解密失败，已跳过: {e}")
            continue
        if best is None or d < best[0]:
            best = (d, tuple(row.coord))
    if best is None:
        raise LocalizationError(f"所有 {failed} 行距离均无法解密")
    return best[1]


def decrypt_coords(coords: Sequence[EncryptedCoord], key: AnyPrivateKey) -> List[Tuple[int, int]]:
    """解密服务器模式返回的坐标"""
    return [(decrypt_signed(key, cx), decrypt_signed(key, cy)) for cx, cy in coords]


def oracle_argmin(table: LookupTable, scan: LocalizationScan) -> Tuple[int, Tuple[int, int]]:
    """明文对照：返回 (行号, 坐标)，np.argmin 取第一个最小值"""
    distances = plaintext_distances(table, scan)
    index = int(np.argmin(distances))
    return index, table.coords[index]


def oracle_kmin(table: LookupTable, scan: LocalizationScan, k: int) -> List[int]:
    """明文对照：距离升序、行号升序的前 k 个行号"""
    distances = plaintext_distances(table, scan)
    order = sorted(range(len(distances)), key=lambda i: (int(distances[i]), i))
    return order[:k]
