"""
加密欧氏距离

客户端把扫描对齐到查找表列并加密：
    s2[j] = E(-2·rss_j)，s3 = E(sum_j rss_j²)
服务器对每个指纹 i 计算
    [[d_i²]] = E(S_i1) · prod_j s2[j]^{fp_ij} · s3，S_i1 = sum_j fp_ij²
不做开方，argmin(d²) = argmin(d)。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..crypto.algebra import AnyPublicKey, encrypt_signed, he_add, he_negate, he_scalar_mul
from ..crypto.ciphertext import Ciphertext, Keyring, ciphertext_from_record, ciphertext_to_record
from ..data_storage.fingerprint_db import RSS_MAX, RSS_MIN, V_C, LookupTable, is_valid_mac, normalize_mac
from ..exceptions import IncompatibleCiphertextError, IngestError, LocalizationParameterError

SCAN_COLUMNS = ['mac', 'rss']


@dataclass(frozen=True)
class LocalizationScan:
    """一次定位扫描：(mac, rss) 列表"""
    pairs: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        pairs = tuple((normalize_mac(mac), int(rss)) for mac, rss in self.pairs)
        macs = [mac for mac, _ in pairs]
        if len(set(macs)) != len(macs):
            raise ValueError("扫描中存在重复的 MAC")
        for mac, rss in pairs:
            if not is_valid_mac(mac):
                raise ValueError(f"MAC 格式错误: {mac!r}")
            if not RSS_MIN <= rss <= RSS_MAX:
                raise ValueError(f"RSS 超出 [{RSS_MIN}, {RSS_MAX}]: {rss}")
        object.__setattr__(self, 'pairs', pairs)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.pairs)

    def aligned(self, ap_columns: Sequence[str], v_c: int = V_C) -> List[int]:
        """按列顺序对齐，缺失的 AP 以 v_c 填充"""
        values = self.as_dict()
        return [values.get(mac, v_c) for mac in ap_columns]


@dataclass
class EncryptedScan:
    s2: List[Ciphertext]
    s3: Ciphertext
    scheme: str

    def to_body(self) -> Dict[str, Any]:
        return {
            'scheme': self.scheme,
            's2': [ciphertext_to_record(c) for c in self.s2],
            's3': ciphertext_to_record(self.s3),
        }

    @classmethod
    def from_body(cls, body: Dict[str, Any], keyring: Keyring) -> 'EncryptedScan':
        return cls(s2=[ciphertext_from_record(c, keyring) for c in body['s2']],
                   s3=ciphertext_from_record(body['s3'], keyring),
                   scheme=body['scheme'])


@dataclass
class DistanceRow:
    """index 为查找表中的原始行号"""
    index: int
    coord: Tuple[int, int]
    s1: int
    dist: Ciphertext


def prepare_scan(scan: LocalizationScan, ap_columns: Sequence[str], key: AnyPublicKey,
                 scheme: Optional[str] = None, v_c: int = V_C, rng=None) -> EncryptedScan:
    """
    加密一次扫描

    Args:
        scan: 明文扫描
        ap_columns: 服务器下发的列顺序
        key: 客户端载体公钥
        scheme: 方案标签，给出时须与 key 一致
        v_c: 缺失常数
        rng: 随机源

    Returns:
        EncryptedScan

    Raises:
        PlaintextOverflowError: 明文超出载体空间
    """
    if scheme is not None and scheme != key.scheme:
        raise IncompatibleCiphertextError(f"方案 {scheme} 与公钥方案 {key.scheme} 不符")
    rss = scan.aligned(ap_columns, v_c)
    s2 = [encrypt_signed(key, -2 * v, rng) for v in rss]
    s3 = encrypt_signed(key, sum(v * v for v in rss), rng)
    missing = sum(1 for mac in ap_columns if mac not in scan.as_dict())
    logger.debug(f"扫描已加密: {len(ap_columns)} 列，其中 {missing} 列以 v_c 填充")
    return EncryptedScan(s2=s2, s3=s3, scheme=key.scheme)


def compute_distance_rows(table: LookupTable, enc_scan: EncryptedScan, rng=None) -> List[DistanceRow]:
    """
    计算每个指纹到扫描的加密距离平方，输出保持查找表行序

    Raises:
        LocalizationParameterError: 扫描列数与查找表不符
        IncompatibleCiphertextError: 扫描密文不在同一公钥下
    """
    if len(enc_scan.s2) != table.n_aps:
        raise LocalizationParameterError(f"扫描列数 {len(enc_scan.s2)} 与查找表列数 {table.n_aps} 不符")
    public_key = enc_scan.s3.public_key
    for c in enc_scan.s2:
        if c.key_fingerprint != enc_scan.s3.key_fingerprint or c.scheme != enc_scan.s3.scheme:
            raise IncompatibleCiphertextError("扫描密文不在同一公钥下")

    # 指纹 RSS 全为非正数，s2[j]^{fp} 以 (s2[j]^{-1})^{|fp|} 计算
    neg_s2 = [he_negate(c) for c in enc_scan.s2]
    s1_all = (table.rss * table.rss).sum(axis=1)

    rows: List[DistanceRow] = []
    for i, (coord, vec) in enumerate(zip(table.coords, table.rss)):
        acc = he_add(encrypt_signed(public_key, int(s1_all[i]), rng), enc_scan.s3)
        for j, fp in enumerate(vec):
            fp = int(fp)
            if fp == 0:
                continue
            term = he_scalar_mul(neg_s2[j], -fp) if fp < 0 else he_scalar_mul(enc_scan.s2[j], fp)
            acc = he_add(acc, term)
        rows.append(DistanceRow(index=i, coord=coord, s1=int(s1_all[i]), dist=acc))
    return rows


def plaintext_distances(table: LookupTable, scan: LocalizationScan) -> np.ndarray:
    """明文距离平方，作为测试与基准的对照"""
    vec = np.array(scan.aligned(table.ap_columns, table.v_c), dtype=np.int64)
    diff = table.rss - vec[None, :]
    return (diff * diff).sum(axis=1)


def synthetic_scan(table: LookupTable, row_index: Optional[int] = None, seed: Optional[int] = None,
                   noise: int = 2, drop_rate: float = 0.0) -> LocalizationScan:
    """
    由查找表的某一行派生一条带噪声的扫描

    Args:
        table: 查找表
        row_index: 基准行，None 时随机选取
        seed: 随机种子
        noise: 每个 RSS 的整数扰动幅度
        drop_rate: 随机丢弃 AP 的概率；单元为 v_c 的 AP 视为未扫到
    """
    rng = np.random.default_rng(seed)
    if row_index is None:
        row_index = int(rng.integers(table.n_fingerprints))
    base = table.rss[row_index]
    jitter = rng.integers(-noise, noise + 1, size=base.shape) if noise > 0 else np.zeros_like(base)
    values = np.clip(base + jitter, RSS_MIN, RSS_MAX)
    keep = (base != table.v_c) & (rng.random(base.shape) >= drop_rate)
    pairs = tuple((mac, int(v)) for mac, v, k in zip(table.ap_columns, values, keep) if k)
    return LocalizationScan(pairs)


def load_scan_csv(path: Union[str, Path]) -> LocalizationScan:
    """
    读取扫描文件，表头 mac,rss

    Raises:
        IngestError: 表头或数据行不合法
    """
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    header = [c.strip() for c in df.columns]
    if header != SCAN_COLUMNS:
        raise IngestError([(1, f"表头应为 {','.join(SCAN_COLUMNS)}，实际为 {','.join(header)}")])

    pairs = []
    errors = []
    for idx, (mac, rss) in enumerate(df.itertuples(index=False, name=None)):
        mac = normalize_mac(mac)
        try:
            value = int(rss.strip())
        except ValueError:
            errors.append((idx + 2, f"rss 不是整数: {rss!r}"))
            continue
        if not is_valid_mac(mac):
            errors.append((idx + 2, f"MAC 格式错误: {mac!r}"))
        elif not RSS_MIN <= value <= RSS_MAX:
            errors.append((idx + 2, f"RSS 超出 [{RSS_MIN}, {RSS_MAX}]: {value}"))
        else:
            pairs.append((mac, value))
    if errors:
        raise IngestError(errors)
    try:
        return LocalizationScan(tuple(pairs))
    except ValueError as e:
        raise IngestError([(0, str(e))]) from e


def save_scan_csv(scan: LocalizationScan, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(scan.pairs), columns=SCAN_COLUMNS).to_csv(path, index=False, encoding='utf-8')
    return path
