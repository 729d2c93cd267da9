"""
指纹数据库

负责指纹 CSV 的读取与校验、AP 过滤、查找表构建（缺失值以 v_c 填充）以及合成数据生成。
"""

import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..exceptions import EmptyTableError, IngestError
from ..utils.timezone import iso_after

CSV_COLUMNS = ['map_id', 'x', 'y', 'mac', 'rss', 'device', 'timestamp']
MAC_PATTERN = re.compile(r'^[0-9a-f]{2}(:[0-9a-f]{2}){5}$')

RSS_MIN = -120
RSS_MAX = 0
V_C = -120
DEFAULT_MIN_COUNT = 8

# 合成数据的路径损耗模型参数
SYNTH_RSS_FLOOR = -120
SYNTH_RSS_CEIL = -30
SYNTH_PATH_LOSS_EXPONENT = 2.5
SYNTH_NOISE_DBM = 4.0
SYNTH_GRID_SPACING = 3
SYNTH_BASE_TIME = '2019-06-01T12:00:00Z'

FingerprintKey = Tuple[str, int, int]


def normalize_mac(mac: str) -> str:
    return mac.strip().lower()


def is_valid_mac(mac: str) -> bool:
    return bool(MAC_PATTERN.match(mac))


@dataclass(frozen=True)
class FingerprintRecord:
    """单条指纹读数：某位置上某个 AP 的 RSS"""
    map_id: str
    x: int
    y: int
    mac: str
    rss: int
    device: str = ''
    timestamp: str = ''

    def __post_init__(self):
        if not is_valid_mac(self.mac):
            raise ValueError(f"MAC 格式错误: {self.mac!r}")
        if not RSS_MIN <= self.rss <= RSS_MAX:
            raise ValueError(f"RSS 超出 [{RSS_MIN}, {RSS_MAX}]: {self.rss}")

    @property
    def key(self) -> FingerprintKey:
        return (self.map_id, self.x, self.y)


@dataclass(frozen=True, eq=False)
class LookupTable:
    """
    查找表：N_F 个指纹 × N_AP 列，所有单元均已填充

    Attributes:
        ap_columns: 列顺序即客户端扫描的规范顺序
        coords: 每行的 (x, y)
        rss: int64 矩阵，形状 (N_F, N_AP)，只读
        v_c: 缺失常数
        map_id: 所属地图，多地图混合时为 None
    """
    ap_columns: Tuple[str, ...]
    coords: Tuple[Tuple[int, int], ...]
    rss: np.ndarray = field(repr=False)
    v_c: int = V_C
    map_id: Optional[str] = None

    def __post_init__(self):
        if not self.coords:
            raise EmptyTableError("查找表至少需要一个指纹")
        if not self.ap_columns:
            raise EmptyTableError("查找表至少需要一个 AP 列")
        rss = np.array(self.rss, dtype=np.int64)
        if rss.ndim != 2 or rss.shape != (len(self.coords), len(self.ap_columns)):
            raise ValueError(f"RSS 矩阵形状 {rss.shape} 与 {len(self.coords)} 行 × {len(self.ap_columns)} 列不符")
        if rss.min() < RSS_MIN or rss.max() > RSS_MAX:
            raise ValueError(f"查找表单元超出 [{RSS_MIN}, {RSS_MAX}]")
        rss.setflags(write=False)
        object.__setattr__(self, 'rss', rss)
        object.__setattr__(self, 'ap_columns', tuple(self.ap_columns))
        object.__setattr__(self, 'coords', tuple((int(x), int(y)) for x, y in self.coords))

    @property
    def n_fingerprints(self) -> int:
        return len(self.coords)

    @property
    def n_aps(self) -> int:
        return len(self.ap_columns)

    @property
    def rows(self) -> List[Tuple[Tuple[int, int], Tuple[int, ...]]]:
        return [(coord, tuple(int(v) for v in vec)) for coord, vec in zip(self.coords, self.rss)]

    def to_frame(self) -> pd.DataFrame:
        """转换为 DataFrame：x, y 两列加每个 AP 一列"""
        df = pd.DataFrame(self.rss, columns=list(self.ap_columns))
        df.insert(0, 'y', [c[1] for c in self.coords])
        df.insert(0, 'x', [c[0] for c in self.coords])
        return df

    @classmethod
    def from_frame(cls, df: pd.DataFrame, v_c: int = V_C, map_id: Optional[str] = None) -> 'LookupTable':
        ap_columns = [c for c in df.columns if c not in ('x', 'y')]
        coords = list(zip(df['x'].astype(int), df['y'].astype(int)))
        return cls(ap_columns=tuple(ap_columns), coords=tuple(coords),
                   rss=df[ap_columns].to_numpy(dtype=np.int64), v_c=v_c, map_id=map_id)


def _required(row, name: str) -> str:
    value = getattr(row, name)
    if value is None or (not isinstance(value, str) and pd.isna(value)) or not str(value).strip():
        raise ValueError(f"缺少字段 {name}")
    return str(value).strip()


def _parse_int(value: str, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{name} 不是整数: {value!r}")


def ingest_csv(path: Union[str, Path]) -> List[FingerprintRecord]:
    """
    读取指纹 CSV

    Args:
        path: CSV 文件路径，表头 map_id,x,y,mac,rss,device,timestamp

    Returns:
        指纹记录列表；空文件返回空列表

    Raises:
        IngestError: 表头或任意数据行不合法，errors 中为 (行号, 说明)
    """
    path = Path(path)
    if path.stat().st_size == 0:
        logger.warning(f"指纹文件为空: {path}")
        return []

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as e:
        raise IngestError([(0, f"CSV 解析失败: {e}")]) from e

    header = [c.strip() for c in df.columns]
    if header != CSV_COLUMNS:
        raise IngestError([(1, f"表头应为 {','.join(CSV_COLUMNS)}，实际为 {','.join(header)}")])
    df.columns = header

    records: List[FingerprintRecord] = []
    errors: List[Tuple[int, str]] = []
    for idx, row in enumerate(df.itertuples(index=False)):
        line = idx + 2  # 第 1 行为表头
        try:
            records.append(FingerprintRecord(
                map_id=_required(row, 'map_id'),
                x=_parse_int(_required(row, 'x'), 'x'),
                y=_parse_int(_required(row, 'y'), 'y'),
                mac=normalize_mac(_required(row, 'mac')),
                rss=_parse_int(_required(row, 'rss'), 'rss'),
                device=_required(row, 'device'),
                timestamp=_required(row, 'timestamp'),
            ))
        except ValueError as e:
            errors.append((line, str(e)))

    if errors:
        raise IngestError(errors)

    logger.info(f"读取指纹文件 {path}: {len(records)} 条读数, {len(group_fingerprints(records))} 个指纹位置")
    return records


def save_csv(records: Sequence[FingerprintRecord], path: Union[str, Path]) -> Path:
    """按规范表头写出指纹 CSV"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([asdict(r) for r in records], columns=CSV_COLUMNS)
    df.to_csv(path, index=False, encoding='utf-8')
    logger.info(f"已写出 {len(records)} 条指纹读数到 {path}")
    return path


def group_fingerprints(records: Sequence[FingerprintRecord]) -> Dict[FingerprintKey, List[FingerprintRecord]]:
    """按 (map_id, x, y) 分组，保持首次出现顺序"""
    groups: Dict[FingerprintKey, List[FingerprintRecord]] = {}
    for record in records:
        groups.setdefault(record.key, []).append(record)
    return groups


def build_lookup_table(records: Sequence[FingerprintRecord], min_count: int = DEFAULT_MIN_COUNT,
                       v_c: int = V_C, map_id: Optional[str] = None) -> LookupTable:
    """
    构建查找表

    丢弃出现在少于 min_count 个指纹中的 AP，剩余 MAC 按字典序作为列；
    同一指纹对同一 AP 的多次读数取平均（四舍五入），缺失单元填 v_c。

    Args:
        records: 指纹记录
        min_count: AP 至少出现的指纹个数
        v_c: 缺失常数
        map_id: 只使用该地图的记录

    Returns:
        LookupTable

    Raises:
        EmptyTableError: 没有记录，或全部 AP 被过滤
    """
    if map_id is not None:
        records = [r for r in records if r.map_id == map_id]
    if not records:
        raise EmptyTableError("没有可用的指纹记录" + (f"（map_id={map_id}）" if map_id else ""))

    df = pd.DataFrame([asdict(r) for r in records])
    keys = list(group_fingerprints(records).keys())

    seen = df[['map_id', 'x', 'y', 'mac']].drop_duplicates()
    counts = seen['mac'].value_counts()
    kept = sorted(counts[counts >= min_count].index)
    if not kept:
        raise EmptyTableError(f"所有 AP 均被过滤（min_count={min_count}，共 {len(counts)} 个 AP）")

    pivot = (
        df[df['mac'].isin(kept)]
        .pivot_table(index=['map_id', 'x', 'y'], columns='mac', values='rss', aggfunc='mean')
        .reindex(index=pd.MultiIndex.from_tuples(keys, names=['map_id', 'x', 'y']), columns=kept)
    )
    matrix = np.rint(pivot.to_numpy(dtype=float))
    matrix = np.where(np.isnan(matrix), v_c, matrix).astype(np.int64)

    map_ids = {k[0] for k in keys}
    table = LookupTable(
        ap_columns=tuple(kept),
        coords=tuple((x, y) for _, x, y in keys),
        rss=matrix,
        v_c=v_c,
        map_id=map_id if map_id is not None else (next(iter(map_ids)) if len(map_ids) == 1 else None),
    )
    logger.info(f"查找表构建完成: {table.n_fingerprints} 个指纹 × {table.n_aps} 个 AP "
                f"(min_count={min_count}，过滤前 {len(counts)} 个 AP)")
    return table


def generate_synthetic(n_fprints: int, n_aps: int, seed: int,
                       map_id: str = 'synthetic', device: str = 'synthetic') -> List[FingerprintRecord]:
    """
    生成合成指纹数据

    指纹按网格排布，AP 随机放置，RSS 服从对数距离路径损耗模型：
    rss = -30 - 10·2.5·log10(dist + 1) + U(-4, 4)，截断到 [-120, -30]。
    相同 seed 输出完全相同。
    """
    if n_fprints < 1 or n_aps < 1:
        raise ValueError(f"指纹数与 AP 数必须 >= 1: {n_fprints}, {n_aps}")

    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(n_fprints)))
    idx = np.arange(n_fprints)
    fp_xy = np.stack([(idx % side) * SYNTH_GRID_SPACING, (idx // side) * SYNTH_GRID_SPACING], axis=1)

    extent = side * SYNTH_GRID_SPACING
    ap_xy = rng.uniform(-extent * 0.25, extent * 1.25, size=(n_aps, 2))
    suffixes = rng.choice(1 << 24, size=n_aps, replace=False)
    macs = [f"02:1a:c0:{(s >> 16) & 0xff:02x}:{(s >> 8) & 0xff:02x}:{s & 0xff:02x}" for s in suffixes]

    dist = np.linalg.norm(fp_xy[:, None, :] - ap_xy[None, :, :], axis=2)
    noise = rng.uniform(-SYNTH_NOISE_DBM, SYNTH_NOISE_DBM, size=dist.shape)
    rss = SYNTH_RSS_CEIL - 10 * SYNTH_PATH_LOSS_EXPONENT * np.log10(dist + 1) + noise
    rss = np.clip(np.rint(rss), SYNTH_RSS_FLOOR, SYNTH_RSS_CEIL).astype(np.int64)

    records = []
    for i in range(n_fprints):
        x, y = int(fp_xy[i, 0]), int(fp_xy[i, 1])
        for j in range(n_aps):
            records.append(FingerprintRecord(
                map_id=map_id, x=x, y=y, mac=macs[j], rss=int(rss[i, j]), device=device,
                timestamp=iso_after(SYNTH_BASE_TIME, i * n_aps + j),
            ))
    logger.debug(f"生成合成指纹: {n_fprints} 个位置 × {n_aps} 个 AP, seed={seed}")
    return records
