"""
基准测试

在回环地址上启动服务端，对 (方案, 模式) 的每个组合执行若干次端到端定位，
逐次与明文对照核验结果，记录耗时、收发字节与两侧操作计数，输出 CSV + JSON 报告。
"""

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from loguru import logger
from tqdm import tqdm

from ..comparison.kmin import expected_comparisons
from ..comparison.params import comparison_bit_length, dgk_carrier_u_bits
from ..data_storage.fingerprint_db import LookupTable, build_lookup_table, generate_synthetic
from ..localization.distance import synthetic_scan
from ..localization.localizer import oracle_argmin
from ..utils.accounting import OPERATION_NAMES
from ..utils.timezone import now_utc_str
from .client import ClientKeys, generate_client_keys, run_client
from .server import LocalizationServer, serve
from .settings import MODE_SERVER, BenchConfig, ClientConfig, ServerConfig


@dataclass
class BenchReport:
    config: BenchConfig
    trials: pd.DataFrame
    started_at: str = field(default_factory=lambda: now_utc_str('%Y%m%d_%H%M%S'))

    @property
    def failed(self) -> int:
        if self.trials.empty:
            return 0
        return int((~self.trials['ok']).sum())

    def medians(self) -> pd.DataFrame:
        """每个 (scheme, mode) 组合在成功试验上的中位数"""
        ok = self.trials[self.trials['ok']]
        if ok.empty:
            return pd.DataFrame()
        numeric = ok.select_dtypes('number').columns.difference(['repetition', 'trial'])
        return ok.groupby(['scheme', 'mode'])[list(numeric)].median().reset_index()

    def summary_table(self, value: str = 'wall_ms') -> pd.DataFrame:
        """行为模式、列为方案的中位数透视表"""
        medians = self.medians()
        if medians.empty:
            return pd.DataFrame()
        return medians.pivot(index='mode', columns='scheme', values=value)

    def save(self, reports_dir: Optional[str] = None) -> Dict[str, Path]:
        """
        保存报告

        Returns:
            {'csv': 逐次试验明细, 'json': 汇总}
        """
        out_dir = Path(reports_dir or self.config.reports_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"bench_{self.config.preset}_{self.started_at}"

        csv_path = out_dir / f"{stem}.csv"
        self.trials.to_csv(csv_path, index=False, encoding='utf-8')

        table = self.summary_table()
        summary = {
            'config': asdict(self.config),
            'started_at': self.started_at,
            'total_trials': int(len(self.trials)),
            'failed_trials': self.failed,
            'medians': self.medians().to_dict(orient='records'),
            'summary_wall_ms': {mode: row.dropna().to_dict() for mode, row in table.iterrows()},
        }
        json_path = out_dir / f"{stem}.json"
        with open(json_path, 'w', encoding='utf-8') as f:
            json.dump(summary, f, ensure_ascii=False, indent=2, default=str)

        logger.info(f"基准报告已保存: {csv_path}, {json_path}")
        return {'csv': csv_path, 'json': json_path}


def _flatten_ops(prefix: str, ops: Dict[str, int]) -> Dict[str, int]:
    return {f"{prefix}_{name}": int(ops.get(name, 0)) for name in OPERATION_NAMES}


def run_trial(server: LocalizationServer, table: LookupTable, keys: ClientKeys, client_config: ClientConfig,
              scan_seed: int) -> Dict[str, Any]:
    """执行一次定位并与明文对照核验"""
    scan = synthetic_scan(table, seed=scan_seed)
    expected_index, expected = oracle_argmin(table, scan)
    row: Dict[str, Any] = {
        'scheme': client_config.scheme, 'mode': client_config.mode, 'key_bits': client_config.key_bits,
        'n_fingerprints': table.n_fingerprints, 'n_aps': table.n_aps,
        'expected_x': expected[0], 'expected_y': expected[1], 'ok': False, 'error': '',
    }

    started = time.perf_counter()
    try:
        result = run_client(client_config, scan=scan, keys=keys)
    except Exception as e:
        row['wall_ms'] = (time.perf_counter() - started) * 1000
        row['error'] = str(e)
        logger.error(f"试验失败 ({client_config.scheme}/{client_config.mode}): {e}")
        return row
    row['wall_ms'] = (time.perf_counter() - started) * 1000

    summary = server.summary_for(result.sid)
    client_traffic = result.traffic
    row.update({
        'x': result.position[0], 'y': result.position[1],
        'client_elapsed_ms': result.elapsed_ms,
        'keyholder_sessions': result.comparisons,
        'rows_received': result.rows_received,
        'result_bytes': client_traffic['bytes_received'].get('result', 0),
        'client_bytes_sent': sum(client_traffic['bytes_sent'].values()),
        'client_bytes_received': sum(client_traffic['bytes_received'].values()),
        **_flatten_ops('client', result.ops),
    })
    if summary is not None:
        row.update({
            'server_elapsed_ms': summary.elapsed_ms,
            'comparisons': summary.comparisons,
            'server_bytes_sent': sum(summary.traffic.get('bytes_sent', {}).values()),
            'server_bytes_received': sum(summary.traffic.get('bytes_received', {}).values()),
            **_flatten_ops('server', summary.ops),
        })

    errors = []
    if tuple(result.position) != tuple(expected):
        errors.append(f"结果 {result.position} 与明文对照 {expected}（第 {expected_index} 行）不符")
    if client_config.mode == MODE_SERVER:
        want = expected_comparisons(table.n_fingerprints, client_config.k)
        row['expected_comparisons'] = want
        if result.comparisons != want:
            errors.append(f"比较次数 {result.comparisons} != {want}")
    row['ok'] = not errors
    row['error'] = '; '.join(errors)
    return row


def run_bench(config: BenchConfig, table: Optional[LookupTable] = None,
              show_progress: bool = True) -> BenchReport:
    """
    运行基准测试

    Args:
        config: 基准配置
        table: 查找表，None 时按配置生成合成数据
        show_progress: 是否显示进度条

    Returns:
        BenchReport
    """
    if table is None:
        records = generate_synthetic(config.n_fprints, config.n_aps, seed=config.seed)
        table = build_lookup_table(records, min_count=min(config.min_count, config.n_fprints))

    l = comparison_bit_length(table.n_aps)
    carrier_u_bits = max(config.carrier_u_bits, dgk_carrier_u_bits(l))
    logger.info(f"基准测试: 预设 {config.preset}, {table.n_fingerprints} 个指纹 × {table.n_aps} 个 AP, "
                f"{config.key_bits} 位密钥, 每组 {config.repetitions}×{config.trials} 次")

    server = serve(ServerConfig(listen=config.listen), table=table, background=True)
    rows: List[Dict[str, Any]] = []
    try:
        cells = config.cells()
        total = len(cells) * config.repetitions * config.trials
        with tqdm(total=total, desc="基准测试", unit="次", disable=not show_progress) as pbar:
            for scheme, mode in cells:
                keys = generate_client_keys(scheme, config.key_bits, config.t_bits,
                                            config.bit_u_bits, carrier_u_bits)
                client_config = ClientConfig(server=server.address, scheme=scheme, mode=mode,
                                             key_bits=config.key_bits, k=config.k)
                for rep in range(config.repetitions):
                    for trial in range(config.trials):
                        row = run_trial(server, table, keys, client_config,
                                        scan_seed=config.seed + rep * config.trials + trial)
                        row.update({'repetition': rep, 'trial': trial})
                        rows.append(row)
                        pbar.set_postfix_str(f"{scheme}/{mode}")
                        pbar.update(1)
    finally:
        server.stop()

    report = BenchReport(config=config, trials=pd.DataFrame(rows))
    if report.failed:
        logger.error(f"{report.failed} 次试验失败")
    else:
        logger.info("全部试验与明文对照一致")
    return report
