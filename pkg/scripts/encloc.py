#!/usr/bin/env python3
"""
encloc 命令行入口

使用方法:
    python scripts/encloc.py serve --db data/fingerprints.csv --listen 127.0.0.1:8828 --min-count 8
    python scripts/encloc.py client --server 127.0.0.1:8828 --scan scan.csv --scheme dgk --mode server --k 1
    python scripts/encloc.py bench --preset full --trials 20
    python scripts/encloc.py gen --fingerprints 19 --aps 26 --seed 7 --out data/fingerprints.csv
    python scripts/encloc.py keygen --scheme paillier --key-bits 2048 --out-dir data/keys
    python scripts/encloc.py table --db data/fingerprints.csv --name floor1

配置:
    config/config.yaml（模板见 config/config_example.yaml），命令行参数优先于配置文件
"""

import argparse
import sys
from pathlib import Path

# 添加项目源码路径
SRC_DIR = Path(__file__).resolve().parent.parent / 'src'
sys.path.insert(0, str(SRC_DIR))

from loguru import logger

from encloc.crypto.ciphertext import SCHEMES
from encloc.data_storage.fingerprint_db import build_lookup_table, generate_synthetic, ingest_csv, save_csv
from encloc.data_storage.parquet_storage import ParquetStorage
from encloc.exceptions import ClientError, EnclocError, IngestError
from encloc.localization.distance import save_scan_csv, synthetic_scan
from encloc.net.bench import run_bench
from encloc.net.client import load_or_generate_keys, run_client
from encloc.net.server import serve
from encloc.net.settings import BENCH_PRESETS, MODES, PRESET_ALIASES, BenchConfig, ClientConfig, ServerConfig
from encloc.utils.config import ConfigManager, config as global_config
from encloc.utils.logger import setup_logger


def cmd_serve(args, cfg: ConfigManager) -> bool:
    server_config = ServerConfig.from_config(cfg, listen=args.listen, db=args.db, min_count=args.min_count,
                                             table_cache=args.table_cache, map_id=args.map_id,
                                             show_progress=args.progress or None)
    serve(server_config)
    return True


def cmd_client(args, cfg: ConfigManager) -> bool:
    client_config = ClientConfig.from_config(cfg, server=args.server, scan=args.scan, scheme=args.scheme,
                                             mode=args.mode, key_bits=args.key_bits, k=args.k,
                                             key_dir=args.key_dir)
    try:
        result = run_client(client_config)
    except ClientError as e:
        logger.error(f"定位失败 [{e.stage}]: {e}")
        return False

    print(f"{result.position[0]} {result.position[1]}")
    if len(result.candidates) > 1:
        for rank, (x, y) in enumerate(result.candidates, start=1):
            logger.info(f"  第 {rank} 近: ({x}, {y})")
    logger.info(f"用时 {result.elapsed_ms:.1f} ms，发送 {sum(result.traffic['bytes_sent'].values())} B，"
                f"接收 {sum(result.traffic['bytes_received'].values())} B")
    return True


def cmd_bench(args, cfg: ConfigManager) -> bool:
    overrides = {
        'trials': args.trials,
        'repetitions': args.repetitions,
        'key_bits': args.key_bits,
        'reports_dir': args.reports_dir,
        'schemes': tuple(args.schemes) if args.schemes else None,
        'modes': tuple(args.modes) if args.modes else None,
        'seed': args.seed,
    }
    bench_config = BenchConfig.from_config(cfg, preset=args.preset, **overrides)
    report = run_bench(bench_config)
    paths = report.save()

    table = report.summary_table()
    if not table.empty:
        print("\n中位数耗时 (ms)，行=模式，列=方案")
        print(table.round(1).to_string())
    logger.info(f"报告: {paths['csv']}")
    return report.failed == 0


def cmd_gen(args, cfg: ConfigManager) -> bool:
    records = generate_synthetic(args.fingerprints, args.aps, seed=args.seed, map_id=args.map_id)
    save_csv(records, args.out)
    if args.scan_out:
        table = build_lookup_table(records, min_count=1)
        save_scan_csv(synthetic_scan(table, seed=args.seed), args.scan_out)
        logger.info(f"已写出示例扫描: {args.scan_out}")
    return True


def cmd_keygen(args, cfg: ConfigManager) -> bool:
    client_config = ClientConfig.from_config(cfg, scheme=args.scheme, key_bits=args.key_bits, key_dir=args.out_dir)
    load_or_generate_keys(client_config)
    logger.info(f"密钥目录: {client_config.key_dir}")
    return True


def cmd_table(args, cfg: ConfigManager) -> bool:
    records = ingest_csv(args.db)
    table = build_lookup_table(records, min_count=args.min_count, map_id=args.map_id)
    storage = ParquetStorage(cfg.get_data_paths()['base_path'])
    if not storage.save_lookup_table(args.name, table):
        return False
    print(f"{table.n_fingerprints} 个指纹 × {table.n_aps} 个 AP -> {args.name}")
    return True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='隐私保护的 Wi-Fi 指纹定位')
    parser.add_argument('-c', '--config', default=None, help='配置文件路径（默认 config/config.yaml）')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('serve', help='启动定位服务端')
    p.add_argument('--db', help='指纹 CSV')
    p.add_argument('--listen', help='监听地址 host:port')
    p.add_argument('--min-count', type=int, help='AP 至少出现的指纹数')
    p.add_argument('--table-cache', help='查找表缓存名')
    p.add_argument('--map-id', help='只使用该地图的指纹')
    p.add_argument('--progress', action='store_true', help='显示加密冒泡进度')
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser('client', help='执行一次定位')
    p.add_argument('--server', help='服务端地址 host:port')
    p.add_argument('--scan', help='扫描文件（mac,rss）')
    p.add_argument('--scheme', choices=SCHEMES)
    p.add_argument('--mode', choices=MODES)
    p.add_argument('--key-bits', type=int)
    p.add_argument('--k', type=int)
    p.add_argument('--key-dir', help='密钥目录，存在则加载，否则生成后保存')
    p.set_defaults(func=cmd_client)

    p = sub.add_parser('bench', help='基准测试')
    p.add_argument('--preset', choices=sorted([*BENCH_PRESETS, *PRESET_ALIASES]), default=None)
    p.add_argument('--trials', type=int)
    p.add_argument('--repetitions', type=int)
    p.add_argument('--key-bits', type=int)
    p.add_argument('--schemes', nargs='+', choices=SCHEMES)
    p.add_argument('--modes', nargs='+', choices=MODES)
    p.add_argument('--seed', type=int)
    p.add_argument('--reports-dir')
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('gen', help='生成合成指纹数据')
    p.add_argument('--fingerprints', type=int, default=19)
    p.add_argument('--aps', type=int, default=26)
    p.add_argument('--seed', type=int, default=2019)
    p.add_argument('--map-id', default='synthetic')
    p.add_argument('--out', required=True, help='输出 CSV')
    p.add_argument('--scan-out', help='同时写出一条示例扫描')
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser('keygen', help='生成并保存客户端密钥')
    p.add_argument('--scheme', choices=SCHEMES, required=True)
    p.add_argument('--key-bits', type=int)
    p.add_argument('--out-dir', required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser('table', help='构建查找表并写入缓存')
    p.add_argument('--db', required=True)
    p.add_argument('--name', required=True)
    p.add_argument('--min-count', type=int, default=8)
    p.add_argument('--map-id')
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ConfigManager(args.config) if args.config else global_config
    setup_logger(cfg.get('logging.level'), cfg.get('logging.file'))

    try:
        return 0 if args.func(args, cfg) else 1
    except IngestError as e:
        logger.error(f"指纹文件有 {len(e.errors)} 处错误")
        for line, message in e.errors[:20]:
            logger.error(f"  第 {line} 行: {message}")
        return 1
    except FileNotFoundError as e:
        logger.error(f"文件未找到: {e}")
        return 1
    except EnclocError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except Exception as e:
        logger.exception(f"发生错误: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
