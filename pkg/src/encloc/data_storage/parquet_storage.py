import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import pyarrow as pa
import pyarrow.parquet as pq
from loguru import logger

from ..utils.config import config
from ..utils.timezone import now_utc_iso
from .fingerprint_db import LookupTable

TABLE_META_KEY = b'encloc.table'


class ParquetStorage:
    """查找表的 Parquet 缓存管理器"""

    def __init__(self, base_path: Optional[str] = None):
        """
        初始化存储管理器

        Args:
            base_path: 数据存储基础路径
        """
        if base_path is None:
            paths = config.get_data_paths()
            base_path = paths['base_path']

        self.base_path = Path(base_path)
        self.tables_path = self.base_path / "tables"
        self.metadata_path = self.base_path / "metadata"

        self._ensure_directories()

    def _ensure_directories(self):
        for path in [self.base_path, self.tables_path, self.metadata_path]:
            path.mkdir(parents=True, exist_ok=True)

    def _get_table_file_path(self, name: str) -> Path:
        """
        获取查找表文件路径

        Args:
            name: 表名（一般为 map_id）

        Returns:
            文件路径
        """
        safe_name = name.replace('/', '_').replace('.', '_')
        return self.tables_path / f"{safe_name}.parquet"

    def save_lookup_table(self, name: str, table: LookupTable) -> bool:
        """
        保存查找表，v_c 与 map_id 写入 parquet 的 schema 元数据

        Args:
            name: 表名
            table: 查找表

        Returns:
            是否保存成功
        """
        try:
            file_path = self._get_table_file_path(name)
            arrow_table = pa.Table.from_pandas(table.to_frame(), preserve_index=False)
            meta = dict(arrow_table.schema.metadata or {})
            meta[TABLE_META_KEY] = json.dumps({'v_c': table.v_c, 'map_id': table.map_id}).encode('utf-8')
            pq.write_table(arrow_table.replace_schema_metadata(meta), file_path, compression='snappy')

            self.save_build_log({
                'name': name,
                'map_id': table.map_id,
                'n_fingerprints': table.n_fingerprints,
                'n_aps': table.n_aps,
                'v_c': table.v_c,
                'file': str(file_path),
            })
            logger.info(f"成功保存查找表 {name}: {table.n_fingerprints}×{table.n_aps} 到 {file_path}")
            return True

        except Exception as e:
            logger.error(f"保存查找表 {name} 失败: {e}")
            return False

    def load_lookup_table(self, name: str) -> Optional[LookupTable]:
        """
        加载查找表

        Args:
            name: 表名

        Returns:
            LookupTable，文件不存在或损坏时返回 None
        """
        try:
            file_path = self._get_table_file_path(name)

            if not file_path.exists():
                logger.debug(f"查找表文件不存在: {file_path}")
                return None

            arrow_table = pq.read_table(file_path)
            raw = (arrow_table.schema.metadata or {}).get(TABLE_META_KEY)
            attrs = json.loads(raw) if raw else {}
            df = arrow_table.to_pandas()
            table = LookupTable.from_frame(df, v_c=int(attrs.get('v_c', -120)), map_id=attrs.get('map_id'))
            logger.debug(f"成功加载查找表 {name}: {table.n_fingerprints}×{table.n_aps}")
            return table

        except Exception as e:
            logger.error(f"加载查找表 {name} 失败: {e}")
            return None

    def delete_lookup_table(self, name: str) -> bool:
        try:
            file_path = self._get_table_file_path(name)
            if file_path.exists():
                file_path.unlink()
                logger.debug(f"已删除查找表 {name}")
            return True

        except Exception as e:
            logger.error(f"删除查找表 {name} 失败: {e}")
            return False

    def list_tables(self) -> List[str]:
        """列出所有缓存的查找表名"""
        return sorted(p.stem for p in self.tables_path.glob("*.parquet"))

    def save_build_log(self, build_info: Dict[str, Any]) -> bool:
        """
        追加查找表构建日志，保留最近 100 条

        Args:
            build_info: 构建信息

        Returns:
            是否保存成功
        """
        try:
            log_file = self.metadata_path / "table_build_log.json"

            if log_file.exists():
                with open(log_file, 'r', encoding='utf-8') as f:
                    logs = json.load(f)
            else:
                logs = []

            build_info = dict(build_info, timestamp=now_utc_iso())
            logs.append(build_info)
            logs = logs[-100:]

            with open(log_file, 'w', encoding='utf-8') as f:
                json.dump(logs, f, ensure_ascii=False, indent=2)

            return True

        except Exception as e:
            logger.error(f"保存构建日志失败: {e}")
            return False

    def get_latest_build_info(self) -> Optional[Dict[str, Any]]:
        """
        获取最近一次构建信息

        Returns:
            最新构建信息或None
        """
        try:
            log_file = self.metadata_path / "table_build_log.json"

            if not log_file.exists():
                return None

            with open(log_file, 'r', encoding='utf-8') as f:
                logs = json.load(f)

            return logs[-1] if logs else None

        except Exception as e:
            logger.error(f"获取最新构建信息失败: {e}")
            return None
