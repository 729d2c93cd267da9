"""
配置管理

YAML 配置文件可选；缺失的键回落到 DEFAULTS。
查找顺序：ENCLOC_CONFIG 指定的路径 > 项目根目录下 config/config.yaml。
"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from loguru import logger

from . import logger as _logger_module  # noqa: F401

ENV_CONFIG = 'ENCLOC_CONFIG'
ENV_LISTEN = 'ENCLOC_LISTEN'
ENV_RNG_SEED = 'ENCLOC_RNG_SEED'

DEFAULT_LISTEN = '127.0.0.1:8828'

DEFAULTS: Dict[str, Dict[str, Any]] = {
    'dgk': {'t_bits': 160, 'bit_u_bits': 16, 'carrier_u_bits': 39},
    'comparison': {'sigma_paillier': 80, 'sigma_dgk': 16, 'max_l': 32},
    'data_storage': {'base_path': './data'},
}


def _default_config_path() -> Path:
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        return Path(env_path)
    project_root = Path(__file__).resolve().parents[3]
    return project_root / 'config' / 'config.yaml'


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Args:
            config_path: 配置文件路径，为 None 时使用 ENCLOC_CONFIG 或默认路径
        """
        self.config_path = Path(config_path) if config_path else _default_config_path()
        self._config: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self) -> None:
        if not self.config_path.exists():
            logger.debug(f"配置文件不存在，使用默认配置: {self.config_path}")
            self._config = {}
            return

        try:
            loaded = yaml.safe_load(self.config_path.read_text(encoding='utf-8'))
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"加载配置文件失败，使用默认配置: {e}")
            self._config = {}
            return

        if loaded is not None and not isinstance(loaded, dict):
            logger.error(f"配置文件顶层必须是映射: {self.config_path}")
            loaded = None
        self._config = loaded or {}
        logger.info(f"成功加载配置文件: {self.config_path}")

    def reload(self) -> None:
        self._load_config()

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置值，支持点号分隔的嵌套键，如 'server.listen'

        只读取配置文件本身；默认值由 section() 和各 get_* 方法合并。
        """
        value: Any = self._config
        for part in key.split('.'):
            if not isinstance(value, dict) or part not in value:
                return default
            value = value[part]
        return value

    def set(self, key: str, value: Any) -> None:
        *parents, leaf = key.split('.')
        node = self._config
        for part in parents:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[leaf] = value

    def save(self) -> None:
        try:
            self.config_path.parent.mkdir(parents=True, exist_ok=True)
            self.config_path.write_text(
                yaml.safe_dump(self._config, allow_unicode=True, sort_keys=False, indent=2),
                encoding='utf-8',
            )
            logger.info(f"配置已保存到: {self.config_path}")
        except OSError as e:
            logger.error(f"保存配置文件失败: {e}")

    def section(self, name: str) -> Dict[str, Any]:
        """返回某一节的配置，文件中的值覆盖 DEFAULTS"""
        merged = copy.deepcopy(DEFAULTS.get(name, {}))
        loaded = self.get(name, {})
        if isinstance(loaded, dict):
            merged.update(loaded)
        elif loaded:
            logger.warning(f"配置节 {name} 不是映射，已忽略")
        return merged

    def _int_section(self, name: str) -> Dict[str, int]:
        values = self.section(name)
        return {key: int(values[key]) for key in DEFAULTS[name]}

    def get_listen_address(self) -> str:
        """服务端监听地址，ENCLOC_LISTEN 优先"""
        return os.environ.get(ENV_LISTEN) or self.get('server.listen', DEFAULT_LISTEN)

    def get_rng_seed(self) -> Optional[int]:
        """测试用随机数种子，仅在设置了 ENCLOC_RNG_SEED 时返回"""
        raw = os.environ.get(ENV_RNG_SEED, '').strip()
        if not raw:
            return None
        try:
            return int(raw)
        except ValueError:
            logger.warning(f"忽略无效的 {ENV_RNG_SEED}: {raw!r}")
            return None

    def get_data_paths(self) -> Dict[str, str]:
        section = self.section('data_storage')
        base_path = section['base_path']
        return {
            'base_path': base_path,
            'tables_path': section.get('tables_path', f'{base_path}/tables'),
            'keys_path': section.get('keys_path', f'{base_path}/keys'),
            'metadata_path': section.get('metadata_path', f'{base_path}/metadata'),
        }

    def get_dgk_config(self) -> Dict[str, int]:
        return self._int_section('dgk')

    def get_comparison_config(self) -> Dict[str, int]:
        return self._int_section('comparison')


# 全局配置实例
config = ConfigManager()
