"""
服务端、客户端与基准测试的类型化配置

取值优先级：关键字参数（命令行） > YAML 配置 > 默认值。
"""

from dataclasses import dataclass, fields
from typing import Any, Dict, List, Optional, Tuple

from ..crypto.ciphertext import SCHEME_DGK, SCHEME_PAILLIER
from ..utils.config import ConfigManager, config as global_config

MODE_CLIENT = 'client'
MODE_SERVER = 'server'
MODES = (MODE_CLIENT, MODE_SERVER)

BENCH_PRESETS: Dict[str, Dict[str, Any]] = {
    'full': {'n_fprints': 19, 'n_aps': 26, 'trials': 20, 'key_bits': 2048},
    'smoke': {'n_fprints': 5, 'n_aps': 4, 'trials': 1, 'key_bits': 512},
}
# 预设别名
PRESET_ALIASES: Dict[str, str] = {'paper': 'full'}


def _merge(cls, section: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    values = {k: v for k, v in (section or {}).items() if k in names}
    values.update({k: v for k, v in overrides.items() if v is not None and k in names})
    return values


@dataclass
class ServerConfig:
    listen: str = '127.0.0.1:8828'
    db: Optional[str] = None
    table_cache: Optional[str] = None
    min_count: int = 8
    v_c: int = -120
    map_id: Optional[str] = None
    max_l: int = 32
    sigma_paillier: int = 80
    sigma_dgk: int = 16
    show_progress: bool = False

    def sigma_for(self, scheme: str) -> int:
        return self.sigma_dgk if scheme == SCHEME_DGK else self.sigma_paillier

    @classmethod
    def from_config(cls, cfg: Optional[ConfigManager] = None, **overrides) -> 'ServerConfig':
        cfg = cfg or global_config
        values = _merge(cls, cfg.get('server', {}), {})
        values['listen'] = cfg.get_listen_address()
        values.update(cfg.get_comparison_config())
        values = _merge(cls, values, overrides)
        return cls(**values)


@dataclass
class ClientConfig:
    server: str = '127.0.0.1:8828'
    scan: Optional[str] = None
    scheme: str = SCHEME_PAILLIER
    mode: str = MODE_SERVER
    key_bits: int = 2048
    k: int = 1
    key_dir: Optional[str] = None
    t_bits: int = 160
    bit_u_bits: int = 16
    carrier_u_bits: int = 39
    timeout: float = 600.0

    def __post_init__(self):
        if self.scheme not in (SCHEME_PAILLIER, SCHEME_DGK):
            raise ValueError(f"未知方案: {self.scheme}")
        if self.mode not in MODES:
            raise ValueError(f"未知模式: {self.mode}")
        if self.k < 1:
            raise ValueError(f"k 必须 >= 1: {self.k}")

    @classmethod
    def from_config(cls, cfg: Optional[ConfigManager] = None, **overrides) -> 'ClientConfig':
        cfg = cfg or global_config
        values = _merge(cls, cfg.get('client', {}), {})
        values.update(cfg.get_dgk_config())
        values = _merge(cls, values, overrides)
        return cls(**values)


@dataclass
class BenchConfig:
    preset: str = 'full'
    trials: int = 20
    repetitions: int = 1
    key_bits: int = 2048
    n_fprints: int = 19
    n_aps: int = 26
    k: int = 1
    seed: int = 2019
    min_count: int = 8
    schemes: Tuple[str, ...] = (SCHEME_PAILLIER, SCHEME_DGK)
    modes: Tuple[str, ...] = (MODE_CLIENT, MODE_SERVER)
    reports_dir: str = 'reports'
    listen: str = '127.0.0.1:0'
    t_bits: int = 160
    bit_u_bits: int = 16
    carrier_u_bits: int = 39

    @classmethod
    def from_config(cls, cfg: Optional[ConfigManager] = None, preset: Optional[str] = None,
                    **overrides) -> 'BenchConfig':
        cfg = cfg or global_config
        section = dict(cfg.get('bench', {}) or {})
        preset = preset or section.get('preset', 'full')
        preset = PRESET_ALIASES.get(preset, preset)
        if preset not in BENCH_PRESETS:
            raise ValueError(f"未知预设: {preset}，可选 {', '.join(BENCH_PRESETS)}")
        values = _merge(cls, {k: v for k, v in section.items() if k != 'presets'}, {})
        values = _merge(cls, values, BENCH_PRESETS[preset])
        values.update(cfg.get_dgk_config())
        values['preset'] = preset
        values = _merge(cls, values, overrides)
        for key in ('schemes', 'modes'):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    def cells(self) -> List[Tuple[str, str]]:
        """(scheme, mode) 组合"""
        return [(scheme, mode) for mode in self.modes for scheme in self.schemes]
