"""
密钥记录的序列化

公钥/私钥以十六进制大整数的 JSON 文本记录保存；DGK 的离散对数表在加载时重建。
"""

import json
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from loguru import logger

from ..exceptions import KeyFormatError
from .algebra import AnyPrivateKey, AnyPublicKey
from .ciphertext import SCHEME_DGK, SCHEME_PAILLIER
from .dgk import DGKPrivateKey, DGKPublicKey
from .number import from_hex, to_hex
from .paillier import PaillierPrivateKey, PaillierPublicKey


def public_key_to_record(public_key: AnyPublicKey) -> Dict[str, Any]:
    """公钥 -> 线路/文件记录"""
    if isinstance(public_key, PaillierPublicKey):
        return {'scheme': SCHEME_PAILLIER, 'n': to_hex(public_key.n), 'kf': public_key.key_fingerprint}
    return {
        'scheme': SCHEME_DGK,
        'n': to_hex(public_key.n),
        'g': to_hex(public_key.g),
        'h': to_hex(public_key.h),
        'u': to_hex(public_key.u),
        't': public_key.t,
        'kf': public_key.key_fingerprint,
    }


def public_key_from_record(record: Dict[str, Any]) -> AnyPublicKey:
    """线路/文件记录 -> 公钥，校验指纹"""
    try:
        scheme = record['scheme']
        if scheme == SCHEME_PAILLIER:
            public_key = PaillierPublicKey(from_hex(record['n']))
        elif scheme == SCHEME_DGK:
            public_key = DGKPublicKey(
                n=from_hex(record['n']),
                g=from_hex(record['g']),
                h=from_hex(record['h']),
                u=from_hex(record['u']),
                t=int(record['t']),
            )
        else:
            raise KeyFormatError(f"未知公钥方案: {scheme}")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, KeyFormatError):
            raise
        raise KeyFormatError(f"公钥记录格式错误: {e}") from e

    expected = record.get('kf')
    if expected is not None and expected != public_key.key_fingerprint:
        raise KeyFormatError(f"公钥指纹不符: {expected} != {public_key.key_fingerprint}")
    return public_key


def private_key_to_record(private_key: AnyPrivateKey) -> Dict[str, Any]:
    record = {'public': public_key_to_record(private_key.public_key),
              'p': to_hex(private_key.p),
              'q': to_hex(private_key.q)}
    if isinstance(private_key, DGKPrivateKey):
        record['v_p'] = to_hex(private_key.v_p)
        record['v_q'] = to_hex(private_key.v_q)
    return record


def private_key_from_record(record: Dict[str, Any]) -> AnyPrivateKey:
    public_key = public_key_from_record(record['public'])
    try:
        p = from_hex(record['p'])
        q = from_hex(record['q'])
        if isinstance(public_key, PaillierPublicKey):
            return PaillierPrivateKey(public_key, p, q)
        return DGKPrivateKey(public_key, p, q, from_hex(record['v_p']), from_hex(record['v_q']))
    except (KeyError, TypeError, ValueError) as e:
        raise KeyFormatError(f"私钥记录格式错误: {e}") from e


def save_keypair(private_key: AnyPrivateKey, path: Union[str, Path]) -> Path:
    """
    保存密钥对到 JSON 文件

    Args:
        private_key: 私钥（内含公钥）
        path: 文件路径

    Returns:
        实际写入的路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix('.tmp')
    with tmp_path.open('w', encoding='utf-8') as f:
        json.dump(private_key_to_record(private_key), f, indent=2)
    tmp_path.replace(path)
    logger.info(f"密钥已保存: {path}")
    return path


def load_keypair(path: Union[str, Path]) -> Tuple[AnyPublicKey, AnyPrivateKey]:
    """从 JSON 文件加载密钥对（DGK 小步表在此重建）"""
    path = Path(path)
    with path.open('r', encoding='utf-8') as f:
        record = json.load(f)
    private_key = private_key_from_record(record)
    logger.info(f"已加载 {private_key.public_key.scheme} 密钥: {path}")
    return private_key.public_key, private_key
