"""
测试公共夹具

密钥在整个测试会话内只生成一次；所有随机源均带固定种子，结果可复现。
"""

import os
import random
import sys
from pathlib import Path

import pytest

# 测试环境不写日志文件
os.environ.setdefault('ENCLOC_LOG_FILE', '')
os.environ.setdefault('ENCLOC_LOG_LEVEL', 'WARNING')

SRC_DIR = Path(__file__).resolve().parent.parent / 'src'
sys.path.insert(0, str(SRC_DIR))

from encloc.comparison.params import comparison_bit_length, dgk_carrier_u_bits  # noqa: E402
from encloc.crypto.dgk import dgk_keygen  # noqa: E402
from encloc.crypto.paillier import paillier_keygen, paillier_keypair_from_primes  # noqa: E402
from encloc.data_storage.fingerprint_db import build_lookup_table, generate_synthetic  # noqa: E402
from encloc.utils.logger import setup_logger  # noqa: E402

setup_logger()

# 小规模查找表：4 个 AP -> l = 17
SMALL_N_APS = 4
SMALL_L = comparison_bit_length(SMALL_N_APS)


@pytest.fixture
def rng():
    return random.Random(20190601)


@pytest.fixture(scope='session')
def toy_paillier():
    """p=11, q=13: n=143, lambda=60"""
    return paillier_keypair_from_primes(11, 13)


@pytest.fixture(scope='session')
def paillier_keys():
    return paillier_keygen(512, random.Random(101))


@pytest.fixture(scope='session')
def other_paillier_keys():
    return paillier_keygen(512, random.Random(102))


@pytest.fixture(scope='session')
def dgk_bit_keys():
    """逐位比较角色：u 为 16 位"""
    return dgk_keygen(512, t_bits=160, u_bits=16, rng=random.Random(202))


@pytest.fixture(scope='session')
def dgk_small_carrier_keys():
    """l=4 时的 DGK 载体密钥"""
    return dgk_keygen(512, t_bits=160, u_bits=dgk_carrier_u_bits(4), rng=random.Random(303))


@pytest.fixture(scope='session')
def dgk_carrier_keys():
    """与 SMALL_N_APS 列查找表匹配的 DGK 载体密钥"""
    return dgk_keygen(512, t_bits=160, u_bits=dgk_carrier_u_bits(SMALL_L), rng=random.Random(404))


@pytest.fixture(scope='session')
def small_table():
    records = generate_synthetic(5, SMALL_N_APS, seed=7)
    return build_lookup_table(records, min_count=1)


@pytest.fixture
def data_dir(tmp_path):
    path = tmp_path / 'data'
    path.mkdir()
    return path
