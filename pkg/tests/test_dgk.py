import random
import time

import pytest

from encloc.crypto.algebra import he_add, he_scalar_mul
from encloc.crypto.dgk import DlogTable, dgk_decrypt, dgk_encrypt, dgk_is_zero, dgk_keygen
from encloc.crypto.number import is_probable_prime
from encloc.exceptions import KeyGenerationError, PlaintextRangeError, WrongKeyError


class TestKeygen:
    def test_structure(self, dgk_bit_keys):
        pk, sk = dgk_bit_keys
        assert pk.n.bit_length() == 512
        assert pk.u.bit_length() == 16
        assert is_probable_prime(pk.u)
        assert (sk.p - 1) % (pk.u * sk.v_p) == 0
        assert (sk.q - 1) % (pk.u * sk.v_q) == 0
        assert sk.v_p.bit_length() == 160

    def test_explicit_u(self):
        pk, _ = dgk_keygen(512, t_bits=32, u=101, rng=random.Random(9))
        assert pk.u == 101

    def test_rejects_composite_u(self):
        with pytest.raises(KeyGenerationError):
            dgk_keygen(512, t_bits=32, u=100, rng=random.Random(9))

    def test_rejects_small_modulus(self):
        with pytest.raises(KeyGenerationError):
            dgk_keygen(256, rng=random.Random(9))


class TestEncryption:
    def test_roundtrip_full_message_space(self):
        pk, sk = dgk_keygen(512, t_bits=32, u=101, rng=random.Random(31))
        rng = random.Random(32)
        for m in range(pk.u):
            assert dgk_decrypt(sk, dgk_encrypt(pk, m, rng)) == m

    def test_roundtrip_random(self, dgk_bit_keys):
        pk, sk = dgk_bit_keys
        rng = random.Random(33)
        for _ in range(50):
            m = rng.randrange(pk.u)
            assert dgk_decrypt(sk, dgk_encrypt(pk, m, rng)) == m

    def test_zero_check(self, dgk_bit_keys):
        pk, sk = dgk_bit_keys
        rng = random.Random(34)
        assert dgk_is_zero(sk, dgk_encrypt(pk, 0, rng))
        for m in (1, 2, pk.u - 1):
            assert not dgk_is_zero(sk, dgk_encrypt(pk, m, rng))

    def test_zero_check_after_blinding(self, dgk_bit_keys):
        pk, sk = dgk_bit_keys
        rng = random.Random(35)
        c = he_scalar_mul(dgk_encrypt(pk, 0, rng), rng.randrange(1, pk.u))
        assert dgk_is_zero(sk, c)

    def test_homomorphism(self, dgk_bit_keys):
        pk, sk = dgk_bit_keys
        rng = random.Random(36)
        u = pk.u
        for _ in range(1000):
            m1, m2, k = rng.randrange(u), rng.randrange(u), rng.randrange(u)
            c1, c2 = dgk_encrypt(pk, m1, rng), dgk_encrypt(pk, m2, rng)
            assert dgk_decrypt(sk, he_add(c1, c2)) == (m1 + m2) % u
            assert dgk_decrypt(sk, he_scalar_mul(c1, k)) == m1 * k % u

    def test_plaintext_out_of_range(self, dgk_bit_keys):
        pk, _ = dgk_bit_keys
        with pytest.raises(PlaintextRangeError):
            dgk_encrypt(pk, pk.u)

    def test_wrong_key(self, dgk_bit_keys, dgk_small_carrier_keys):
        pk, _ = dgk_bit_keys
        _, other_sk = dgk_small_carrier_keys
        with pytest.raises(WrongKeyError):
            dgk_decrypt(other_sk, dgk_encrypt(pk, 1))
        with pytest.raises(WrongKeyError):
            dgk_is_zero(other_sk, dgk_encrypt(pk, 1))


def test_dlog_table_small_group():
    # 2 在 Z_101* 中的阶为 100
    table = DlogTable(2, 101, 100)
    for m in range(100):
        assert table.log(pow(2, m, 101)) == m


@pytest.mark.parametrize('baby_steps', [1, 7, 10, 33])
def test_dlog_table_across_giant_steps(baby_steps):
    table = DlogTable(2, 101, 100, baby_steps=baby_steps)
    assert table.giant_steps == -(-100 // table.size)
    for m in range(100):
        assert table.log(pow(2, m, 101)) == m


def test_is_zero_exhaustive_small_u():
    pk, sk = dgk_keygen(512, t_bits=32, u=23, rng=random.Random(37))
    rng = random.Random(38)
    for m in range(pk.u):
        c = dgk_encrypt(pk, m, rng)
        assert dgk_is_zero(sk, c) == (m == 0)
        assert dgk_is_zero(sk, he_scalar_mul(c, rng.randrange(1, pk.u))) == (m == 0)


class TestWidePlaintextSpace:
    """载体角色的宽 u：解密需要跨越多个大步"""

    @pytest.fixture(scope='class')
    def keys_24(self):
        return dgk_keygen(512, t_bits=64, u_bits=24, rng=random.Random(39))

    @pytest.fixture(scope='class')
    def keys_38(self):
        return dgk_keygen(1024, t_bits=160, u_bits=38, rng=random.Random(40))

    def test_roundtrip_24_bit_u(self, keys_24):
        pk, sk = keys_24
        size = sk.dlog_table.size
        assert sk.dlog_table.giant_steps > 1
        rng = random.Random(41)
        edges = [0, 1, size - 1, size, size + 1, pk.u - 1]
        for m in edges + [rng.randrange(pk.u) for _ in range(50)]:
            assert dgk_decrypt(sk, dgk_encrypt(pk, m, rng)) == m

    def test_homomorphism_24_bit_u(self, keys_24):
        pk, sk = keys_24
        rng = random.Random(42)
        for _ in range(50):
            m1, m2 = rng.randrange(pk.u), rng.randrange(pk.u)
            c = he_add(dgk_encrypt(pk, m1, rng), dgk_encrypt(pk, m2, rng))
            assert dgk_decrypt(sk, c) == (m1 + m2) % pk.u

    def test_decrypt_time_bound_38_bit_u(self, keys_38):
        pk, sk = keys_38
        rng = random.Random(43)
        for _ in range(20):
            m = rng.randrange(pk.u)
            c = dgk_encrypt(pk, m, rng)
            start = time.perf_counter()
            assert dgk_decrypt(sk, c) == m
            assert time.perf_counter() - start < 0.25

    def test_zero_check_cheaper_than_decrypt(self, keys_38):
        pk, sk = keys_38
        rng = random.Random(44)
        ciphertexts = [dgk_encrypt(pk, rng.randrange(1, pk.u), rng) for _ in range(10)]

        start = time.perf_counter()
        for c in ciphertexts:
            dgk_is_zero(sk, c)
        zero_check_time = time.perf_counter() - start

        start = time.perf_counter()
        for c in ciphertexts:
            dgk_decrypt(sk, c)
        decrypt_time = time.perf_counter() - start
        assert zero_check_time < decrypt_time


@pytest.mark.slow
def test_decrypt_time_bound_2048_bit_key():
    pk, sk = dgk_keygen(2048, t_bits=160, u_bits=38, rng=random.Random(45))
    rng = random.Random(46)
    for _ in range(100):
        m = rng.randrange(pk.u)
        c = dgk_encrypt(pk, m, rng)
        start = time.perf_counter()
        assert dgk_decrypt(sk, c) == m
        assert time.perf_counter() - start < 0.25
