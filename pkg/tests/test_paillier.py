import random

import pytest

from encloc.crypto.algebra import decrypt, encrypt, he_add, he_scalar_mul
from encloc.crypto.paillier import paillier_decrypt, paillier_encrypt, paillier_keygen
from encloc.exceptions import KeyGenerationError, PlaintextRangeError, WrongKeyError
from encloc.utils.accounting import track_operations


class TestToyKey:
    def test_parameters(self, toy_paillier):
        pk, sk = toy_paillier
        assert pk.n == 143
        assert pk.g == 144
        assert sk.lam == 60

    def test_roundtrip_all_plaintexts(self, toy_paillier):
        pk, sk = toy_paillier
        for m in range(pk.n):
            assert paillier_decrypt(sk, paillier_encrypt(pk, m, r=2)) == m

    def test_forced_randomness_is_deterministic(self, toy_paillier):
        pk, _ = toy_paillier
        assert paillier_encrypt(pk, 5, r=2).value == paillier_encrypt(pk, 5, r=2).value
        assert paillier_encrypt(pk, 5, r=2).value != paillier_encrypt(pk, 5, r=3).value

    def test_textbook_vector(self, toy_paillier):
        pk, _ = toy_paillier
        n2 = 143 * 143
        assert paillier_encrypt(pk, 4, r=2).value == (1 + 4 * 143) * pow(2, 143, n2) % n2

    def test_plaintext_out_of_range(self, toy_paillier):
        pk, _ = toy_paillier
        with pytest.raises(PlaintextRangeError):
            paillier_encrypt(pk, 143)
        with pytest.raises(PlaintextRangeError):
            paillier_encrypt(pk, -1)


class TestKeygen:
    def test_modulus_size(self, paillier_keys):
        pk, sk = paillier_keys
        assert pk.n.bit_length() == 512
        assert sk.p * sk.q == pk.n

    def test_seeded_keygen_is_reproducible(self):
        pk1, _ = paillier_keygen(256, random.Random(5))
        pk2, _ = paillier_keygen(256, random.Random(5))
        assert pk1.n == pk2.n
        assert pk1.key_fingerprint == pk2.key_fingerprint

    @pytest.mark.parametrize('bits', [128, 255, 257])
    def test_rejects_bad_sizes(self, bits):
        with pytest.raises(KeyGenerationError):
            paillier_keygen(bits, random.Random(1))

    def test_encryptions_are_randomized(self, paillier_keys):
        pk, sk = paillier_keys
        rng = random.Random(12)
        c1, c2 = paillier_encrypt(pk, 42, rng), paillier_encrypt(pk, 42, rng)
        assert c1.value != c2.value
        assert paillier_decrypt(sk, c1) == paillier_decrypt(sk, c2) == 42


class TestHomomorphism:
    def test_additive_and_scalar(self, paillier_keys):
        pk, sk = paillier_keys
        rng = random.Random(11)
        n = pk.n
        for _ in range(1000):
            m1, m2, k = rng.randrange(n), rng.randrange(n), rng.randrange(n)
            c1, c2 = encrypt(pk, m1, rng), encrypt(pk, m2, rng)
            assert decrypt(sk, he_add(c1, c2)) == (m1 + m2) % n
            assert decrypt(sk, he_scalar_mul(c1, k)) == m1 * k % n

    def test_wrong_key_is_rejected(self, paillier_keys, other_paillier_keys):
        pk, _ = paillier_keys
        _, other_sk = other_paillier_keys
        with pytest.raises(WrongKeyError):
            paillier_decrypt(other_sk, paillier_encrypt(pk, 42))

    def test_operation_counters(self, paillier_keys):
        pk, sk = paillier_keys
        with track_operations() as ops:
            c = paillier_encrypt(pk, 7)
            paillier_decrypt(sk, c)
        assert ops.encryptions == 1
        assert ops.decryptions == 1


@pytest.mark.slow
def test_full_size_key():
    pk, sk = paillier_keygen(2048, random.Random(2048))
    assert pk.n.bit_length() == 2048
    assert paillier_decrypt(sk, paillier_encrypt(pk, 123456789)) == 123456789
