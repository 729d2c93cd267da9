import random

import pytest

from encloc.crypto.algebra import (
    decode_signed,
    decrypt,
    decrypt_signed,
    encode_signed,
    encrypt,
    encrypt_signed,
    he_add,
    he_negate,
    he_scalar_mul,
    he_sub,
)
from encloc.crypto.ciphertext import ciphertext_from_record, ciphertext_to_record, make_keyring
from encloc.crypto.keystore import load_keypair, public_key_from_record, public_key_to_record, save_keypair
from encloc.crypto.number import get_rng, reset_rng, seed_rng
from encloc.exceptions import IncompatibleCiphertextError, KeyFormatError, PlaintextOverflowError, WrongKeyError


class TestSignedEncoding:
    def test_exhaustive_small_modulus(self):
        M = 23
        for m in range(-11, 12):
            assert decode_signed(encode_signed(m, M), M) == m

    def test_overflow(self):
        with pytest.raises(PlaintextOverflowError):
            encode_signed(12, 23)
        with pytest.raises(PlaintextOverflowError):
            encode_signed(-12, 23)

    def test_encrypted_negative(self, paillier_keys, dgk_small_carrier_keys):
        for pk, sk in (paillier_keys, dgk_small_carrier_keys):
            for m in (-1000, -1, 0, 1, 1000):
                assert decrypt_signed(sk, encrypt_signed(pk, m)) == m


class TestCiphertextAlgebra:
    @pytest.mark.parametrize('keys_fixture', ['paillier_keys', 'dgk_small_carrier_keys'])
    def test_sub_and_negate(self, request, keys_fixture):
        pk, sk = request.getfixturevalue(keys_fixture)
        rng = random.Random(41)
        M = pk.plaintext_modulus
        for _ in range(100):
            a, b = rng.randrange(M), rng.randrange(M)
            ca, cb = encrypt(pk, a, rng), encrypt(pk, b, rng)
            assert decrypt(sk, he_sub(ca, cb)) == (a - b) % M
            assert decrypt(sk, he_negate(ca)) == (-a) % M

    def test_negative_scalar(self, paillier_keys):
        pk, sk = paillier_keys
        c = encrypt(pk, 7)
        assert decrypt_signed(sk, he_scalar_mul(c, -3)) == -21

    def test_mixed_schemes_rejected(self, paillier_keys, dgk_small_carrier_keys):
        c1 = encrypt(paillier_keys[0], 1)
        c2 = encrypt(dgk_small_carrier_keys[0], 1)
        with pytest.raises(IncompatibleCiphertextError):
            he_add(c1, c2)

    def test_mixed_keys_rejected(self, paillier_keys, other_paillier_keys):
        with pytest.raises(IncompatibleCiphertextError):
            he_add(encrypt(paillier_keys[0], 1), encrypt(other_paillier_keys[0], 1))


class TestRecords:
    def test_ciphertext_record(self, paillier_keys):
        pk, sk = paillier_keys
        c = encrypt(pk, 99)
        record = ciphertext_to_record(c)
        assert record['scheme'] == 'paillier'
        assert record['c'] == format(c.value, 'x')
        restored = ciphertext_from_record(record, make_keyring(pk))
        assert decrypt(sk, restored) == 99

    def test_unknown_key_in_record(self, paillier_keys, other_paillier_keys):
        record = ciphertext_to_record(encrypt(paillier_keys[0], 1))
        with pytest.raises(WrongKeyError):
            ciphertext_from_record(record, make_keyring(other_paillier_keys[0]))

    def test_public_key_record(self, dgk_bit_keys):
        pk, _ = dgk_bit_keys
        restored = public_key_from_record(public_key_to_record(pk))
        assert restored == pk

    def test_tampered_fingerprint(self, dgk_bit_keys):
        record = public_key_to_record(dgk_bit_keys[0])
        record['kf'] = '0' * len(record['kf'])
        with pytest.raises(KeyFormatError):
            public_key_from_record(record)

    def test_keypair_file(self, tmp_path, dgk_bit_keys, paillier_keys):
        for pk, sk in (dgk_bit_keys, paillier_keys):
            path = save_keypair(sk, tmp_path / f"{pk.scheme}.json")
            loaded_pk, loaded_sk = load_keypair(path)
            assert loaded_pk.key_fingerprint == pk.key_fingerprint
            assert decrypt(loaded_sk, encrypt(pk, 5)) == 5


class TestGlobalRng:
    @pytest.fixture(autouse=True)
    def _restore(self):
        reset_rng()
        yield
        reset_rng()

    def test_seed_rng(self):
        seed_rng(5)
        first = get_rng().getrandbits(64)
        seed_rng(5)
        assert get_rng().getrandbits(64) == first

    def test_env_seed_after_reset(self, monkeypatch):
        monkeypatch.setenv('ENCLOC_RNG_SEED', '42')
        reset_rng()
        assert get_rng().getrandbits(64) == random.Random(42).getrandbits(64)

    def test_explicit_rng_wins(self):
        seed_rng(5)
        rng = random.Random(7)
        assert get_rng(rng) is rng
