import random
from dataclasses import dataclass

import pytest

from encloc.comparison.kmin import expected_comparisons, k_min_select
from encloc.comparison.params import ComparisonParams
from encloc.comparison.protocol import LocalKeyholderChannel
from encloc.crypto.algebra import decrypt, encrypt
from encloc.crypto.ciphertext import Ciphertext
from encloc.exceptions import ComparisonAbortedError, LocalizationParameterError


@dataclass
class Row:
    label: str
    dist: Ciphertext


@pytest.fixture
def setup(paillier_keys, dgk_bit_keys):
    pk, sk = paillier_keys
    rng = random.Random(61)
    params = ComparisonParams.for_carrier('paillier', 5)
    channel = LocalKeyholderChannel(sk, dgk_bit_keys[1], params, rng)

    def make_rows(values):
        return [Row(f"r{i}", encrypt(pk, v, rng)) for i, v in enumerate(values)]

    return make_rows, channel, params, dgk_bit_keys[0], sk, rng


def test_expected_comparisons():
    assert expected_comparisons(19, 1) == 18
    assert expected_comparisons(5, 3) == 4 + 3 + 2
    assert expected_comparisons(1, 1) == 0
    assert expected_comparisons(4, 4) == 6


def test_single_minimum(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    result = k_min_select(make_rows([7, 2, 9, 4]), 1, channel, params, bit_pk, rng=rng)
    assert decrypt(sk, result.rows[3].dist) == 2
    assert result.winners[0].label == 'r1'
    assert result.comparisons == 3
    assert channel.sessions_opened == 3


def test_two_smallest_ascending_toward_tail(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    result = k_min_select(make_rows([7, 2, 9, 4]), 2, channel, params, bit_pk, rng=rng)
    assert decrypt(sk, result.rows[3].dist) == 2
    assert decrypt(sk, result.rows[2].dist) == 4
    assert [w.label for w in result.winners] == ['r1', 'r3']
    assert result.comparisons == expected_comparisons(4, 2)


def test_tail_holds_k_smallest(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    values = [rng.randrange(32) for _ in range(8)]
    result = k_min_select(make_rows(values), 3, channel, params, bit_pk, rng=rng)
    tail = [decrypt(sk, w.dist) for w in result.winners]
    assert tail == sorted(values)[:3]
    assert sorted(decrypt(sk, r.dist) for r in result.rows) == sorted(values)


def test_single_row(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    rows = make_rows([11])
    result = k_min_select(rows, 1, channel, params, bit_pk, rng=rng)
    assert result.comparisons == 0
    assert result.winners[0] is rows[0]
    assert channel.sessions_opened == 0


def test_ties_never_swap(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    result = k_min_select(make_rows([3, 3, 3]), 1, channel, params, bit_pk, rng=rng)
    # 等值不交换，原位置最靠后者胜出
    assert [r.label for r in result.rows] == ['r0', 'r1', 'r2']
    assert result.winners[0].label == 'r2'


@pytest.mark.parametrize('k', [0, 5])
def test_k_out_of_range(setup, k):
    make_rows, channel, params, bit_pk, sk, rng = setup
    with pytest.raises(LocalizationParameterError):
        k_min_select(make_rows([1, 2, 3, 4]), k, channel, params, bit_pk, rng=rng)


def test_abort_propagates(setup):
    make_rows, _, params, bit_pk, sk, rng = setup

    class BrokenChannel:
        def exchange(self, message):
            raise ComparisonAbortedError("信道断开")

    with pytest.raises(ComparisonAbortedError):
        k_min_select(make_rows([1, 2]), 1, BrokenChannel(), params, bit_pk, rng=rng)


def test_random_arrays_match_partial_sort(setup):
    make_rows, channel, params, bit_pk, sk, rng = setup
    for trial in range(30):
        k = trial % 3 + 1
        n = rng.randint(k, 30)
        values = [rng.randrange(1 << params.l) for _ in range(n)]
        opened = channel.sessions_opened
        result = k_min_select(make_rows(values), k, channel, params, bit_pk, rng=rng)

        assert [decrypt(sk, w.dist) for w in result.winners] == sorted(values)[:k], values
        assert [decrypt(sk, r.dist) for r in result.rows[n - k:]] == sorted(values)[:k][::-1]
        assert result.comparisons == expected_comparisons(n, k) == sum(n - i - 1 for i in range(k))
        assert channel.sessions_opened - opened == result.comparisons
