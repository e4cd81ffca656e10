from collections import Counter

import pytest

from agora.utils.hashing import fnv1a64, fnv1a64_hex, message_id, sha256_hex
from agora.utils.prng import SplitMix64, partial_fisher_yates, substream_seed


def test_fnv1a64_reference_values():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64_hex(b"a") == "af63dc4c8601ec8c"


def test_splitmix64_reference_sequence():
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_below_stays_in_range_and_rejects_empty_bound():
    rng = SplitMix64(42)
    assert all(0 <= rng.below(7) < 7 for _ in range(500))
    with pytest.raises(ValueError):
        rng.below(0)


def test_substreams_are_independent_of_each_other():
    a = substream_seed(99, "jury")
    assert a == substream_seed(99, "jury")
    assert a != substream_seed(99, "sortition")
    assert a != substream_seed(100, "jury")


def test_partial_fisher_yates_draws_distinct_items_in_selection_order():
    pool = [f"u{i}" for i in range(10)]
    first = partial_fisher_yates(pool, 4, SplitMix64(7))
    again = partial_fisher_yates(pool, 4, SplitMix64(7))
    assert first == again
    assert len(set(first)) == 4
    assert set(first) <= set(pool)
    # the input is never shuffled in place
    assert pool == [f"u{i}" for i in range(10)]


def test_partial_fisher_yates_bounds():
    assert partial_fisher_yates(["a", "b"], 0, SplitMix64(1)) == []
    with pytest.raises(ValueError):
        partial_fisher_yates(["a", "b"], 3, SplitMix64(1))


def test_partial_fisher_yates_is_roughly_uniform():
    pool = ["a", "b", "c", "d", "e"]
    rng = SplitMix64(2024)
    hits: Counter = Counter()
    trials = 5000
    for _ in range(trials):
        hits.update(partial_fisher_yates(pool, 2, rng))
    expected = trials * 2 / len(pool)
    for item in pool:
        assert abs(hits[item] - expected) < 0.1 * expected


def test_message_ids_are_128_bit_and_counter_dependent():
    first, second = message_id("a", 1), message_id("a", 2)
    assert len(first) == 32 and int(first, 16) >= 0
    assert first != second
    assert message_id("b", 1) != first


def test_sha256_hex():
    assert sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
