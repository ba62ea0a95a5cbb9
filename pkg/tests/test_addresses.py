import random

import pytest

from coolang.addresses import Address, Allocator, allocate_between, initial_addresses


def test_parse_and_str_roundtrip():
    a = Address.parse("3.1.4")
    assert a.digits == (3, 1, 4)
    assert str(a) == "3.1.4"


def test_first_and_last_digit_must_be_nonzero():
    with pytest.raises(ValueError):
        Address((0, 1))
    with pytest.raises(ValueError):
        Address((1, 0))
    Address((1, 0, 1))  # interior zeros are fine


def test_zero_padded_comparison():
    # 3.1 sits between 3 and 4; padding compares front to back
    assert Address((3,)) < Address((3, 1)) < Address((4,))
    assert Address((3, 0, 1)) < Address((3, 1))
    assert Address((12,)) > Address((9, 9))


def test_allocate_between_worked_examples():
    assert allocate_between(Address((3,)), Address((4,))) == Address((3, 1))
    assert allocate_between(Address((3, 1)), Address((3, 2))) == Address((3, 1, 1))
    assert allocate_between(Address((3,)), Address((3, 1))) == Address((3, 0, 1))


def test_allocate_between_open_ends():
    assert allocate_between(None, None) == Address((1,))
    assert allocate_between(None, Address((3,))) == Address((2,))
    assert allocate_between(None, Address((1, 1))) == Address((1, 0, 1))
    assert allocate_between(Address((7,)), None) == Address((8,))
    with pytest.raises(ValueError):
        allocate_between(None, Address((1,)))  # nothing sorts below 1


def test_allocate_between_always_strictly_inside():
    rng = random.Random(20240817)
    for _ in range(2000):
        lo = Address(
            tuple(
                [rng.randint(1, 9)]
                + [rng.randint(0, 9) for _ in range(rng.randint(0, 3))]
                + [rng.randint(1, 9)]
            )
        )
        hi = Address(
            tuple(
                [rng.randint(1, 9)]
                + [rng.randint(0, 9) for _ in range(rng.randint(0, 3))]
                + [rng.randint(1, 9)]
            )
        )
        if hi < lo:
            lo, hi = hi, lo
        if lo == hi:
            continue
        mid = allocate_between(lo, hi)
        assert lo < mid < hi


def test_allocator_run_between_is_ordered_and_fresh():
    alloc = Allocator([Address((1,)), Address((2,))])
    run = alloc.run_between(Address((1,)), Address((2,)), 5)
    assert len(run) == 5
    assert all(Address((1,)) < a < Address((2,)) for a in run)
    assert run == sorted(run)
    assert len(set(run)) == 5


def test_initial_addresses():
    assert list(initial_addresses(3)) == [Address((1,)), Address((2,)), Address((3,))]
