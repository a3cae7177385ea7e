from __future__ import annotations

import json
from fractions import Fraction

import pytest

from wpvol.intersect import (
    CacheError,
    IntersectionNumbers,
    canonical_key,
    genus0_string_oracle,
    iter_keys,
    kappa_from_psi,
)


def test_spot_values(numbers):
    assert numbers(0, 0, [0, 0, 0]) == 1
    assert numbers(1, 1, [0]) == Fraction(1, 24)
    assert numbers(0, 0, [2, 0, 0, 0, 0]) == 1
    assert numbers(0, 2, [0] * 5) == 5
    assert numbers(1, 1, [1, 0]) == Fraction(1, 12)
    assert numbers(1, 2, [0, 0]) == Fraction(1, 8)
    assert numbers(2, 0, [4]) == Fraction(1, 1152)
    assert numbers(2, 0, [3, 2]) == Fraction(29, 5760)
    assert numbers(2, 0, [2, 2, 2]) == Fraction(7, 240)


def test_dimension_gate(numbers):
    assert numbers(1, 0, [2]) == 0
    assert numbers(0, 1, [0, 0, 0]) == 0
    assert numbers(2, 1, [0, 0]) == 0


def test_canonical_key():
    assert canonical_key(0, 0, [0, 1, 0, 0]) == (0, 0, (1, 0, 0, 0))
    for bad in ((0, 0, [0, 0]), (0, 0, []), (-1, 0, [1]), (1, -1, [0])):
        with pytest.raises(ValueError):
            canonical_key(*bad)


def test_string_oracle():
    assert genus0_string_oracle([0, 0, 0]) == 1
    assert genus0_string_oracle([1, 0, 0, 0]) == 1
    assert genus0_string_oracle([2, 2, 0, 0, 0, 0, 0]) == 6
    with pytest.raises(ValueError):
        genus0_string_oracle([0, 0])


def test_window_invariants(numbers):
    for g, k, psi in iter_keys(6):
        value = numbers(g, k, psi)
        assert kappa_from_psi(k, psi, g, numbers) == value
        if k:
            continue
        if g == 0:
            assert value == genus0_string_oracle(psi)
        n = len(psi)
        rest = list(psi)
        # string: <tau_0 X> = sum_i <X with d_i lowered>
        if 0 in rest and 2 * g - 2 + n - 1 > 0:
            rest.remove(0)
            total = sum(
                numbers(g, 0, rest[:i] + [d - 1] + rest[i + 1:]) for i, d in enumerate(rest) if d
            )
            assert value == total
        # dilaton: <tau_1 X> = (2g - 2 + n - 1) <X>
        rest = list(psi)
        if 1 in rest and 2 * g - 2 + n - 1 > 0:
            rest.remove(1)
            assert value == (2 * g - 2 + n - 1) * numbers(g, 0, rest)


def test_distinguished_index_symmetry(numbers):
    for g, k, psi in list(iter_keys(5))[::7]:
        for idx in range(len(psi)):
            if g == 0 and len(psi) == 3 or (g, len(psi)) == (1, 1):
                continue
            assert numbers.value_with_distinguished(g, k, psi, idx) == numbers(g, k, psi)


def test_kappa_from_psi_examples(numbers):
    assert kappa_from_psi(0, [2, 0, 0, 0, 0], 0, numbers) == 1
    assert kappa_from_psi(1, [0], 1, numbers) == Fraction(1, 24)
    assert kappa_from_psi(2, [0] * 5, 0, numbers) == 5
    assert kappa_from_psi(1, [0, 0], 1, numbers) == 0


def test_cache_roundtrip(tmp_path):
    path = tmp_path / "brackets.jsonl"
    first = IntersectionNumbers()
    values = {key: first.value(key) for key in iter_keys(5)}
    assert first.computed > 0
    first.save(path)
    second = IntersectionNumbers(path)
    assert second.loaded == len(first)
    assert {key: second.value(key) for key in iter_keys(5)} == values
    assert second.computed == 0


def test_cache_rejects_tampering(tmp_path):
    path = tmp_path / "c.jsonl"
    nums = IntersectionNumbers()
    nums(1, 0, [1])
    nums.save(path)
    lines = path.read_text().splitlines()
    rec = json.loads(lines[1])
    rec["value"] = "1/23"
    path.write_text("\n".join([lines[0], json.dumps(rec, separators=(",", ":"))] + lines[2:]) + "\n")
    with pytest.raises(CacheError):
        IntersectionNumbers(path)
    header = json.loads(lines[0])
    header["convention_sha256"] = "0" * 64
    path.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
    with pytest.raises(CacheError):
        IntersectionNumbers(path)


def test_thread_safety():
    from concurrent.futures import ThreadPoolExecutor

    nums = IntersectionNumbers()
    keys = list(iter_keys(5))
    with ThreadPoolExecutor(4) as pool:
        par = list(pool.map(nums.value, keys))
    assert par == [IntersectionNumbers().value(k) for k in keys]
