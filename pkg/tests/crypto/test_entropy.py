import pytest

from ratchetlab.core.errors import EntropyError
from ratchetlab.utils.crypto.entropy import (
    FixedEntropy,
    SeededEntropy,
    SystemEntropy
)


def test_seeded_entropy_is_reproducible():
    assert SeededEntropy(7).read(100) == SeededEntropy(7).read(100)
    assert SeededEntropy(7).read(32) != SeededEntropy(8).read(32)


def test_seeded_entropy_reads_are_a_single_stream():
    split = SeededEntropy(3)
    assert split.read(10) + split.read(50) == SeededEntropy(3).read(60)


def test_forks_are_independent_and_reproducible():
    first, second = SeededEntropy(1), SeededEntropy(1)
    adam, bud = first.fork("adam"), first.fork("bud")
    assert adam.read(32) != bud.read(32)
    assert second.fork("adam").read(32) == SeededEntropy(1).fork("adam").read(32)


def test_fixed_entropy_runs_out():
    source = FixedEntropy(b"abcd")
    assert source.read(3) == b"abc"
    with pytest.raises(EntropyError):
        source.read(2)


def test_system_entropy_returns_requested_length():
    assert len(SystemEntropy().read(48)) == 48
