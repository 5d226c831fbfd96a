import pytest

from ratchetlab.utils.crypto.vectors import primitive_vectors


@pytest.mark.vectors
def test_every_published_vector_matches():
    results = primitive_vectors()
    failed = [result.name for result in results if not result.passed]
    assert failed == []


@pytest.mark.vectors
def test_each_primitive_has_a_vector():
    families = {result.name.split("/")[0] for result in primitive_vectors()}
    assert {"x25519", "hkdf-sha256", "hmac-sha256", "toy-dh"} <= families
