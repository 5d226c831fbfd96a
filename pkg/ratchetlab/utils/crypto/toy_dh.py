"""
Textbook Diffie-Hellman over a small prime modulus.

Kept apart from the real primitives: the numbers here are small enough to
check by hand and must never be used as key material.
"""
import logging

from ratchetlab.core.errors import ParameterError
from ratchetlab.models.crypto.keys import (
    ToyDhParams,
    ToyDhResult
)

logger = logging.getLogger(__name__)


def is_prime(n: int) -> bool:
    """Deterministic trial division; fine for n <= 2^31"""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    divisor = 3
    while divisor * divisor <= n:
        if n % divisor == 0:
            return False
        divisor += 2
    return True


def toy_dh_roundtrip(params: ToyDhParams, x: int, y: int) -> ToyDhResult:
    """
    Run both halves of the exchange.

    Args:
        params: prime base B and prime modulus G
        x: first party's secret exponent, 1 <= x < G - 1
        y: second party's secret exponent, 1 <= y < G - 1

    Returns:
        ToyDhResult with the two public values and the agreed secret

    Raises:
        ParameterError: G or B is not prime, or an exponent is out of range
    """
    base, modulus = params.base, params.modulus
    if not is_prime(modulus):
        raise ParameterError(f"modulus {modulus} is not prime")
    if not is_prime(base):
        raise ParameterError(f"base {base} is not prime")
    for name, exponent in (("x", x), ("y", y)):
        if not 1 <= exponent < modulus - 1:
            raise ParameterError(f"exponent {name}={exponent} outside 1..{modulus - 2}")

    X = pow(base, x, modulus)
    Y = pow(base, y, modulus)
    first_view = pow(Y, x, modulus)
    second_view = pow(X, y, modulus)
    # Holds for any prime modulus, so a mismatch means arithmetic is broken
    assert first_view == second_view == pow(base, x * y, modulus)
    return ToyDhResult(X=X, Y=Y, S=first_view)
