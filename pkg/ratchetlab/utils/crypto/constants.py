"""
Protocol constants for every derivation site.
This module centralizes all KDF info strings, salts and prefixes; they are
the interoperability contract documented in docs/wire.md and must stay
bit-exact.
"""

# HKDF info strings, one per derivation site
X3DH_SK_INFO = b"x3dh-sk-v1"
ROOT_STEP_INFO = b"root-step-v1"
CHAIN_STEP_INFO = b"chain-step-v1"
MESSAGE_KEY_INFO = b"msg-key-v1"
SIGNING_KEY_INFO = b"sig-key-v1"

# Info for the key that protects the initial X3DH ciphertext
FIRST_MESSAGE_INFO = X3DH_SK_INFO + b"\x01"

# Used wherever a derivation has no natural salt
ZERO_SALT = b"\x00" * 32

# Prepended to DH1 || DH2 || ... before deriving SK
X3DH_PREFIX = b"\xff" * 32

# Chain step inputs: HMAC(chain_key, MESSAGE_KEY_SEED) feeds the message key,
# HMAC(chain_key, CHAIN_KEY_SEED) is the next chain key
MESSAGE_KEY_SEED = b"\x01"
CHAIN_KEY_SEED = b"\x02"

# Sizes
KEY_SIZE = 32
AES_KEY_SIZE = 32
MAC_KEY_SIZE = 32
IV_SIZE = 16
BLOCK_SIZE = 16
TAG_SIZE = 32
MESSAGE_KEY_MATERIAL_SIZE = AES_KEY_SIZE + MAC_KEY_SIZE + IV_SIZE
HKDF_SHA256_MAX_LENGTH = 255 * 32
