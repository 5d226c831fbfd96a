"""
Exception hierarchy shared by every ratchetlab component.

Each error carries a short `reason` slug. The simulation harness copies it
verbatim into rejected transcript events, so reasons are part of the
transcript format and should not be renamed casually.
"""


class RatchetLabError(Exception):
    """Base class for all ratchetlab errors"""

    reason = "error"

    def __init__(self, message: str, reason: str = None):
        self.message = message
        if reason is not None:
            self.reason = reason
        super().__init__(self.message)


# Cryptographic primitives
class CryptoError(RatchetLabError):
    reason = "crypto"


class EntropyError(CryptoError):
    """The entropy source could not supply the requested bytes"""
    reason = "entropy-exhausted"


class ContributoryError(CryptoError):
    """A DH computation produced the all-zero output (low-order peer point)"""
    reason = "non-contributory-dh"


class ParameterError(CryptoError):
    reason = "bad-parameters"


class KdfLengthError(CryptoError):
    reason = "kdf-length"


class AuthenticationError(CryptoError):
    """A MAC tag did not verify"""
    reason = "authentication-failed"


class MalformedCiphertextError(CryptoError):
    reason = "malformed-ciphertext"


class PaddingError(CryptoError):
    """Padding was invalid after the tag verified; unreachable for honest ciphertexts"""
    reason = "internal-padding"


# Prekey server
class RegistryError(RatchetLabError):
    reason = "registry"


class ConflictError(RegistryError):
    reason = "conflict"


class NotFoundError(RegistryError):
    reason = "not-found"


class SignatureRejectedError(RegistryError):
    reason = "bad-signature"


class DuplicatePrekeyError(RegistryError):
    reason = "duplicate-prekey"


# X3DH
class HandshakeError(RatchetLabError):
    reason = "handshake"


class AbortError(HandshakeError):
    """The initiator refused to proceed; no message was produced"""
    reason = "aborted"


class MissingKeyError(HandshakeError):
    reason = "missing-key"


class TerminatedError(HandshakeError):
    """The responder could not decrypt the initial ciphertext and discarded SK"""
    reason = "terminated"


# Double ratchet
class RatchetError(RatchetLabError):
    reason = "ratchet"


class RatchetStateError(RatchetError):
    reason = "bad-state"


class SkippedKeyFloodError(RatchetError):
    reason = "skip-flood"


class RatchetStepError(RatchetError):
    reason = "step-failed"


# Session layer
class ProtocolError(RatchetLabError):
    reason = "protocol"


class ParseError(ProtocolError):
    reason = "parse"


class NoSessionError(ProtocolError):
    reason = "no-session"


# Simulation
class ScenarioConfigError(RatchetLabError):
    reason = "bad-scenario"
