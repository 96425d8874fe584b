"""Exception hierarchy shared by every layer of the package."""


class PimsError(Exception):
    """Base class for all package errors."""


class InvalidParams(PimsError):
    pass


class AuthenticationFailure(PimsError):
    """DEM tag check failed: wrong key, wrong associated data or tampering."""


class CapsuleCheckFailure(PimsError):
    pass


class DecodeError(PimsError, ValueError):
    pass


class InvalidPolicy(PimsError, ValueError):
    pass


class InsufficientShares(PimsError):
    pass


class DuplicateIndex(PimsError):
    pass


class InvalidKFrag(PimsError):
    pass


class InvalidCFrag(PimsError):
    pass


class InsufficientFragments(PimsError):
    pass


class DuplicateFragment(PimsError):
    pass


class CombineVerificationFailure(PimsError):
    """Combined fragments are inconsistent with the capsule and owner key."""


class BadSignature(PimsError):
    pass


class DuplicateRecord(PimsError):
    pass


class Unauthorized(PimsError):
    pass


class UnknownRecord(PimsError, KeyError):
    pass


class NotFound(PimsError, KeyError):
    pass


class IntegrityMismatch(PimsError):
    pass


class CountMismatch(PimsError, ValueError):
    pass


class ProvisioningFailed(PimsError):
    def __init__(self, message: str, acks=()):
        super().__init__(message)
        self.acks = list(acks)


class InsufficientResponses(PimsError):
    def __init__(self, message: str, valid: int = 0, received: int = 0):
        super().__init__(message)
        self.valid = valid
        self.received = received


class ConfigInvalid(PimsError, ValueError):
    pass
