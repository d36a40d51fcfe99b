"""Closed error enumeration shared by every layer.

Each class carries a stable ``code`` string; the wire protocol uses the code
to map errors across the socket and back to the same class.
"""


class VosdError(Exception):
    code = "error"

    def __init__(self, detail=""):
        super().__init__(detail)
        self.detail = detail


class InvalidArgument(VosdError):
    code = "invalid_argument"


class AlreadyExists(VosdError):
    code = "already_exists"


class NoSuchCollection(VosdError):
    code = "no_such_collection"


class NoSuchCollectionVersion(VosdError):
    code = "no_such_collection_version"


class NoSuchObject(VosdError):
    code = "no_such_object"


class NoSuchVersion(VosdError):
    code = "no_such_version"


class NoSuchPointer(VosdError):
    code = "no_such_pointer"


class OutOfBounds(VosdError):
    code = "out_of_bounds"


class FrozenVersion(VosdError):
    code = "frozen_version"


class VersionInUse(VosdError):
    code = "version_in_use"


class DanglingTarget(VosdError):
    code = "dangling_target"


class CorruptManifest(VosdError):
    code = "corrupt_manifest"


class IoFailure(VosdError):
    code = "io_failure"


# transaction layer
class TxNotActive(VosdError):
    code = "tx_not_active"


class TxContention(VosdError):
    code = "tx_contention"


class UninitializedHct(VosdError):
    code = "uninitialized_hct"


class UninitializedHrc(VosdError):
    code = "uninitialized_hrc"


class ConcurrentCheckpoint(VosdError):
    code = "concurrent_checkpoint"


class CkptNotActive(VosdError):
    code = "ckpt_not_active"


class NotLinearChain(VosdError):
    code = "not_linear_chain"


class InUse(VosdError):
    code = "in_use"


# benchmark harness
class InvalidSpec(VosdError):
    code = "invalid_spec"


class VerificationFailure(VosdError):
    code = "verification_failure"


# wire protocol
class BadRequest(VosdError):
    code = "bad_request"


class UnknownOp(VosdError):
    code = "unknown_op"


class Timeout(VosdError):
    code = "timeout"


class ConnectionClosed(VosdError):
    code = "connection_closed"


class BindFailure(VosdError):
    code = "bind_failure"


class InternalError(VosdError):
    code = "internal"


def _all_subclasses(cls):
    for sub in cls.__subclasses__():
        yield sub
        yield from _all_subclasses(sub)


ERRORS_BY_CODE = {cls.code: cls for cls in _all_subclasses(VosdError)}
ERRORS_BY_CODE[VosdError.code] = VosdError


def error_from_code(code, detail=""):
    return ERRORS_BY_CODE.get(code, VosdError)(detail)
