"""Exception types shared across the package."""


class WcfError(Exception):
    """Base class for every error raised by this package."""


# posets
class CycleError(WcfError):
    pass


class UnknownElement(WcfError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class IncompatibleError(WcfError):
    pass


class NotASubposet(WcfError):
    pass


class NotAdvancing(WcfError):
    pass


# engine
class WiringError(WcfError):
    pass


class DimensionMismatch(WiringError):
    pass


class AlreadyLinked(WiringError):
    pass


class UnschedulableError(WcfError):
    pass


class CausalLoopError(WiringError, UnschedulableError):
    pass


class ExplosionError(WcfError):
    pass


class DomainMismatch(WcfError):
    pass


class KernelError(WcfError):
    pass


# protocols
class ParamRange(WcfError, ValueError):
    pass


class NotCombModel(WcfError):
    pass


class LengthMismatch(WcfError, ValueError):
    pass


class NotDyadic(WcfError, ValueError):
    pass


class NotAPartition(WcfError, ValueError):
    pass
