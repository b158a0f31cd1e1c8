"""Exception hierarchy shared by every module."""


class BnecError(Exception):
    pass


# field
class NotPrimePower(BnecError, ValueError):
    pass


class TooLarge(BnecError, ValueError):
    pass


class DivideByZero(BnecError, ZeroDivisionError):
    pass


# linalg
class DimensionMismatch(BnecError, ValueError):
    pass


class KTooLarge(BnecError, ValueError):
    pass


# netgraph
class ParseError(BnecError, ValueError):
    pass


class CycleDetected(BnecError, ValueError):
    pass


class UnreachableReceiver(BnecError, ValueError):
    pass


class BadProbability(BnecError, ValueError):
    pass


class UnknownReceiver(BnecError, KeyError):
    pass


class InsufficientCut(BnecError, ValueError):
    pass


# design
class DesignFailed(BnecError, RuntimeError):
    def __init__(self, edge, retries):
        super().__init__(f"no valid local encoding vector for edge {edge} after {retries} draws")
        self.edge = edge
        self.retries = retries


class InfeasibleRate(BnecError, ValueError):
    pass


class RankDeficient(BnecError, ValueError):
    pass


class InstanceTooLarge(BnecError, ValueError):
    pass


# codec
class NotInCodeSpace(BnecError, ValueError):
    pass


# channel
class HeaderOverflow(BnecError, RuntimeError):
    def __init__(self, receiver, erasures, delta):
        super().__init__(
            f"receiver {receiver!r}: {len(erasures)} erasures exceed the header budget {delta}"
        )
        self.receiver = receiver
        self.erasures = tuple(erasures)
        self.delta = delta


# decode
class CodeDefect(BnecError, RuntimeError):
    def __init__(self, pattern, syndrome):
        super().__init__(f"syndrome {syndrome} maps to distinct coded vectors (pattern {sorted(pattern)})")
        self.pattern = tuple(sorted(pattern))
        self.syndrome = tuple(syndrome)


class ErasuresPresent(BnecError, ValueError):
    pass


class Ambiguous(BnecError, RuntimeError):
    pass


# analysis
class NotIndependent(BnecError, ValueError):
    pass


class BadDecoder(BnecError, ValueError):
    pass
