"""Exception hierarchy shared by the library and the command line front end."""


class NetPriceError(Exception):
    """Base class for every error raised by :mod:`netprice`."""


class NetworkValidationError(NetPriceError):
    """Raised when an adjacency matrix is not a valid influence network.

    ``violations`` lists every broken rule found, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ResultCyclic(NetworkValidationError):
    """A merge produced a network containing a cycle."""


class DemandError(NetPriceError):
    pass


class OutOfDomain(DemandError):
    pass


class OrderUnsupported(DemandError):
    pass


class SolverError(NetPriceError):
    pass


class NoGainsFromTrade(SolverError):
    pass


class NonMonotoneKernel(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class WrongFamily(SolverError):
    pass


class RootNotBracketed(SolverError):
    pass


class DepthTooLarge(SolverError):
    pass


class InputError(NetPriceError):
    """Malformed model, scenario, or parameter file."""
