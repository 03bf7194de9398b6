"""Exception hierarchy shared by all modules."""


class NilrectError(Exception):
    """Base class; the CLI maps these to exit code 2."""

    def payload(self):
        return {"error": type(self).__name__, "message": str(self)}


class DimensionMismatch(NilrectError, ValueError):
    pass


class NotBracketGenerating(NilrectError):
    def __init__(self, max_depth, dims=None):
        self.max_depth = max_depth
        self.dims = dims
        super().__init__(
            f"flag did not reach full rank by depth {max_depth} (dims so far: {dims})")


class FlagFailure(NilrectError):
    pass


class PrivilegedCheckFailed(NilrectError):
    pass


class BasisExpressionFailed(NilrectError):
    pass


class SingularBlock(NilrectError, ValueError):
    pass


class SolverFailed(NilrectError):
    pass


class BlowUp(NilrectError):
    pass


class LoopNotClosed(NilrectError):
    pass


class DegenerateNet(NilrectError):
    pass


class EmptyCantor(NilrectError):
    pass


class ConfigError(NilrectError):
    pass
