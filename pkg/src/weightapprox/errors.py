"""Exception hierarchy shared by every module.

Each error carries the module it was raised from and a short machine-readable
code, so the CLI can report ``{module, code, message}`` without guessing.
"""


class WeightApproxError(Exception):
    module = "core"

    @property
    def code(self):
        return type(self).__name__

    def as_dict(self):
        return {"module": self.module, "code": self.code, "message": str(self)}


# weights
class UnsupportedOrder(WeightApproxError):
    module = "weights"


class DomainError(WeightApproxError):
    module = "weights"


class GridTooSmall(WeightApproxError):
    module = "weights"


# mrs
class BracketFailure(WeightApproxError):
    module = "mrs"


class NonConvergence(WeightApproxError):
    module = "mrs"


class OutOfRange(WeightApproxError):
    module = "mrs"


# orthopoly
class LossOfOrthogonality(WeightApproxError):
    module = "orthopoly"


class DegreeOutOfRange(WeightApproxError):
    module = "orthopoly"


# bestapprox
class RemezStall(WeightApproxError):
    module = "bestapprox"


class PreconditionFail(WeightApproxError):
    module = "bestapprox"


class IrlsNonConvergence(WeightApproxError):
    module = "bestapprox"


# modulus
class NormDiverges(WeightApproxError):
    module = "modulus"


# theoremlab
class HypothesisFail(WeightApproxError):
    module = "theoremlab"


# monotone
class NotReached(WeightApproxError):
    module = "monotone"

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class OrderUnavailable(WeightApproxError):
    module = "monotone"


# expression language
class ExprSyntaxError(WeightApproxError):
    module = "cli"

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset

    @property
    def code(self):
        return "SyntaxError"

    def as_dict(self):
        d = super().as_dict()
        d["offset"] = self.offset
        return d


class UnknownFunction(WeightApproxError):
    module = "cli"


class NonDifferentiable(WeightApproxError):
    module = "cli"


class ExprDomainError(WeightApproxError):
    """Evaluation left the domain of a function (e.g. ``sqrt`` of a negative)."""

    module = "cli"

    @property
    def code(self):
        return "DomainError"
