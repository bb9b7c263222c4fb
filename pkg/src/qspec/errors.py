"""Exception types shared across the package."""


class QSpecError(Exception):
    """Base class; ``kind`` is the machine-readable tag used by the CLI."""

    kind = "error"

    def record(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class ConfigError(QSpecError, ValueError):
    kind = "config"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def record(self) -> dict:
        rec = super().record()
        rec["line"] = self.line
        return rec


class OutOfModel(QSpecError, ValueError):
    """Input outside the physical model (e.g. evanescent idler, lambda_s <= lambda_p)."""

    kind = "out_of_model"


class SingularJacobian(QSpecError, ArithmeticError):
    """The intensity Jacobian carries no information on at least one parameter.

    ``covariance`` holds the reported matrix, with ``inf`` on the
    unidentifiable variances.
    """

    kind = "singular_jacobian"

    def __init__(self, message, covariance=None):
        super().__init__(message)
        self.covariance = covariance


class SingularCurvature(QSpecError, ArithmeticError):
    kind = "singular_curvature"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonConvergence(QSpecError, RuntimeError):
    kind = "non_convergence"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoFringe(QSpecError, ValueError):
    kind = "no_fringe"
