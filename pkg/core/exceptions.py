"""Error hierarchy shared by every negacopula app.

Each exception carries the CLI exit code its management command reports.
"""


class NegaCopulaError(Exception):
    exit_code = 2


class DomainError(NegaCopulaError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonPositiveData(DomainError):
    pass


class InsufficientData(DomainError):
    pass


class ConstantColumn(DomainError):
    pass


class FailedConvergence(NegaCopulaError):
    def __init__(self, message, *, last_iterate=None, gradient_norm=None, iterations=0):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient_norm = gradient_norm
        self.iterations = iterations

    def __str__(self):
        base = super().__str__()
        return (
            f"{base} (iterations={self.iterations}, last_iterate={self.last_iterate}, "
            f"gradient_norm={self.gradient_norm})"
        )


class PositiveDependence(NegaCopulaError):
    """The data show non-negative dependence, which C_theta cannot represent."""

    exit_code = 3

    def __init__(self, measure, value):
        super().__init__(
            f"Empirical {measure} = {value:.6g} is not negative; "
            "the copula only models negative dependence."
        )
        self.measure = measure
        self.value = value


class DataParseError(NegaCopulaError):
    def __init__(self, message, *, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BootstrapFailure(NegaCopulaError):
    pass


class PipelineError(NegaCopulaError):
    """Aggregates the labelled failures of one fitting stage."""

    def __init__(self, stage, errors):
        self.stage = stage
        self.errors = list(errors)
        detail = "; ".join(f"{label}: {err}" for label, err in self.errors)
        super().__init__(f"{stage} failed: {detail}")
        # a single positive-dependence failure keeps its own exit code
        codes = {getattr(err, "exit_code", 2) for _, err in self.errors}
        self.exit_code = codes.pop() if len(codes) == 1 else 2
