"""Exception hierarchy shared by all jetsym modules."""


class JetsymError(Exception):
    """Base class for every error raised by jetsym."""


class ParseError(JetsymError):
    def __init__(self, message, text="", position=None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
            if text:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class UnknownCoordinateError(ParseError):
    pass


class OrderOverflowError(JetsymError):
    """A jet coordinate beyond the context's maximum derivative order was requested."""


class EvaluationError(JetsymError):
    def __init__(self, message, subterm=None):
        self.subterm = subterm
        if subterm is not None:
            message = f"{message}: {subterm}"
        super().__init__(message)


class IndeterminateError(JetsymError):
    """Every sample point of a zero test hit a domain error."""


class ValidationError(JetsymError):
    """A value violates the coordinate allowlist or another construction invariant."""


class ReductionError(JetsymError):
    pass


class BoundaryPivotError(JetsymError):
    pass


class NonPolynomialResidualError(JetsymError):
    pass


class SimulationError(JetsymError):
    def __init__(self, message, node=None, step=None, time=None):
        self.node = node
        self.step = step
        self.time = time
        where = []
        if node is not None:
            where.append(f"node {node}")
        if step is not None:
            where.append(f"step {step}")
        if time is not None:
            where.append(f"t={time:.6g}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class FlowDomainError(JetsymError):
    pass


class SpecError(JetsymError):
    """Invalid spec document (parse or validation failure)."""
