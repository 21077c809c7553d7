"""Exception hierarchy shared by every module.

Everything raised on purpose derives from ``KdrhError`` so the CLI can map
failures to exit codes without catching unrelated bugs.
"""


class KdrhError(ValueError):
    """Base class for all library errors."""


class ParseError(KdrhError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class EmptyTerm(KdrhError):
    pass


class BudgetExceeded(KdrhError):
    def __init__(self, budget, what="iteration", partial=None):
        self.budget = budget
        self.partial = partial
        super().__init__(f"{what} budget of {budget} steps exceeded")


class OutOfRange(KdrhError):
    pass


class OrdinalError(KdrhError):
    pass


class NotAssociative(KdrhError):
    def __init__(self, witness):
        self.witness = witness
        x, y, z = witness
        super().__init__(f"table is not associative: ({x}{y}){z} != {x}({y}{z})")


class UnboundLetter(KdrhError):
    pass


class SubstitutionLimit(KdrhError):
    pass


class NonKappaSolution(KdrhError):
    pass


class MalformedSystem(KdrhError):
    pass


class NonReducedSolution(KdrhError):
    pass


class VerificationFailed(KdrhError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class CandidateInvalid(KdrhError):
    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"candidate violates {clause}" + (f": {detail}" if detail else ""))


class UnmappedVariable(KdrhError):
    pass


class SideConditionViolated(KdrhError):
    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"side condition {clause} fails" + (f": {detail}" if detail else ""))


class DecompositionFailed(KdrhError):
    pass


class PreconditionFailed(KdrhError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class HSolverIncomplete(KdrhError):
    pass
