"""Exception hierarchy shared across the toolkit."""


class ModelGateError(Exception):
    """Base class for all errors raised by this package."""


class ExprError(ModelGateError):
    """Problem with an expression tree (sorts, arity, unknown symbols)."""


class UnboundSymbolError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol '{name}'")
        self.name = name


class SortError(ExprError):
    """Expression is not well-sorted (e.g. arithmetic over booleans)."""


class EncodingError(ModelGateError):
    """Model cannot be encoded (reserved-name clash, bad shape)."""


class ConfigError(ModelGateError):
    """EncodingConfig is inconsistent with the requested operation."""


class SolverError(ModelGateError):
    """Base class for solver-driver failures."""


class LaunchFailureError(SolverError):
    """Solver executable could not be started."""


class ProtocolError(SolverError):
    """Solver ran but produced no sat/unsat/unknown status token."""


class SolverExitError(SolverError):
    """Solver exited nonzero; diagnostics captured in the message."""


class SolverDisagreementError(SolverError):
    """Two solvers returned contradictory sat/unsat verdicts for one script."""


class WitnessError(ModelGateError):
    """Base class for witness-decoding failures."""


class WitnessParseError(WitnessError):
    """Model output could not be interpreted."""


class MissingSymbolError(WitnessError):
    def __init__(self, names):
        names = tuple(names)
        super().__init__("witness is missing required symbols: " + ", ".join(names))
        self.names = names


class WitnessRangeError(WitnessError):
    """Witness value falls outside the signed 64-bit range."""


class OracleError(ModelGateError):
    """Base class for brute-force-oracle failures."""


class InitialStateUndeterminedError(OracleError):
    """The initial predicate does not pin every state field."""


class SearchBudgetExceededError(OracleError):
    """BFS state budget exhausted before the search finished."""


class DomainBudgetExceededError(OracleError):
    """Requested enumeration domain is larger than the configured budget."""
