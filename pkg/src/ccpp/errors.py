"""Exception hierarchy. Each error carries the pipeline stage that raised it."""


class CCPPError(Exception):
    stage = "ccpp"
    exit_code = 1


class ValidationError(CCPPError, ValueError):
    stage = "config"
    exit_code = 2


class ParseError(CCPPError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    stage = "model"
    exit_code = 2

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class EmptyInputError(ParseError):
    pass


class TrajectoryParseError(ParseError):
    stage = "verify"


class NoSlicesError(CCPPError, ValueError):
    stage = "slice"
    exit_code = 3


class TopologyConsistencyError(CCPPError, RuntimeError):
    stage = "topology"
    exit_code = 3


class PlanningError(CCPPError, RuntimeError):
    stage = "mission"
    exit_code = 3


class AssignmentError(PlanningError):
    pass


class SchedulingInfeasibleError(PlanningError):
    def __init__(self, message, step=None, agents=None):
        self.step = step
        self.agents = agents
        super().__init__(message)


class TransferInfeasibleError(PlanningError):
    pass


class IOFailure(CCPPError, OSError):
    stage = "io"
    exit_code = 5
