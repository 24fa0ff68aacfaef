"""Exception types shared across the package."""


class GoalCtlError(Exception):
    """Base class for all package errors."""


class NonFiniteState(GoalCtlError):
    """Integration produced NaN or inf (step size or force too large)."""


class DensityUnavailable(GoalCtlError):
    """The environment has no closed-form transition density."""


class DegenerateWeights(GoalCtlError):
    """Every particle likelihood underflowed; the filter has diverged."""


class ShapeMismatch(GoalCtlError, ValueError):
    pass


class EigendecompositionFailure(GoalCtlError):
    pass


class NonConvergence(GoalCtlError):
    pass


class SingularInnovation(GoalCtlError):
    pass


class SchemaMismatch(GoalCtlError, ValueError):
    """A CSV is missing columns required by the requested plot kind."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing columns: " + ", ".join(self.missing))


class ConfigError(GoalCtlError, ValueError):
    """Config validation failed; ``problems`` lists every violated field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
