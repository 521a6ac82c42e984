"""Exception hierarchy.

Every error raised by the package derives from :class:`DegwaveError`.  The
``assumption`` attribute names the hypothesis that was violated ("(A)",
"(F)", "CFL", "bracket", ...) so command-line front ends can report it.
"""


class DegwaveError(Exception):
    assumption = "numerics"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


# -- nonlinearity ---------------------------------------------------------

class AssumptionAError(DegwaveError):
    assumption = "(A)"


class NonDegenerate(AssumptionAError):
    pass


class NonMonotone(AssumptionAError):
    pass


class DivergentPressureIntegral(AssumptionAError):
    pass


class AssumptionFError(DegwaveError):
    assumption = "(F)"


class SignPatternViolation(AssumptionFError):
    pass


class IntegralConditionFailed(AssumptionFError):
    pass


class ThetaNotFound(AssumptionFError):
    pass


class QuadratureFailure(DegwaveError):
    pass


class InversionTolExceeded(DegwaveError):
    pass


# -- stationary -----------------------------------------------------------

class InvalidTarget(DegwaveError):
    assumption = "target range"


class IntegrationStall(DegwaveError):
    pass


# -- waves ----------------------------------------------------------------

class StepFailure(DegwaveError):
    pass


class AmbiguousOutcome(DegwaveError):
    pass


class BracketFailure(DegwaveError):
    assumption = "bracket"


class NonMonotoneG(DegwaveError):
    assumption = "bracket"


class ConstructionFailure(DegwaveError):
    pass


# -- solver ---------------------------------------------------------------

class UnsupportedInitialData(DegwaveError):
    assumption = "(I)"


class CflViolation(DegwaveError):
    assumption = "CFL"


class NegativeUndershoot(DegwaveError):
    pass


class GridExhausted(DegwaveError):
    pass


class FrontTooThin(DegwaveError):
    pass


# -- asymptotics ----------------------------------------------------------

class NotStabilized(DegwaveError):
    pass


class NoBigSpreading(DegwaveError):
    pass


class UndecidedAtBudget(DegwaveError):
    pass


class WindowTooShort(DegwaveError):
    pass


class RegionOutsideGrid(DegwaveError):
    pass


class LevelNotPresent(DegwaveError):
    pass


class ConstantsInfeasible(DegwaveError):
    pass


class EnvelopeViolated(DegwaveError):
    pass


# -- configuration --------------------------------------------------------

class ConfigError(DegwaveError):
    assumption = "config"


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class DomainError(ConfigError):
    pass
