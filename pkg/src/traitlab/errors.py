"""Exception taxonomy shared across the package.

Three broad families, mirrored by the CLI exit-code policy:

* input / configuration problems (bad schema, violated standing assumptions
  on the problem instance) -- exit code 2;
* hypothesis / check failures (the scenario is well formed but a verified
  property does not hold) -- exit code 1;
* numerical failures (an algorithm could not meet its tolerance) -- exit
  code 3.
"""


class TraitlabError(Exception):
    """Base class for all package-specific errors."""


# --- input / configuration problems ---------------------------------------

class ConfigError(TraitlabError):
    """Config file does not match the schema; message carries the key path."""


class DimensionMismatch(TraitlabError):
    """Arrays of a problem instance do not agree in shape."""


class SlackViolation(TraitlabError):
    """Strict triangle inequality fails for the mutation-cost table."""


class InitialMassViolation(TraitlabError):
    """Initial total mass falls outside the invariant-window assumption."""


class ScheduleGap(TraitlabError):
    """Resource schedule does not cover the requested time horizon."""


class TooManyJumps(TraitlabError):
    """Exact ball quadrature is only implemented for paths with <= 2 jumps."""


class WrongFamily(TraitlabError):
    """Operation requires a specific growth-rate family."""


class EnumerationCap(TraitlabError):
    """Support enumeration would exceed the configured cap."""


# --- hypothesis failures ----------------------------------------------------

class HypothesisHError(TraitlabError):
    """A stability hypothesis on the restricted dynamics fails."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonHyperbolic(HypothesisHError):
    """Some steady state has a Jacobian eigenvalue too close to the axis."""


class NoAdmissible(HypothesisHError):
    """No steady state is admissible (off-support rates all negative)."""


class MultipleAdmissible(HypothesisHError):
    """More than one admissible steady state."""


# --- numerical failures -----------------------------------------------------

class NumericalError(TraitlabError):
    """Base class for algorithmic/tolerance failures."""


class StepFailure(NumericalError):
    """Adaptive integrator could not meet tolerance, or clipping was hit."""


class NewtonDivergence(NumericalError):
    """Newton iteration failed to converge for a support."""


class TimeoutNoConvergence(NumericalError):
    """Relaxation trajectory did not enter the target ball by the time cap."""


class EventStall(NumericalError):
    """Event-driven evolution cannot order or make progress past events."""


class MaxDrift(NumericalError):
    """Discrete value iteration drifted off the max-zero constraint."""


class MaxNotZero(NumericalError):
    """A value vector violates the max-zero constraint beyond tolerance."""


class MassEscape(NumericalError):
    """Too much mass reached the truncated domain boundary."""
