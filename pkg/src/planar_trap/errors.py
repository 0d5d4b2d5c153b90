"""Exception hierarchy shared by all planar_trap modules.

Two families matter for the CLI exit-code contract: ``ConfigError``
subclasses map to exit code 2, every other ``PlanarTrapError`` maps to
exit code 1.
"""


class PlanarTrapError(Exception):
    """Base class for all domain errors raised by this package."""


# ---------------------------------------------------------------- geometry


class InvalidParams(PlanarTrapError):
    """Layout generation parameters violate their invariants."""


# ------------------------------------------------------------- fieldsolver


class NoElectrodes(PlanarTrapError):
    """Meshing was asked to discretize a layout without electrodes."""


class SolveFailed(PlanarTrapError):
    """The boundary-element collocation system could not be solved."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class OutsideDomain(PlanarTrapError):
    """Field evaluation requested outside the solver half-space z > 0."""


# ---------------------------------------------------------- pseudopotential


class UnknownElectrode(PlanarTrapError):
    """A voltage set names an electrode that does not exist."""


class NullNotFound(PlanarTrapError):
    """The RF-null search did not converge within its iteration cap."""


class NotATrap(PlanarTrapError):
    """No confining minimum exists at the candidate point."""


class InvalidDirection(PlanarTrapError):
    """A beam direction is not a unit vector or leaves the surface plane."""


# -------------------------------------------------------------- compensation


class DegenerateSystem(PlanarTrapError):
    """The compensation constraint matrix is identically zero."""


# ------------------------------------------------------------------ crystal


class InvalidFrequency(PlanarTrapError):
    """A trap frequency must be strictly positive."""


class Unbounded(PlanarTrapError):
    """The axial potential cannot confine the requested ion chain."""


class NoConvergence(PlanarTrapError):
    """Chain equilibrium iteration failed after all restarts."""


class UnstableChain(PlanarTrapError):
    """The chain Hessian is indefinite; normal modes are not real."""


# ------------------------------------------------------------------- config


class ConfigError(PlanarTrapError):
    """Base class for configuration errors (CLI exit code 2)."""


class ConfigNotFound(ConfigError):
    """The configuration (or a referenced) file does not exist."""


class UnknownKey(ConfigError):
    def __init__(self, key):
        super().__init__(f"unknown configuration key: {key!r}")
        self.key = key


class InvalidValue(ConfigError):
    def __init__(self, key, detail=""):
        msg = f"invalid value for {key!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.key = key
