"""Exception hierarchy shared by all gpm modules.

The CLI maps these onto distinct exit codes, so keep the split coarse:
schema/shape problems, data validation problems, and numerical failures.
"""


class GpmError(Exception):
    """Base class for all errors raised by gpm."""


class SchemaError(GpmError):
    """Input file or config does not match the expected schema."""


class ValidationError(GpmError):
    """Data is well-formed but violates an invariant (unbalanced panel,
    degenerate column, state outside the unit cube, ...)."""


class NumericalError(GpmError):
    """A numerical procedure failed (rank deficiency, non-finite
    likelihood, integrator overshoot, ...)."""
