"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: validation problems exit
with 2, I/O problems with 3, and budget overruns with 4.
"""


class TablewrightError(Exception):
    """Base class for all errors raised by this package."""


class SpecValidationError(TablewrightError):
    """A model spec, config, or input document violates an invariant.

    ``path`` points at the offending location, e.g. ``params.hyperplanes[1].w``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class VariantError(SpecValidationError):
    """Requested mapping variant is not defined for the model family."""


class BudgetError(TablewrightError):
    """A conversion would exceed a configured entry, key-width, or size budget."""


class ProgramError(TablewrightError):
    """A pipeline program is structurally unusable (failed check_program)."""
