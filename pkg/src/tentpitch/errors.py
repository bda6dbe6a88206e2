"""Exception types shared across the package."""


class DegeneracyError(ValueError):
    """A simplex (or a projection target) is numerically degenerate."""


class MeshValidationError(ValueError):
    """Ground mesh input failed structural validation."""


class ParseError(ValueError):
    """Malformed input file; the message names the offending location."""


class PatchConsistencyError(RuntimeError):
    """A patch's facets disagree with the mesh frontier (internal error)."""


class FrontInvariantError(RuntimeError):
    """A front state violates the cone or progress constraints.

    Raised when an initial front is invalid, or when a lift would produce
    an invalid state (the latter indicates a bug in the bound computation).
    """


class StallError(RuntimeError):
    """A lift failed to advance its vertex; carries a diagnostic payload."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
