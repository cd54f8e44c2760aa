"""Exception hierarchy shared by all fraclobc modules.

Two families matter for the CLI exit-code contract: OperationalError
(bad input, non-convergence, missing files -> exit 1) and
InvariantViolation (a mathematical property the artifact asserts was
refuted at runtime -> exit 2).
"""


class FraclobcError(Exception):
    """Base class for all package errors."""


class OperationalError(FraclobcError):
    """Recoverable/operational failures (exit code 1)."""


class InvariantViolation(FraclobcError):
    """A checked mathematical invariant failed (exit code 2)."""


# --- core ---------------------------------------------------------------

class EtaTooLarge(OperationalError):
    """Domain shrink parameter eta >= half-width."""


class BadResolution(OperationalError):
    """Grid resolution below the supported minimum."""


class GridMismatch(OperationalError):
    """Operands live on different grids."""


# --- fraclap ------------------------------------------------------------

class BadOrder(OperationalError):
    """Fractional order s outside (0, 1)."""


class QuadratureNoConverge(OperationalError):
    """Adaptive quadrature could not reach tolerance within budget."""


# --- spectral -----------------------------------------------------------

class NoConvergence(OperationalError):
    """Iterative solver exhausted its iteration budget."""


class EmptyCollar(OperationalError):
    """No grid node inside the requested boundary collar."""


class DivergentIntegral(OperationalError):
    """Negative-power eigenfunction integral diverges (p <= s+1)."""


# --- regularize ---------------------------------------------------------

class SemigroupViolation(InvariantViolation):
    """Iterated inf-convolution disagrees with the merged one beyond
    the lattice rounding envelope (search-window bug)."""


# --- barrier ------------------------------------------------------------

class NonPositiveC1(InvariantViolation):
    """Empirical distance-power constant came out <= 0."""


class CollarCollapse(OperationalError):
    """Barrier collar shrank to underflow before the coefficient
    inequality could be satisfied."""


class SupersolutionViolated(InvariantViolation):
    """Barrier failed the pointwise supersolution inequality."""


# --- evolve -------------------------------------------------------------

class StepCollapse(OperationalError):
    """Time step underflowed (gradient blow-up surrogate)."""


class BoundsViolated(InvariantViolation):
    """A trajectory left the [0, ||u0||_inf] comparison envelope."""


class InsufficientData(OperationalError):
    """Not enough monitor records for the requested diagnostic."""


# --- cli ----------------------------------------------------------------

class ConfigError(OperationalError):
    """Malformed experiment configuration; message lists field errors."""


# --- plots (secondary consumes these names via CSV only) -----------------

class MissingInput(OperationalError):
    """Expected experiment output file is absent."""


class SchemaMismatch(OperationalError):
    """CSV/JSON input does not match the published schema."""
