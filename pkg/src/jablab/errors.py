"""Exception hierarchy. Every rejection the library performs has a named class."""


class JablabError(Exception):
    """Base class for all library errors."""


# -- partition / map geometry -------------------------------------------------

class NotStrictlyIncreasing(JablabError):
    """Axis breakpoints are not strictly increasing."""


class EndpointNotZeroOne(JablabError):
    """Axis breakpoints do not start at 0 and end at 1."""


class EmptyAxis(JablabError):
    """An axis has fewer than two breakpoints (no cells)."""


class PointOutsideCube(JablabError):
    """Evaluation point lies outside the unit cube."""


# -- driving ------------------------------------------------------------------

class ProbabilitiesInvalid(JablabError):
    """Probability vector or stochastic matrix is malformed."""


class NotErgodic(JablabError):
    """Markov transition matrix is reducible."""


class PartitionMismatch(JablabError):
    """Maps in an ensemble do not share a common partition."""


class NotAdmissible(JablabError):
    """Expansion-on-average integral is not positive."""


# -- grid functions / operators -----------------------------------------------

class AxisOutOfRange(JablabError):
    """Directional-variation axis index out of range."""


class GridNotRefining(JablabError):
    """Grid does not refine the map's partition."""


class WindowTooShort(JablabError):
    """Symbol window does not cover the requested cocycle length."""


# -- ergodic diagnostics --------------------------------------------------------

class SeedNotInCell(JablabError):
    """Seed rectangle is not contained in a single partition cell."""


# -- bounds ---------------------------------------------------------------------

class MgeqQ(JablabError):
    """Hyperplane complexity M is not smaller than the cell count q."""


class RangeInvalid(JablabError):
    """Invalid tabulation range."""


class ConsistencyViolation(JablabError):
    """Average log expansion exceeds log q (impossible map/partition data)."""


# -- configuration / CLI ----------------------------------------------------------

class ParseError(JablabError):
    """Config file is not valid JSON."""


class MissingField(JablabError):
    """Required config field is absent."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"missing config field: {path}")


class NonMonotoneBranch(JablabError):
    """A branch has zero slope."""


class UnknownCommand(JablabError):
    """CLI subcommand not recognized."""
