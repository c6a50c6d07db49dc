"""Exception hierarchy shared by all modules."""


class MatbundleError(Exception):
    """Base class for errors raised by matbundle."""


class DimensionMismatch(MatbundleError, ValueError):
    """Array shapes do not conform to the requested operation."""


class RankDeficient(MatbundleError, ValueError):
    """A matrix expected to have full (or a given) rank is numerically deficient."""


class RankMismatch(MatbundleError, ValueError):
    """A matrix has numerical rank different from the manifold's rank."""


class OutOfChartDomain(MatbundleError, ValueError):
    """A point lies outside (or numerically on the boundary of) a chart domain."""


class SingularFactor(MatbundleError, ValueError):
    """A middle factor that must lie in GL_r is numerically singular."""


class LineSearchFailed(MatbundleError, RuntimeError):
    """No acceptable step was found within the configured number of backtracks."""
