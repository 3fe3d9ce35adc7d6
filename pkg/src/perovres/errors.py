"""Exception hierarchy shared by all solver modules."""


class PerovresError(Exception):
    """Base class for every error raised by the package."""


class DomainError(PerovresError, ValueError):
    """Argument outside the domain where a formula is defined."""


class PoleError(PerovresError, ZeroDivisionError):
    """Evaluation at (or numerically at) a pole of a rational expression."""


class OverlapError(PerovresError, ValueError):
    """Two distinct resonators intersect."""


class QuadratureError(PerovresError, ArithmeticError):
    """Estimated quadrature error exceeds the requested tolerance."""


class NoConvergence(PerovresError, ArithmeticError):
    """An iterative solver stopped without meeting its tolerance."""


class DegenerateTriple(NoConvergence):
    """Muller's interpolating parabola collapsed."""


class DegenerateCubic(PerovresError, ArithmeticError):
    """The three-particle cubic has no usable leading coefficient."""


class DegenerateDenominator(PerovresError, ZeroDivisionError):
    """The frequency quadratic has a vanishing leading coefficient."""


class DegenerateTargets(PerovresError, ValueError):
    """Design targets make the characteristic-size condition singular."""


class DegenerateB(PerovresError, ValueError):
    """Two B values coincide (or vanish) so X, Y are undetermined."""


class DegenerateFactor(PerovresError, ZeroDivisionError):
    """A factor S + Q*alpha vanishes."""


class ComplexLeak(PerovresError, ValueError):
    """A distance that must be real carries a non-negligible imaginary part."""


class AllBranchesRejected(PerovresError, ValueError):
    """No branch of the alpha_2 formula produced an admissible distance."""

    def __init__(self, message, reasons=None):
        super().__init__(message)
        self.reasons = list(reasons or [])


class NoBracket(PerovresError, ValueError):
    """Root-finding bracket does not enclose a sign change."""


class ConfigError(PerovresError, ValueError):
    """Malformed run configuration."""
