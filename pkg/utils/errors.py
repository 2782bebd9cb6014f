class AnosovLabError(Exception):
    """Base class for every error raised by the laboratory."""


class NotHyperbolic(AnosovLabError, ValueError):
    """An eigenvalue modulus lies within the certified error of 1."""


class NotCodimensionOne(AnosovLabError, ValueError):
    """The stable subspace is not one-dimensional."""


class RootCertificationError(AnosovLabError, ValueError):
    """Refined roots could not be certified to the requested accuracy."""


class NonHyperbolicPeriod(AnosovLabError, ValueError):
    """det(M^n - I) vanishes, so period-n points are not isolated."""


class ObstructionNonzero(AnosovLabError, ValueError):
    """Periodic averages of the roof disagree; no coboundary solution exists."""


class TruncationInsufficient(AnosovLabError, ValueError):
    """The coboundary residual did not improve when the truncation was doubled."""


class OffLeaf(AnosovLabError, ValueError):
    """A displacement has a component transverse to the requested leaf."""


class NoIntersection(AnosovLabError, ValueError):
    """Leaf intersection could not be located inside the chart."""


class DegenerateGradients(AnosovLabError, ValueError):
    """PCF gradients are not independent at the base point."""


class NotBunched(AnosovLabError, ValueError):
    """Gradient series diverge because stable x largest unstable modulus >= 1."""


class ChartExit(AnosovLabError, ValueError):
    """Orbit bookkeeping left the section chart before the series converged."""


class ResidualBelowNoise(AnosovLabError, ValueError):
    """Every remainder residual is below the noise floor; exponent is unbounded."""


class LeafClosureFailed(AnosovLabError, ArithmeticError):
    """Constructed leaf points do not stay asymptotic under the flow."""


class ConfigInvalid(AnosovLabError, ValueError):
    """Experiment configuration failed validation."""


class ExperimentFailed(AnosovLabError):
    """A module error surfaced while running an experiment."""