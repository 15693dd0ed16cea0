"""Exception types shared across the library."""


class KahlerLabError(Exception):
    """Base class for all library errors."""


class ConvexityError(KahlerLabError):
    """A potential failed its strict-convexity invariant.

    ``node`` is the index of the first violating grid node.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class GridMismatchError(KahlerLabError):
    """Two objects live on different grids; resample before combining."""


class WindowError(KahlerLabError):
    """The truncation window is too small to resolve the slope limits."""


class ResolutionError(KahlerLabError):
    """The grid is too coarse for the requested discrete derivative."""


class SubgeodesicError(KahlerLabError):
    """PSD certification of a candidate subgeodesic failed.

    ``node`` is the (t-index, s-index) of the worst interior node.
    """

    def __init__(self, message, node=None, min_eig=None):
        super().__init__(message)
        self.node = node
        self.min_eig = min_eig


class CompatibilityError(KahlerLabError):
    """A linear problem's right-hand side pairs nontrivially with the kernel."""

    def __init__(self, message, pairing=None):
        super().__init__(message)
        self.pairing = pairing


class QuadratureError(KahlerLabError):
    """A quadrature failed its self-check; ``worst`` identifies the integrand."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class NonSubharmonicError(KahlerLabError):
    """A disc weight is not subharmonic (radial Laplacian changes sign)."""


class ConfigError(KahlerLabError):
    """An experiment configuration failed validation.

    ``fields`` lists the offending keys.
    """

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)


class DescentError(KahlerLabError):
    """Iterative minimization did not converge within its budget."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
