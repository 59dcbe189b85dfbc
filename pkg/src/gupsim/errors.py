"""Exception hierarchy shared by all gupsim modules."""


class GupsimError(Exception):
    """Base class for every error raised by gupsim."""


class DispersionSingularity(GupsimError, ZeroDivisionError):
    """The GUP denominator ``1 + alpha' l_p^2 k^2`` vanished (pole of omega)."""


class NonPositiveWavelength(GupsimError, ValueError):
    """The generalized reduced wavelength is <= 0, outside the model's domain."""


class NegativeRadicand(GupsimError, ValueError):
    """The literal first-order width formula has a negative radicand."""


class GridCoverage(GupsimError, ValueError):
    """A k-grid does not contain the requested spectral window."""


class TailLeak(GupsimError, RuntimeError):
    """Field intensity at the window boundary exceeds the tail threshold."""


class DegenerateFit(GupsimError, ValueError):
    """A least-squares fit was requested on coincident abscissae."""


class UnstableModes(GupsimError, RuntimeError):
    """Some grid modes have negative omega^2 and the policy forbids growth."""

    def __init__(self, message, k_range=None):
        super().__init__(message)
        self.k_range = k_range


class StabilityViolation(GupsimError, ValueError):
    """The leapfrog time step exceeds the stability bound."""

    def __init__(self, message, dt=None, dt_max=None):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max


class ConfigInvalid(GupsimError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
