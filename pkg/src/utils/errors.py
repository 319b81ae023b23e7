"""
Exception hierarchy for the DNLS diffusion toolkit

Every failure raised by the library derives from DNLSError so the CLI can map
numerical failures to exit status 1 in one place.
"""

from typing import Optional


class DNLSError(Exception):
    """Base class for all library errors."""


class ParameterError(DNLSError, ValueError):
    """Invalid lattice, perturbation or numerical parameter."""


class AmplitudeRangeError(ParameterError):
    """Plane-wave amplitude outside the one-unstable-mode range."""

    def __init__(self, a: float, lower: float, upper: float):
        self.a = a
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"amplitude a={a!r} outside the admissible range ({lower!r}, {upper!r})"
        )


class IntegrationError(DNLSError, RuntimeError):
    """Time integration failed."""

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        if time is not None:
            message = f"{message} (t={time!r})"
        super().__init__(message)


class StepSizeUnderflowError(IntegrationError):
    """The adaptive step size collapsed below machine resolution."""


class SymmetryDriftError(IntegrationError):
    """The even symmetry q_{N-n} = q_n drifted beyond the abort threshold."""

    def __init__(self, defect: float, time: float):
        self.defect = defect
        super().__init__(f"even-symmetry defect {defect:.3e} exceeds the abort threshold", time)


class SpectralError(DNLSError):
    """Failure in the Floquet/Lax machinery."""


class SpectralParameterError(SpectralError, ValueError):
    """Invalid spectral parameter, e.g. z = 0."""


class DegenerateSpectrumError(SpectralError, RuntimeError):
    """Monodromy eigenvalues collide or the Wronskian vanishes."""


class CriticalPointError(SpectralError, RuntimeError):
    """Newton iteration on dDelta/dz lost or never found the root."""


class DarbouxError(DNLSError, RuntimeError):
    """Darboux dressing could not be constructed or matched."""


class SingularDressingError(DarbouxError):
    """Some Delta_n of the dressing matrix vanishes."""


class QuadratureError(DNLSError, RuntimeError):
    """Adaptive quadrature did not converge."""


class SolvabilityError(DNLSError, ValueError):
    """Leading-order intersection equations have no transversal solution."""

    def __init__(self, message: str, quantity: str, value: float,
                 alpha_min: Optional[float] = None):
        self.quantity = quantity
        self.value = value
        self.alpha_min = alpha_min
        super().__init__(message)


class ChainError(DNLSError, RuntimeError):
    """A transition chain cannot reach its target level."""

    def __init__(self, message: str, blocking_level: float,
                 blocking_amplitude: Optional[float] = None):
        self.blocking_level = blocking_level
        self.blocking_amplitude = blocking_amplitude
        super().__init__(f"{message} (blocked at level {blocking_level!r})")
