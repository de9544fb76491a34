"""Phase-space trajectories of a driven oscillator and the phases they accumulate.

A coherent-state path alpha(t) picks up two distinct contributions:

* a geometric phase, the line integral (i/2) * integral(alpha* d(alpha) - alpha d(alpha*)),
  which for a closed loop equals -2 times the signed enclosed area
  (counterclockwise positive), and
* a dynamic phase, -integral(<H>(t) dt), the accumulated expectation value of the
  Hamiltonian along the path.

Both functionals are evaluated by trapezoidal quadrature on the sampled
trajectory, so their accuracy is second order in the grid spacing.  The total
phase is always their sum; the ratio eta = dynamic/geometric classifies the
evolution (eta = 0 purely geometric, eta = -1 trivial, anything else is an
unconventional mix whose total phase still depends only on the loop geometry).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InternalConsistencyError, InvalidTrajectoryError, SingularDetuningError

# Default sampling density for one drive period.
DEFAULT_SAMPLES_PER_PERIOD = 10_000

# |geometric| below this threshold leaves the ratio eta undefined.
ETA_GEOMETRIC_THRESHOLD = 1e-9

# Default closure tolerance for |alpha(T) - alpha(0)|.
DEFAULT_CLOSURE_TOLERANCE = 1e-9

# Default tolerance used when classifying a decomposition by its eta value.
CLASSIFICATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """A single point alpha = re + i*im in the oscillator phase plane."""

    re: float
    im: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise InvalidTrajectoryError(f"phase-space point is not finite: {self.re}, {self.im}")

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    @staticmethod
    def from_complex(value: complex) -> "PhasePoint":
        value = complex(value)
        return PhasePoint(value.real, value.imag)


@dataclass(frozen=True)
class Trajectory:
    """A sampled phase-space path.

    Parameters
    ----------
    times:
        Strictly increasing sample times, length >= 2.
    points:
        Complex samples alpha(t_k), same length as ``times``.
    closure_tolerance:
        Radius within which the endpoints count as closed.

    The arrays are copied and frozen; a trajectory never changes after
    construction.
    """

    times: np.ndarray
    points: np.ndarray
    closure_tolerance: float = DEFAULT_CLOSURE_TOLERANCE

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float).copy()
        points = np.asarray(self.points, dtype=complex).copy()
        if times.ndim != 1 or points.ndim != 1:
            raise InvalidTrajectoryError("times and points must be one-dimensional")
        if times.size < 2:
            raise InvalidTrajectoryError("a trajectory needs at least two samples")
        if times.size != points.size:
            raise InvalidTrajectoryError(
                f"length mismatch: {times.size} times vs {points.size} points"
            )
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(points)):
            raise InvalidTrajectoryError("trajectory contains non-finite samples")
        if not np.all(np.diff(times) > 0.0):
            raise InvalidTrajectoryError("times must be strictly increasing")
        if not (self.closure_tolerance >= 0.0):
            raise InvalidTrajectoryError("closure_tolerance must be nonnegative")
        times.flags.writeable = False
        points.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @classmethod
    def from_points(
        cls,
        times: Sequence[float],
        points: Sequence[PhasePoint],
        closure_tolerance: float = DEFAULT_CLOSURE_TOLERANCE,
    ) -> "Trajectory":
        return cls(
            np.asarray(times, dtype=float),
            np.array([complex(p) for p in points], dtype=complex),
            closure_tolerance,
        )

    def point(self, index: int) -> PhasePoint:
        return PhasePoint.from_complex(self.points[index])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def closure_residual(self) -> float:
        """Distance |alpha(t_end) - alpha(t_start)| between the endpoints."""
        return float(abs(self.points[-1] - self.points[0]))

    def is_closed(self) -> bool:
        return self.closure_residual <= self.closure_tolerance


@dataclass(frozen=True)
class PhaseDecomposition:
    """Total phase split into its geometric and dynamic parts.

    ``eta`` is dynamic/geometric, or None when the geometric part is too small
    for the ratio to mean anything.  ``classification`` is one of
    ``"conventional-geometric"`` (eta = 0), ``"trivial"`` (eta = -1, so the
    total vanishes), ``"unconventional"`` or ``"undefined"``.
    """

    total: float
    geometric: float
    dynamic: float
    eta: float | None = None
    classification: str = field(default="undefined")

    def __post_init__(self) -> None:
        if self.total != self.geometric + self.dynamic:
            raise InternalConsistencyError(
                "total phase must equal geometric + dynamic exactly; "
                "use decompose() to build consistent values"
            )


def decompose(
    geometric: float,
    dynamic: float,
    *,
    eta_threshold: float = ETA_GEOMETRIC_THRESHOLD,
    classification_tolerance: float = CLASSIFICATION_TOLERANCE,
) -> PhaseDecomposition:
    """Combine a geometric and a dynamic phase into a classified decomposition.

    The total is geometric + dynamic by construction.  ``eta`` is reported only
    when |geometric| exceeds ``eta_threshold``.
    """
    geometric = float(geometric)
    dynamic = float(dynamic)
    if abs(geometric) > eta_threshold:
        eta: float | None = dynamic / geometric
    else:
        eta = None
    if eta is None:
        classification = "undefined"
    elif abs(eta) <= classification_tolerance:
        classification = "conventional-geometric"
    elif abs(eta + 1.0) <= classification_tolerance:
        classification = "trivial"
    else:
        classification = "unconventional"
    return PhaseDecomposition(
        total=geometric + dynamic,
        geometric=geometric,
        dynamic=dynamic,
        eta=eta,
        classification=classification,
    )


def geometric_phase(trajectory: Trajectory) -> float:
    """Geometric phase of a sampled path.

    Evaluates (i/2) * integral(alpha* d(alpha) - alpha d(alpha*)) with the
    trapezoidal rule on the sample chords, which reduces to
    -sum_k Im(conj(alpha_k) * alpha_{k+1}).  For a closed sampled loop this is
    exactly -2 times the signed polygon area of the samples, counterclockwise
    positive.  Open paths are allowed; the value is then the line integral
    along the open path.
    """
    z = trajectory.points
    return float(-np.sum(np.imag(np.conj(z[:-1]) * z[1:])))


def dynamic_phase(
    trajectory: Trajectory,
    h_expect: Callable,
) -> float:
    """Dynamic phase -integral(<H>(t) dt) along a sampled path.

    ``h_expect`` maps (point, time) to the real Hamiltonian expectation value
    on that trajectory sample.  A vectorized callable accepting
    (complex ndarray, float ndarray) is used directly; otherwise the function
    is evaluated per sample with :class:`PhasePoint` arguments.
    """
    times = trajectory.times
    points = trajectory.points
    try:
        values = np.asarray(h_expect(points, times), dtype=float)
        if values.shape != times.shape:
            raise ValueError("shape mismatch")
    except (TypeError, ValueError, AttributeError):
        values = np.array(
            [float(h_expect(PhasePoint.from_complex(z), float(t))) for z, t in zip(points, times)]
        )
    if not np.all(np.isfinite(values)):
        raise InvalidTrajectoryError("Hamiltonian expectation produced non-finite values")
    return float(-np.trapezoid(values, times))


def noncyclic_geometric_phase(total: float, dynamic: float) -> float:
    """Geometric part of an evolution that need not return to its start.

    Defined as the total phase minus the dynamic phase.  For paths sampled
    densely enough, this agrees with the open-path line integral computed by
    :func:`geometric_phase`.
    """
    return float(total) - float(dynamic)


def constant_drive_alpha(
    omega_over_delta: float, delta: float, phi_l: float, t: float | np.ndarray
):
    """Coherent-state path i*(omega/delta)*(exp(-i*delta*t) - 1)*exp(i*phi_l).

    This is the response, from the vacuum, of an oscillator driven at constant
    amplitude a fixed detuning ``delta`` away from resonance.  The path is a
    circle of radius |omega/delta| that closes after each period 2*pi/delta.
    """
    _require_positive_delta(delta)
    return 1j * omega_over_delta * (np.exp(-1j * delta * np.asarray(t)) - 1.0) * np.exp(1j * phi_l)


def analytic_trajectory(
    omega_over_delta: float,
    delta: float,
    phi_l: float,
    t_grid: Sequence[float] | np.ndarray,
    closure_tolerance: float = DEFAULT_CLOSURE_TOLERANCE,
) -> Trajectory:
    """Sample the constant-drive circular path on the supplied time grid."""
    t = np.asarray(t_grid, dtype=float)
    alphas = constant_drive_alpha(omega_over_delta, delta, phi_l, t)
    return Trajectory(t, alphas, closure_tolerance)


def analytic_total_phase(omega_over_delta: float, delta: float, t: float) -> float:
    """Closed-form total phase (omega/delta)^2 * (sin(delta*t) - delta*t).

    Valid at every time, whether or not the loop has closed.  Equal to the
    geometric plus dynamic phases of the constant-drive path up to time ``t``.
    """
    _require_positive_delta(delta)
    x = delta * float(t)
    return float(omega_over_delta) ** 2 * (math.sin(x) - x)


def period_grid(delta: float, periods: float = 1.0, samples: int | None = None) -> np.ndarray:
    """Uniform time grid covering ``periods`` drive periods of detuning ``delta``."""
    _require_positive_delta(delta)
    if periods <= 0.0:
        raise ValueError(f"periods must be positive, got {periods}")
    if samples is None:
        samples = max(2, int(round(DEFAULT_SAMPLES_PER_PERIOD * periods)))
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    duration = 2.0 * math.pi * periods / delta
    return np.linspace(0.0, duration, samples)


def _require_positive_delta(delta: float) -> None:
    if delta == 0.0:
        raise SingularDetuningError("detuning is zero: the drive never closes a loop")
    if not (delta > 0.0) or not math.isfinite(delta):
        raise SingularDetuningError(f"detuning must be positive and finite, got {delta}")
