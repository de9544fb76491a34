"""Brute-force verifier: truncated-Fock-space propagation of the joint system.

Nothing here trusts the closed-form phases.  The Hamiltonian

    H(t) = -i * (f(t) a_dag - conj(f(t)) a) (x) C

is built as an explicit matrix on spin (x) oscillator, the evolution is the
ordered product of per-step exponentials exp(-i H(t_mid) dt), and phases are
read off the propagated states: the total phase from the argument of the
overlap with the initial state (accumulated step by step so it never wraps),
the dynamic phase from the running integral of <H>.  Comparing these against
the analytic formulas is the package's independent check.

Each per-step exponential is evaluated exactly (to rounding) through the
eigendecomposition of the displacement generator: H(t) restricted to a
conditioner eigenvalue beta equals |g| times a rotated position quadrature
with g = beta * f(t), whose eigenbasis differs from that of a + a_dag only by
a number-operator phase twist.  A unit test pins this step matrix against a
scaling-and-squaring dense exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .drives import DriveProfile, alpha_array, f_array
from .errors import TruncationError, UndefinedPhaseError
from .phasespace import PhaseDecomposition, PhasePoint, analytic_total_phase, decompose

DEFAULT_N_MAX = 64
DEFAULT_STEPS = 20_000

# Overlap modulus below which the accumulated total phase stops being meaningful.
OVERLAP_FLOOR = 1e-6

# Default ceiling on the population reaching the top Fock level.
DEFAULT_LEAKAGE_TOL = 1e-6

# Eigenvalues closer than this are treated as one spin sector.
_EIGENVALUE_RESOLUTION = 1e-12

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FockSpace:
    """Oscillator Hilbert space truncated at occupation ``n_max``."""

    n_max: int

    def __post_init__(self) -> None:
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dimension(self) -> int:
        return self.n_max + 1

    def lowering(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1.0, self.dimension)), 1).astype(complex)

    def raising(self) -> np.ndarray:
        return self.lowering().conj().T

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.dimension)).astype(complex)

    def basis_state(self, n: int) -> np.ndarray:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"Fock index {n} outside [0, {self.n_max}]")
        state = np.zeros(self.dimension, dtype=complex)
        state[n] = 1.0
        return state

    def vacuum(self) -> np.ndarray:
        return self.basis_state(0)


def peak_excursion(drive: DriveProfile, tau: float | None = None, scan_samples: int = 2001) -> float:
    """Largest |beta * alpha(t)| over the evolution, across spin sectors."""
    if tau is None:
        tau = drive.total_duration
    values, _ = drive.conditioner.eigensystem()
    beta_max = float(np.max(np.abs(values)))
    t = np.linspace(0.0, float(tau), scan_samples)
    return beta_max * float(np.max(np.abs(alpha_array(drive, t))))


def default_space(drive: DriveProfile, tau: float | None = None) -> FockSpace:
    """Truncation for this drive: n_max = 64, escalated to keep |alpha|^2 <= n_max/4."""
    excursion_sq = peak_excursion(drive, tau) ** 2
    n_max = DEFAULT_N_MAX
    if excursion_sq > n_max / 4.0:
        n_max = int(math.ceil(4.0 * excursion_sq))
    return FockSpace(n_max)


def build_hamiltonian(drive: DriveProfile, t: float, space: FockSpace) -> np.ndarray:
    """Joint Hamiltonian matrix at time ``t``, spin-major ordering.

    Rows and columns run over (spin basis state, Fock level) with the spin
    index outermost, i.e. the matrix is kron(C, -i (f a_dag - conj(f) a)).
    """
    f = complex(f_array(drive, np.array([float(t)]))[0])
    a = space.lowering()
    h_osc = -1j * (f * a.conj().T - np.conj(f) * a)
    return np.kron(drive.conditioner.matrix, h_osc)


def displacement_matrix(alpha: complex | PhasePoint, space: FockSpace) -> np.ndarray:
    """exp(alpha a_dag - conj(alpha) a) on the truncated space, by dense exponential."""
    alpha = complex(alpha)
    a = space.lowering()
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


@dataclass(frozen=True)
class SectorEvolution:
    """Oscillator-block results for one conditioner eigenvalue."""

    eigenvalue: float
    evolution: np.ndarray | None
    overlap_series: np.ndarray
    dynamic_series: np.ndarray
    leakage_series: np.ndarray
    unitarity_defect: float | None


@dataclass(frozen=True)
class FockPropagation:
    """Everything the brute-force propagation measured.

    Per spin basis state (fixed order dd, du, ud, uu): the unwrapped total
    phase of the overlap with the initial state, the accumulated dynamic
    phase, the final overlap modulus, and the smallest overlap modulus seen
    along the way.  ``sectors`` holds the oscillator evolution per distinct
    conditioner eigenvalue; ``joint_matrix()`` assembles the full operator.
    """

    space: FockSpace
    steps: int
    tau: float
    initial_fock: int
    conditioner_name: str
    sector_weights: np.ndarray
    sectors: tuple[SectorEvolution, ...]
    eigenvector_columns: np.ndarray
    column_sector: np.ndarray
    total_phase: np.ndarray
    dynamic_phase: np.ndarray
    overlap_modulus: np.ndarray
    min_overlap_modulus: np.ndarray
    leakage: float
    unitarity_defect: float | None
    times: np.ndarray
    samples: dict | None = field(default=None)

    def sector(self, eigenvalue: float) -> SectorEvolution:
        for sector in self.sectors:
            if abs(sector.eigenvalue - eigenvalue) <= 1e-9:
                return sector
        raise KeyError(f"no spin sector with eigenvalue {eigenvalue}")

    def decomposition(self, spin_state: int) -> PhaseDecomposition:
        """Oracle phase decomposition for one basis state.

        The geometric part is defined as total minus dynamic, which is the
        form that remains valid when the loop has not closed.
        """
        total = extract_total_phase(self, spin_state)
        dynamic = float(self.dynamic_phase[spin_state])
        return decompose(total - dynamic, dynamic)

    def joint_matrix(self) -> np.ndarray:
        """Full evolution operator on spin (x) oscillator, spin-major."""
        if any(sector.evolution is None for sector in self.sectors):
            raise ValueError("propagation was run without operator tracking")
        dim = self.space.dimension
        joint = np.zeros((4 * dim, 4 * dim), dtype=complex)
        for k in range(4):
            column = self.eigenvector_columns[:, k]
            projector = np.outer(column, column.conj())
            sector = self.sectors[int(self.column_sector[k])]
            joint += np.kron(projector, sector.evolution)
        return joint

    def vacuum_conditioned_map(self) -> np.ndarray:
        """Two-qubit map <j', n0| U |j, n0>: the gate seen by the initial Fock level."""
        finals = np.array([s.overlap_series[-1] for s in self.sectors])
        diag = finals[self.column_sector]
        vectors = self.eigenvector_columns
        return (vectors * diag) @ vectors.conj().T

    def to_report_dict(self) -> dict:
        etas = []
        for i in range(4):
            dec = self.decomposition(i)
            etas.append(dec.eta)
        return {
            "schema_version": SCHEMA_VERSION,
            "n_max": self.space.n_max,
            "steps": self.steps,
            "tau": self.tau,
            "initial_fock": self.initial_fock,
            "conditioner": self.conditioner_name,
            "leakage": float(self.leakage),
            "unitarity_defect": (
                None if self.unitarity_defect is None else float(self.unitarity_defect)
            ),
            "total_phase": [float(x) for x in self.total_phase],
            "dynamic_phase": [float(x) for x in self.dynamic_phase],
            "geometric_phase": [
                float(t - d) for t, d in zip(self.total_phase, self.dynamic_phase)
            ],
            "eta": etas,
            "overlap_modulus": [float(x) for x in self.overlap_modulus],
        }


def extract_total_phase(propagation: FockPropagation, spin_state: int) -> float:
    """Unwrapped argument of <initial|psi(tau)> for one spin basis state.

    Raises :class:`UndefinedPhaseError` if the overlap modulus fell below
    ``OVERLAP_FLOOR`` at any step, since the accumulated argument is then
    numerically meaningless.
    """
    if not isinstance(spin_state, (int, np.integer)) or not 0 <= spin_state <= 3:
        raise ValueError(f"spin_state must be an index 0..3, got {spin_state!r}")
    if float(propagation.min_overlap_modulus[spin_state]) < OVERLAP_FLOOR:
        raise UndefinedPhaseError(
            f"overlap modulus dropped to {propagation.min_overlap_modulus[spin_state]:.3e}; "
            "total phase is undefined for this state"
        )
    return float(propagation.total_phase[spin_state])


def _sector_step_apply(vec, Dc, D, QcT, Qc, phase_vec):
    v = Dc * vec
    v = QcT @ v
    v = phase_vec * v
    v = Qc @ v
    return D * v


def _propagate_sector(
    eigenvalue: float,
    drive: DriveProfile,
    tau: float,
    space: FockSpace,
    steps: int,
    initial_fock: int,
    with_operator: bool,
) -> SectorEvolution:
    """Propagate one oscillator block with drive g(t) = eigenvalue * f(t)."""
    dim = space.dimension
    n_points = steps + 1
    identity_overlap = np.ones(n_points, dtype=complex)
    if eigenvalue == 0.0:
        return SectorEvolution(
            eigenvalue=0.0,
            evolution=np.eye(dim, dtype=complex) if with_operator else None,
            overlap_series=identity_overlap,
            dynamic_series=np.zeros(n_points),
            leakage_series=np.full(n_points, 1.0 if initial_fock == space.n_max else 0.0),
            unitarity_defect=0.0 if with_operator else None,
        )

    dt = tau / steps
    t_mid = (np.arange(steps) + 0.5) * dt
    g_mid = eigenvalue * f_array(drive, t_mid)

    sq = np.sqrt(np.arange(1.0, dim))
    X = np.diag(sq, 1) + np.diag(sq, -1)
    w, Q = np.linalg.eigh(X)
    Qc = Q.astype(complex)
    QcT = np.ascontiguousarray(Qc.T)
    nvec = np.arange(dim)

    psi = space.basis_state(initial_fock)
    operator = np.eye(dim, dtype=complex) if with_operator else None

    overlap_series = np.empty(n_points, dtype=complex)
    dynamic_series = np.empty(n_points)
    leakage_series = np.empty(n_points)
    overlap_series[0] = 1.0
    dynamic_series[0] = 0.0
    leakage_series[0] = float(abs(psi[space.n_max]) ** 2)

    dynamic = 0.0
    for k in range(steps):
        g = g_mid[k]
        mag = abs(g)
        if mag < 1e-300:
            overlap_series[k + 1] = overlap_series[k]
            dynamic_series[k + 1] = dynamic
            leakage_series[k + 1] = leakage_series[k]
            continue
        ph = np.angle(g) - 0.5 * np.pi
        D = np.exp(1j * ph * nvec)
        Dc = np.conj(D)
        half = np.exp(-1j * mag * (0.5 * dt) * w)

        psi_mid = _sector_step_apply(psi, Dc, D, QcT, Qc, half)
        # <H> at the midpoint: H = -i g a_dag + i conj(g) a.
        a_psi = np.empty(dim, dtype=complex)
        a_psi[:-1] = sq * psi_mid[1:]
        a_psi[-1] = 0.0
        ad_psi = np.empty(dim, dtype=complex)
        ad_psi[0] = 0.0
        ad_psi[1:] = sq * psi_mid[:-1]
        energy = float(np.real(np.vdot(psi_mid, -1j * g * ad_psi + 1j * np.conj(g) * a_psi)))
        dynamic -= energy * dt
        psi = _sector_step_apply(psi_mid, Dc, D, QcT, Qc, half)

        if with_operator:
            M = Dc[:, None] * operator
            M = QcT @ M
            M = (half * half)[:, None] * M
            M = Qc @ M
            operator = D[:, None] * M

        overlap_series[k + 1] = psi[initial_fock]
        dynamic_series[k + 1] = dynamic
        leakage_series[k + 1] = float(abs(psi[space.n_max]) ** 2)

    defect = None
    if with_operator:
        defect = float(
            np.linalg.norm(operator.conj().T @ operator - np.eye(dim), 2)
        )
    return SectorEvolution(
        eigenvalue=float(eigenvalue),
        evolution=operator,
        overlap_series=overlap_series,
        dynamic_series=dynamic_series,
        leakage_series=leakage_series,
        unitarity_defect=defect,
    )


def _unwrap_series(overlaps: np.ndarray) -> tuple[np.ndarray, float]:
    """Accumulated argument along an overlap series, plus its smallest modulus."""
    moduli = np.abs(overlaps)
    ratios = overlaps[1:] * np.conj(overlaps[:-1])
    increments = np.angle(ratios)
    phases = np.concatenate([[0.0], np.cumsum(increments)])
    return phases, float(np.min(moduli))


def propagate(
    drive: DriveProfile,
    tau: float | None = None,
    space: FockSpace | None = None,
    steps: int = DEFAULT_STEPS,
    *,
    initial_fock: int = 0,
    leakage_tol: float = DEFAULT_LEAKAGE_TOL,
    sample_times: Sequence[float] | None = None,
    with_operator: bool = True,
) -> FockPropagation:
    """Ordered-product evolution of the joint system over [0, tau].

    The conditioner is diagonalized once; each distinct eigenvalue beta gets
    its own oscillator block driven by beta * f(t), stepped with midpoint
    exponentials exp(-i H(t_mid) dt) evaluated exactly on the truncated
    space.  Per-basis-state phases are recombined through the conditioner
    eigenbasis, which reduces to plain per-state propagation for diagonal
    conditioners.

    ``space=None`` picks :func:`default_space` (n_max = 64, escalated when
    the loop grows).  ``sample_times`` requests phase snapshots on grid
    times; ``initial_fock`` starts every sector from that Fock level instead
    of the vacuum.  Population reaching the top level above ``leakage_tol``
    raises :class:`TruncationError` with a recommended truncation.
    """
    if tau is None:
        tau = drive.total_duration
    tau = float(tau)
    if not (0.0 < tau <= drive.total_duration * (1.0 + 1e-12)):
        raise ValueError(f"tau must lie in (0, {drive.total_duration}], got {tau}")
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    if space is None:
        space = default_space(drive, tau)
    if not 0 <= initial_fock <= space.n_max:
        raise ValueError(f"initial_fock {initial_fock} outside [0, {space.n_max}]")

    values, vectors = drive.conditioner.eigensystem()
    distinct: list[float] = []
    column_sector = np.empty(4, dtype=int)
    for k, value in enumerate(values):
        for i, existing in enumerate(distinct):
            if abs(value - existing) <= _EIGENVALUE_RESOLUTION:
                column_sector[k] = i
                break
        else:
            column_sector[k] = len(distinct)
            distinct.append(float(value))

    sectors = tuple(
        _propagate_sector(value, drive, tau, space, steps, initial_fock, with_operator)
        for value in distinct
    )

    # weights[j, i]: probability that basis state j sits in sector i.
    weights = np.zeros((4, len(distinct)))
    for k in range(4):
        weights[:, column_sector[k]] += np.abs(vectors[:, k]) ** 2

    n_points = steps + 1
    overlap_by_state = np.zeros((4, n_points), dtype=complex)
    dynamic_by_state = np.zeros((4, n_points))
    leakage_by_state = np.zeros((4, n_points))
    for i, sector in enumerate(sectors):
        overlap_by_state += weights[:, i : i + 1] * sector.overlap_series[None, :]
        dynamic_by_state += weights[:, i : i + 1] * sector.dynamic_series[None, :]
        leakage_by_state += weights[:, i : i + 1] * sector.leakage_series[None, :]

    total_by_state = np.empty((4, n_points))
    min_moduli = np.empty(4)
    for j in range(4):
        total_by_state[j], min_moduli[j] = _unwrap_series(overlap_by_state[j])

    leakage = float(np.max(leakage_by_state))
    if leakage > leakage_tol:
        excursion_sq = peak_excursion(drive, tau) ** 2
        recommended = int(math.ceil(4.0 * excursion_sq))
        if recommended <= space.n_max:
            recommended = 2 * space.n_max
        raise TruncationError(
            f"population {leakage:.3e} reached the top Fock level n_max={space.n_max}; "
            f"rerun with n_max >= {recommended}",
            leakage=leakage,
            recommended_n_max=recommended,
        )

    defects = [s.unitarity_defect for s in sectors if s.unitarity_defect is not None]
    unitarity_defect = max(defects) if with_operator and defects else None

    times = np.linspace(0.0, tau, n_points)
    samples = None
    if sample_times is not None:
        dt = tau / steps
        indices = []
        for t in sample_times:
            idx = int(round(float(t) / dt))
            if not 0 <= idx <= steps or abs(idx * dt - float(t)) > 1e-9 * max(tau, 1.0):
                raise ValueError(f"sample time {t} does not lie on the step grid")
            indices.append(idx)
        index_arr = np.array(indices, dtype=int)
        samples = {
            "times": times[index_arr],
            "total_phase": total_by_state[:, index_arr].T.copy(),
            "dynamic_phase": dynamic_by_state[:, index_arr].T.copy(),
            "leakage": np.max(leakage_by_state[:, index_arr], axis=0),
        }

    return FockPropagation(
        space=space,
        steps=steps,
        tau=tau,
        initial_fock=initial_fock,
        conditioner_name=drive.conditioner.name,
        sector_weights=weights,
        sectors=sectors,
        eigenvector_columns=vectors,
        column_sector=column_sector,
        total_phase=total_by_state[:, -1].copy(),
        dynamic_phase=dynamic_by_state[:, -1].copy(),
        overlap_modulus=np.abs(overlap_by_state[:, -1]),
        min_overlap_modulus=min_moduli,
        leakage=leakage,
        unitarity_defect=unitarity_defect,
        times=times,
        samples=samples,
    )


def verify_magnus_form(
    drive: DriveProfile,
    tau: float | None = None,
    space: FockSpace | None = None,
    steps: int = DEFAULT_STEPS,
) -> float:
    """Deviation of the stepped evolution from its displacement form.

    For a single-tone drive the unit-eigenvalue oscillator block must equal
    exp(i * Phi(tau)) * D(alpha(tau)) exactly, because the commutator of the
    Hamiltonian with itself at different times is a number.  Returns the
    spectral norm of the difference restricted to the low-occupation block
    (Fock levels up to n_max/2), where truncation effects are negligible.

    The comparison is three-way independent: the left side is the ordered
    product of midpoint exponentials, the displacement operator is built by
    scaling-and-squaring, and Phi and alpha come from the closed forms.
    """
    if len(drive.segments) != 1 or drive.segments[0].func is not None:
        raise ValueError("the displacement-form check needs a single-tone drive")
    segment = drive.segments[0]
    if segment.frequency == 0.0:
        raise ValueError("the displacement-form check needs a nonzero detuning")
    if tau is None:
        tau = drive.total_duration
    tau = float(tau)
    if space is None:
        space = default_space(drive, tau)

    sector = _propagate_sector(1.0, drive, tau, space, steps, 0, True)
    omega = abs(segment.amplitude)
    ratio = omega / segment.frequency
    phi = analytic_total_phase(ratio, segment.frequency, tau)
    alpha = complex(alpha_array(drive, np.array([tau]))[0])
    target = np.exp(1j * phi) * displacement_matrix(alpha, space)

    block = space.n_max // 2 + 1
    difference = (sector.evolution - target)[:block, :block]
    return float(np.linalg.norm(difference, 2))
