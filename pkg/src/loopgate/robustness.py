"""Parameter sweeps that exercise the robustness properties of loop gates.

Four studies ship here: the phase relations away from loop closure, the
response of the total phase to timing errors in the loop period, the
parameter independence of the dynamic-to-geometric ratio eta, and the
dependence of the geometric phase on loop area alone.  Every report row keeps
total = geometric + dynamic by construction, and reports are deterministic:
nothing in the core draws random numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._serialize import csv_number as _csv_number, format_float as _format_number, format_tree as _format_tree
from ._version import __version__
from .drives import (
    ConstantDriveParams,
    DriveProfile,
    closure_residual,
    constant_drive,
    constant_drive_h_expect,
    drive_h_expect,
    induced_trajectory,
)
from .errors import InternalConsistencyError, LoopNotClosedError
from .gates import TwoQubitGate, gate_fidelity, phase_gate
from .oracle import DEFAULT_N_MAX, DEFAULT_STEPS, FockSpace, propagate
from .phasespace import (
    DEFAULT_CLOSURE_TOLERANCE,
    analytic_total_phase,
    analytic_trajectory,
    decompose,
    dynamic_phase,
    geometric_phase,
)

SCHEMA_VERSION = 1

# Quadrature sampling densities chosen so the stated analytic tolerances
# (1e-9 on phase identities) hold with margin; both are second order in the
# grid spacing.
ETA_SWEEP_SAMPLES = 400_001
NONCYCLIC_SAMPLES = 200_001
AREA_STUDY_SAMPLES = 100_001

NONCYCLIC_ANALYTIC_TOL = 1e-9
NONCYCLIC_ORACLE_TOL = 1e-4

_SWEEP_PARAMETERS = ("timing_error", "omega_over_delta", "phi_l", "delta", "loop_shape")


@dataclass(frozen=True)
class OracleSettings:
    """Truncation and step count for sweep points that also run the oracle."""

    n_max: int = DEFAULT_N_MAX
    steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        if self.n_max < 2:
            raise ValueError(f"n_max must be >= 2, got {self.n_max}")
        if self.steps < 1:
            raise ValueError(f"steps must be positive, got {self.steps}")

    @property
    def space(self) -> FockSpace:
        return FockSpace(self.n_max)


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep description.

    ``oracle_settings=None`` means analytic-only; otherwise every grid point
    also runs the brute-force propagation at those settings.
    """

    parameter: str
    grid: tuple[float, ...]
    base: ConstantDriveParams
    oracle_settings: OracleSettings | None = None

    def __post_init__(self) -> None:
        if self.parameter not in _SWEEP_PARAMETERS:
            raise ValueError(
                f"unknown sweep parameter {self.parameter!r}; expected one of {_SWEEP_PARAMETERS}"
            )
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("sweep grid must not be empty")
        if not all(math.isfinite(v) for v in grid):
            raise ValueError("sweep grid values must be finite")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class SweepRow:
    """One grid point: phases, eta, and optional fidelity/oracle columns."""

    value: float
    total: float
    geometric: float
    dynamic: float
    eta: float | None
    fidelity: float | None = None
    oracle_deviation: float | None = None


@dataclass(frozen=True)
class SweepReport:
    """Rows plus metadata; serializes to CSV and JSON deterministically."""

    parameter: str
    rows: tuple[SweepRow, ...]
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "parameter": self.parameter,
            "metadata": _format_tree(self.metadata),
            "rows": [
                {
                    "value": _format_number(r.value),
                    "total": _format_number(r.total),
                    "geometric": _format_number(r.geometric),
                    "dynamic": _format_number(r.dynamic),
                    "eta": _format_number(r.eta),
                    "fidelity": _format_number(r.fidelity),
                    "oracle_deviation": _format_number(r.oracle_deviation),
                }
                for r in self.rows
            ],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            [
                "kind",
                "parameter",
                "value",
                "total",
                "geometric",
                "dynamic",
                "eta",
                "fidelity",
                "oracle_deviation",
            ]
        )
        for r in self.rows:
            writer.writerow(
                [
                    "row",
                    self.parameter,
                    _csv_number(r.value),
                    _csv_number(r.total),
                    _csv_number(r.geometric),
                    _csv_number(r.dynamic),
                    _csv_number(r.eta),
                    _csv_number(r.fidelity),
                    _csv_number(r.oracle_deviation),
                ]
            )
        for key in sorted(self.metadata):
            value = self.metadata[key]
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                writer.writerow(["summary", key, _csv_number(value), "", "", "", "", "", ""])
        return buffer.getvalue()

    def write(self, path: str, fmt: str = "json") -> None:
        if fmt == "json":
            text = self.to_json_text()
        elif fmt == "csv":
            text = self.to_csv_text()
        else:
            raise ValueError(f"unknown format {fmt!r}; expected 'json' or 'csv'")
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _base_metadata(oracle_settings: OracleSettings | None) -> dict:
    metadata = {
        "package_version": __version__,
        "seed": None,
        "oracle": None,
    }
    if oracle_settings is not None:
        metadata["oracle"] = {"n_max": oracle_settings.n_max, "steps": oracle_settings.steps}
    return metadata


def _oracle_phase_triplet(
    drive: DriveProfile, tau: float, settings: OracleSettings, spin_state: int = 1
) -> tuple[float, float, float]:
    """Brute-force (total, geometric, dynamic) for one spin basis state."""
    propagation = propagate(
        drive,
        tau,
        space=settings.space,
        steps=settings.steps,
        with_operator=False,
    )
    decomposition = propagation.decomposition(spin_state)
    return decomposition.total, decomposition.geometric, decomposition.dynamic


def noncyclic_scan(
    drive: ConstantDriveParams,
    times: Sequence[float],
    *,
    samples: int = NONCYCLIC_SAMPLES,
    oracle_settings: OracleSettings | None = None,
    analytic_tolerance: float = NONCYCLIC_ANALYTIC_TOL,
    oracle_tolerance: float = NONCYCLIC_ORACLE_TOL,
) -> SweepReport:
    """Check the phase relations at times where the loop has not closed.

    For each requested time t the closed-form total phase Phi(t) is compared
    against quadrature values of the open-path line integral (geometric) and
    of -integral <H> (dynamic): the scan asserts geometric(t) = -Phi(t) and
    dynamic(t) = 2*Phi(t) within ``analytic_tolerance``.  With oracle settings
    the brute-force total and dynamic phases must match Phi(t) and 2*Phi(t)
    within ``oracle_tolerance``; each oracle time must lie on the step grid.
    """
    times = [float(t) for t in times]
    if not times:
        raise ValueError("no scan times given")
    period = drive.period
    if min(times) < 0.0 or max(times) > 10.0 * period:
        raise ValueError("scan times must lie within [0, 10 periods]")

    oracle_samples = None
    if oracle_settings is not None and max(times) > 0.0:
        window = max(times)
        profile = constant_drive(drive, periods=window / period)
        propagation = propagate(
            profile,
            window,
            space=oracle_settings.space,
            steps=oracle_settings.steps,
            sample_times=times,
            with_operator=False,
        )
        oracle_samples = propagation.samples

    h_expect = constant_drive_h_expect(drive)
    rows = []
    max_dev_analytic = 0.0
    max_dev_oracle = 0.0
    for i, t in enumerate(times):
        phi = analytic_total_phase(drive.ratio, drive.delta, t)
        if t == 0.0:
            geometric = 0.0
            dyn = 0.0
        else:
            grid = np.linspace(0.0, t, samples)
            trajectory = analytic_trajectory(drive.ratio, drive.delta, drive.phi_l, grid)
            geometric = geometric_phase(trajectory)
            dyn = dynamic_phase(trajectory, h_expect)
        dev_geometric = abs(geometric + phi)
        dev_dynamic = abs(dyn - 2.0 * phi)
        max_dev_analytic = max(max_dev_analytic, dev_geometric, dev_dynamic)
        if dev_geometric > analytic_tolerance or dev_dynamic > analytic_tolerance:
            raise InternalConsistencyError(
                f"analytic phase relations violated at t={t}: "
                f"geometric residual {dev_geometric:.3e}, dynamic residual {dev_dynamic:.3e}"
            )
        oracle_deviation = None
        if oracle_samples is not None:
            oracle_total = float(oracle_samples["total_phase"][i, 1])
            oracle_dynamic = float(oracle_samples["dynamic_phase"][i, 1])
            oracle_deviation = max(abs(oracle_total - phi), abs(oracle_dynamic - 2.0 * phi))
            max_dev_oracle = max(max_dev_oracle, oracle_deviation)
            if oracle_deviation > oracle_tolerance:
                raise InternalConsistencyError(
                    f"oracle phase relations violated at t={t}: deviation {oracle_deviation:.3e}"
                )
        decomposition = decompose(geometric, dyn)
        rows.append(
            SweepRow(
                value=t,
                total=decomposition.total,
                geometric=geometric,
                dynamic=dyn,
                eta=decomposition.eta,
                fidelity=None,
                oracle_deviation=oracle_deviation,
            )
        )

    metadata = _base_metadata(oracle_settings)
    metadata.update(
        {
            "tolerances": {
                "analytic": analytic_tolerance,
                "oracle": oracle_tolerance if oracle_settings is not None else None,
            },
            "samples": samples,
            "max_analytic_relation_residual": max_dev_analytic,
            "max_oracle_relation_residual": (
                max_dev_oracle if oracle_settings is not None else None
            ),
        }
    )
    return SweepReport(parameter="time", rows=tuple(rows), metadata=metadata)


def timing_error_sweep(
    base: ConstantDriveParams,
    epsilons: Sequence[float],
    *,
    oracle_settings: OracleSettings | None = None,
) -> SweepReport:
    """Response of the gate to a relative error epsilon in the loop period.

    Each row evaluates the evolution up to tau = T * (1 + epsilon): the total
    phase is Phi(tau) in closed form (the phase relations hold at every
    endpoint, so geometric = -Phi and dynamic = 2*Phi still), and the fidelity
    column compares the vacuum-conditioned two-qubit map, renormalized to the
    nearest unitary, against the ideal gate at the nominal period.  The phase
    error Phi(tau) - Phi(T) vanishes to third order in epsilon, which the
    metadata records as a log-log slope over the rows with |epsilon| in
    [1e-3, 1e-2] (when at least two such rows exist).
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("no epsilon values given")
    if any(abs(e) >= 0.5 for e in epsilons):
        raise ValueError("timing errors must satisfy |epsilon| < 0.5")

    period = base.period
    nominal_phase = analytic_total_phase(base.ratio, base.delta, period)
    ideal = phase_gate(nominal_phase)

    rows = []
    max_abs_error = 0.0
    for eps in epsilons:
        tau = period * (1.0 + eps)
        if tau <= 0.0:
            raise ValueError(f"epsilon {eps} leaves no evolution window")
        phi = analytic_total_phase(base.ratio, base.delta, tau)
        delta_gamma = phi - nominal_phase
        max_abs_error = max(max_abs_error, abs(delta_gamma))
        perturbed = phase_gate(phi)
        fidelity = gate_fidelity(perturbed, ideal)

        oracle_deviation = None
        if oracle_settings is not None:
            profile = constant_drive(base, periods=1.0 + eps) if eps != 0.0 else constant_drive(base)
            oracle_total, _, _ = _oracle_phase_triplet(
                profile, tau, oracle_settings, spin_state=1
            )
            oracle_deviation = abs(oracle_total - phi)

        decomposition = decompose(-phi, 2.0 * phi)
        rows.append(
            SweepRow(
                value=eps,
                total=decomposition.total,
                geometric=decomposition.geometric,
                dynamic=decomposition.dynamic,
                eta=decomposition.eta,
                fidelity=fidelity,
                oracle_deviation=oracle_deviation,
            )
        )

    metadata = _base_metadata(oracle_settings)
    metadata.update(
        {
            "nominal_total_phase": nominal_phase,
            "max_abs_phase_error": max_abs_error,
            "loglog_slope": _loglog_slope(base, epsilons),
        }
    )
    return SweepReport(parameter="timing_error", rows=tuple(rows), metadata=metadata)


def _loglog_slope(base: ConstantDriveParams, epsilons: Sequence[float]) -> float | None:
    """Slope of log|phase error| vs log(epsilon) over the window [1e-3, 1e-2]."""
    period = base.period
    nominal = analytic_total_phase(base.ratio, base.delta, period)
    xs = []
    ys = []
    for eps in epsilons:
        if 1e-3 <= abs(eps) <= 1e-2:
            error = abs(
                analytic_total_phase(base.ratio, base.delta, period * (1.0 + eps)) - nominal
            )
            if error > 0.0:
                xs.append(math.log(abs(eps)))
                ys.append(math.log(error))
    if len(xs) < 2:
        return None
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def eta_invariance_sweep(spec: SweepSpec, *, samples: int = ETA_SWEEP_SAMPLES) -> SweepReport:
    """eta over a one-parameter family of closed one-period loops.

    The swept parameter is one of omega_over_delta (detuning fixed), delta
    (ratio fixed, so the loop shape is preserved while the traversal speed
    changes), or phi_l.  Every point is evaluated at exactly one period, so
    the loop is closed and eta is well defined; the metadata summarizes
    max |eta + 2| for the analytic rows and, when oracle settings are given,
    for the brute-force rows as well.
    """
    if spec.parameter not in ("omega_over_delta", "phi_l", "delta"):
        raise ValueError(
            f"eta sweeps support omega_over_delta, phi_l, delta; got {spec.parameter!r}"
        )
    rows = []
    max_eta_dev = 0.0
    max_eta_dev_oracle = None
    for value in spec.grid:
        params = _apply_parameter(spec.base, spec.parameter, value)
        grid = np.linspace(0.0, params.period, samples)
        trajectory = analytic_trajectory(params.ratio, params.delta, params.phi_l, grid)
        geometric = geometric_phase(trajectory)
        dyn = dynamic_phase(trajectory, constant_drive_h_expect(params))
        decomposition = decompose(geometric, dyn)
        if decomposition.eta is not None:
            max_eta_dev = max(max_eta_dev, abs(decomposition.eta + 2.0))

        oracle_deviation = None
        if spec.oracle_settings is not None:
            profile = constant_drive(params)
            total_o, geometric_o, dynamic_o = _oracle_phase_triplet(
                profile, params.period, spec.oracle_settings, spin_state=1
            )
            oracle_deviation = max(
                abs(total_o - decomposition.total),
                abs(geometric_o - geometric),
                abs(dynamic_o - dyn),
            )
            if abs(geometric_o) > 1e-9:
                eta_o = dynamic_o / geometric_o
                dev = abs(eta_o + 2.0)
                max_eta_dev_oracle = (
                    dev if max_eta_dev_oracle is None else max(max_eta_dev_oracle, dev)
                )

        rows.append(
            SweepRow(
                value=value,
                total=decomposition.total,
                geometric=geometric,
                dynamic=dyn,
                eta=decomposition.eta,
                fidelity=None,
                oracle_deviation=oracle_deviation,
            )
        )

    metadata = _base_metadata(spec.oracle_settings)
    metadata.update(
        {
            "samples": samples,
            "max_abs_eta_plus_2": max_eta_dev,
            "max_abs_eta_plus_2_oracle": max_eta_dev_oracle,
        }
    )
    return SweepReport(parameter=spec.parameter, rows=tuple(rows), metadata=metadata)


def _apply_parameter(
    base: ConstantDriveParams, parameter: str, value: float
) -> ConstantDriveParams:
    if parameter == "omega_over_delta":
        return ConstantDriveParams(
            omega_d=value * base.delta, delta=base.delta, phi_l=base.phi_l
        )
    if parameter == "delta":
        # Keep the ratio fixed: same loop, different traversal speed.
        return ConstantDriveParams(
            omega_d=base.ratio * value, delta=value, phi_l=base.phi_l
        )
    if parameter == "phi_l":
        return ConstantDriveParams(omega_d=base.omega_d, delta=base.delta, phi_l=value)
    raise ValueError(f"unsupported parameter {parameter!r}")


def area_invariance_study(
    loops: Sequence[DriveProfile],
    *,
    samples: int = AREA_STUDY_SAMPLES,
    agreement_tolerance: float = 1e-6,
    closure_tolerance: float = DEFAULT_CLOSURE_TOLERANCE,
) -> SweepReport:
    """Geometric phases of closed loops that share one enclosed area.

    Each profile must close (open loops are rejected); its induced trajectory
    is sampled and the geometric phase computed from the line integral.  The
    study asserts pairwise agreement within ``agreement_tolerance``, which is
    how shape, orientation offset, and traversal-rate independence are all
    checked: pass loops that differ only in those respects.
    """
    loops = list(loops)
    if not loops:
        raise ValueError("no loops given")
    rows = []
    geometrics = []
    for index, loop in enumerate(loops):
        residual = closure_residual(loop)
        if residual > closure_tolerance:
            raise LoopNotClosedError(
                f"loop {index} is open: residual {residual:.3e}", residual
            )
        trajectory = induced_trajectory(loop, samples=samples)
        geometric = geometric_phase(trajectory)
        dyn = dynamic_phase(trajectory, drive_h_expect(loop))
        decomposition = decompose(geometric, dyn)
        geometrics.append(geometric)
        rows.append(
            SweepRow(
                value=float(index),
                total=decomposition.total,
                geometric=geometric,
                dynamic=dyn,
                eta=decomposition.eta,
                fidelity=None,
                oracle_deviation=None,
            )
        )
    spread = float(np.max(geometrics) - np.min(geometrics)) if len(geometrics) > 1 else 0.0
    if spread > agreement_tolerance:
        raise InternalConsistencyError(
            f"geometric phases disagree across equal-area loops: spread {spread:.3e}"
        )
    metadata = _base_metadata(None)
    metadata.update(
        {
            "samples": samples,
            "agreement_tolerance": agreement_tolerance,
            "geometric_phase_spread": spread,
        }
    )
    return SweepReport(parameter="loop_shape", rows=tuple(rows), metadata=metadata)
