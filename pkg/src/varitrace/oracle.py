"""Independent finite-difference verification of the analytic machinery.

The variation matrix is, by definition, the Jacobian of the flow map
(p0, z0) -> (p(r), z(r)).  Everything in here estimates that Jacobian by
rerunning whole traces with perturbed initial data and centered
differences, deliberately avoiding the analytic K-matrix and jump-matrix
code paths it is meant to check.  ``verify_kappa`` is the decisive test of
the boundary jump: it compares the analytically propagated q (with the
jump applied) against the numerically differentiated bounce map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .environment import Bathymetry, SoundSpeedField
from .errors import GeometryError, PerturbationTooLargeError
from .propagation import TraceConfig, TraceResult, TraceStatus, trace_from_pulse

__all__ = [
    "BeamPerturbation",
    "JacobianEstimate",
    "KappaVerification",
    "BeamOffsets",
    "fd_jacobian",
    "verify_kappa",
    "beam_geometry_check",
]

# Retries with halved perturbations before giving up on a bounce-sequence
# mismatch between the central and perturbed rays.
MAX_HALVINGS = 5


@dataclass(frozen=True)
class BeamPerturbation:
    """Initial-condition offsets for the narrow comparison beam.

    ``h_p`` perturbs the launch pulse (dimensionless), ``h_z`` the launch
    depth (m); both must be small against the problem scales.
    ``richardson_levels`` >= 2 controls the error estimate.
    """

    h_p: float = 1e-6
    h_z: float = 1e-4
    richardson_levels: int = 2

    def __post_init__(self):
        if self.h_p <= 0.0 or self.h_z <= 0.0:
            raise ValueError("perturbations must be positive")
        if self.richardson_levels < 2:
            raise ValueError("need at least 2 Richardson levels")

    def halved(self) -> "BeamPerturbation":
        return replace(self, h_p=0.5 * self.h_p, h_z=0.5 * self.h_z)


@dataclass(frozen=True)
class JacobianEstimate:
    """Centered-difference flow-map Jacobian and its Richardson error bars.

    ``matrix`` is the estimate at the requested perturbation; ``error`` is
    the per-entry error estimate |J(h) - J(h/2)| * 4/3 from comparing
    successive halvings.
    """

    matrix: np.ndarray
    error: np.ndarray
    h_p: float
    h_z: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.error)):
            raise ValueError("Richardson error estimate is not finite")


def _bounce_signature(result: TraceResult) -> tuple:
    return tuple(b.boundary for b in result.bounces)


def _endpoint(result: TraceResult, r_query: float) -> tuple[float, float]:
    r_final = result.samples[-1, 0]
    if result.status is not TraceStatus.COMPLETED or abs(r_final - r_query) > 1e-9:
        raise PerturbationTooLargeError(
            f"perturbed trace ended at r = {r_final:g} with status "
            f"{result.status.value}, expected to reach {r_query:g}")
    return float(result.samples[-1, 2]), float(result.samples[-1, 1])


def _centered_jacobian(field_, bath, cfg, z0, p0, h_p, h_z, signature) -> np.ndarray:
    cols = []
    for dp0, dz0 in ((h_p, 0.0), (0.0, h_z)):
        try:
            plus = trace_from_pulse(field_, bath, cfg, z0 + dz0, p0 + dp0)
            minus = trace_from_pulse(field_, bath, cfg, z0 - dz0, p0 - dp0)
        except ValueError as exc:
            # perturbed launch left the water column or went steep
            raise PerturbationTooLargeError(str(exc))
        for res in (plus, minus):
            if _bounce_signature(res) != signature:
                raise PerturbationTooLargeError(
                    "perturbed ray bounce sequence differs from the central ray")
        p_plus, z_plus = _endpoint(plus, cfg.r_end)
        p_minus, z_minus = _endpoint(minus, cfg.r_end)
        denom = 2.0 * (dp0 + dz0)
        cols.append(((p_plus - p_minus) / denom, (z_plus - z_minus) / denom))
    return np.array(cols).T  # rows (p, z), columns (p0, z0)


def fd_jacobian(field_: SoundSpeedField, bath: Bathymetry, cfg: TraceConfig,
                pert: BeamPerturbation, r_query: float) -> JacobianEstimate:
    """Numerical flow-map Jacobian at r_query via centered differences.

    Runs four perturbed traces per Richardson level plus the central one;
    all must reach r_query with the central ray's bounce sequence.  On a
    sequence mismatch the perturbations are halved up to five times before
    failing with PerturbationTooLargeError.
    """
    if not cfg.r_start <= r_query <= cfg.r_end:
        raise ValueError(f"r_query = {r_query:g} outside the trace range")
    cfg_q = replace(cfg, r_end=r_query)
    n0 = field_.index_at(cfg.r_start, cfg.z0).n
    p0 = n0 * math.sin(cfg.theta0)

    central = trace_from_pulse(field_, bath, cfg_q, cfg.z0, p0)
    _endpoint(central, r_query)
    signature = _bounce_signature(central)

    last_error: Exception | None = None
    for _ in range(MAX_HALVINGS + 1):
        try:
            levels = [
                _centered_jacobian(field_, bath, cfg_q, cfg.z0, p0,
                                   pert.h_p / 2**i, pert.h_z / 2**i, signature)
                for i in range(pert.richardson_levels)
            ]
            error = np.abs(levels[-2] - levels[-1]) * (4.0 / 3.0)
            return JacobianEstimate(matrix=levels[0], error=error,
                                    h_p=pert.h_p, h_z=pert.h_z)
        except PerturbationTooLargeError as exc:
            last_error = exc
            pert = pert.halved()
    raise PerturbationTooLargeError(
        f"bounce sequences still differ after {MAX_HALVINGS} halvings: {last_error}")


@dataclass(frozen=True)
class KappaVerification:
    """Analytic vs numeric variation matrix just past a single bounce."""

    analytic: np.ndarray
    numeric: np.ndarray
    rel_err: np.ndarray
    max_rel_err: float
    estimate: JacobianEstimate


def _relative_errors(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.where(scale > floor, np.abs(a - b) / np.maximum(scale, floor),
                    np.abs(a - b))


def verify_kappa(field_: SoundSpeedField, bath: Bathymetry, cfg: TraceConfig,
                 pert: BeamPerturbation, r_after_bounce: float) -> KappaVerification:
    """Compare analytic q (jump applied) with the FD Jacobian after one bounce.

    The central trace must bounce exactly once before ``r_after_bounce``.
    Entrywise relative errors use max(|analytic|, |numeric|) as the scale,
    falling back to absolute differences for near-zero entries.
    """
    # Analytic side: an ordinary trace, which integrates dq/dr = Kq and
    # applies the jump matrix at the bounce.
    cfg_q = replace(cfg, r_end=r_after_bounce)
    n0 = field_.index_at(cfg.r_start, cfg.z0).n
    p0 = n0 * math.sin(cfg.theta0)
    central = trace_from_pulse(field_, bath, cfg_q, cfg.z0, p0)
    if central.status is not TraceStatus.COMPLETED:
        raise GeometryError(
            f"central ray did not reach {r_after_bounce:g}: {central.status.value}")
    if len(central.bounces) != 1:
        raise GeometryError(
            f"expected exactly one bounce before r = {r_after_bounce:g}, "
            f"got {len(central.bounces)}")
    analytic = central.final_state().q.as_array()

    estimate = fd_jacobian(field_, bath, cfg, pert, r_after_bounce)
    rel = _relative_errors(analytic, estimate.matrix)
    return KappaVerification(analytic=analytic, numeric=estimate.matrix,
                             rel_err=rel, max_rel_err=float(rel.max()),
                             estimate=estimate)


@dataclass(frozen=True)
class BeamOffsets:
    """Incidence-point offsets (dr, dz) of a neighboring beam ray."""

    dr: float
    dz: float


def beam_geometry_check(t, n_vec, delta_z: float) -> BeamOffsets:
    """Offsets of the neighbor ray's hit point on a locally planar boundary.

    A neighbor displaced by delta_z below the central ray at the central
    hit range strikes the (planar) boundary at
    dr = (tr Nz / <t,N>) delta_z, dz = -(tr Nr / <t,N>) delta_z.
    The test suite checks these against an explicit ray/line intersection.
    """
    tr, tz = float(t[0]), float(t[1])
    nr, nz = float(n_vec[0]), float(n_vec[1])
    n_t = tr * nr + tz * nz
    if n_t == 0.0:
        raise GeometryError("tangential geometry: <t, N> = 0")
    return BeamOffsets(dr=tr * nz / n_t * delta_z, dz=-tr * nr / n_t * delta_z)
