"""Range marching of rays and their variation matrices.

Integrates (z, p, q) jointly with a classical fixed-step RK4 scheme,
detects surface and bottom crossings by sign change of the boundary gap
(with a midpoint probe against double crossings), bisects the step length
to land on the boundary, applies the reflection jump and resumes.  All
abnormal endings are reported as statuses, never exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .environment import Bathymetry, SoundSpeedField, surface_frame
from .errors import DomainError, GeometryError, SingularReflectionError, SteepRayError
from .ray_core import RayState, VariationMatrix, k_matrix, ray_rhs
from .reflection import KappaMatrix, ReflectionContext, kappa_matrix

__all__ = [
    "TraceConfig",
    "TraceStatus",
    "BounceRecord",
    "TraceResult",
    "SpreadingFactor",
    "trace_ray",
    "trace_from_pulse",
    "trace_fan",
    "spreading_at",
]

SURFACE = "surface"
BOTTOM = "bottom"


class TraceStatus(Enum):
    COMPLETED = "completed"
    BACKSCATTERED = "backscattered"
    STEEP_RAY = "steep_ray"
    MAX_BOUNCES = "max_bounces"
    DOMAIN_EXIT = "domain_exit"


@dataclass(frozen=True)
class TraceConfig:
    """Launch point, angle and step control for one trace.

    ``dr`` is the base range step (m), ``bisect_tol`` the boundary
    residual tolerance (m), ``steep_cutoff`` the grazing-angle limit (rad)
    beyond which marching in range is abandoned.
    """

    r_start: float
    r_end: float
    z0: float
    theta0: float
    dr: float = 10.0
    bisect_tol: float = 1e-9
    steep_cutoff: float = math.radians(89.5)
    max_bounces: int = 10_000

    def __post_init__(self):
        if self.r_end < self.r_start:
            raise ValueError("r_end must not precede r_start")
        if self.dr <= 0.0:
            raise ValueError("base step dr must be positive")
        if self.bisect_tol <= 0.0:
            raise ValueError("bisection tolerance must be positive")
        if not 0.0 < self.steep_cutoff < math.pi / 2.0:
            raise ValueError("steep-angle cutoff must lie in (0, pi/2)")
        if abs(self.theta0) >= self.steep_cutoff:
            raise ValueError(
                f"launch angle {self.theta0:g} rad exceeds the steep cutoff")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be non-negative")


@dataclass(frozen=True)
class BounceRecord:
    """One boundary hit: location, incident grazing angle and jump matrix."""

    r: float
    z: float
    boundary: str  # SURFACE or BOTTOM
    theta_incident: float
    kappa: KappaMatrix


@dataclass
class TraceResult:
    """Sampled trajectory (columns r, z, p, q11, q12, q21, q22) plus bounces."""

    samples: np.ndarray
    bounces: list[BounceRecord]
    status: TraceStatus

    @property
    def r(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def z(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def p(self) -> np.ndarray:
        return self.samples[:, 2]

    @property
    def q(self) -> np.ndarray:
        """Variation matrices, shape (n_samples, 2, 2)."""
        return self.samples[:, 3:7].reshape(-1, 2, 2)

    @property
    def det_q(self) -> np.ndarray:
        s = self.samples
        return s[:, 3] * s[:, 6] - s[:, 4] * s[:, 5]

    def final_state(self) -> RayState:
        r, z, p, q11, q12, q21, q22 = self.samples[-1]
        return RayState(r=r, z=z, p=p, q=VariationMatrix(q11, q12, q21, q22))


@dataclass(frozen=True)
class SpreadingFactor:
    """Geometric spreading |dz/dp0| (m) at a query range; 0 only at caustics."""

    r: float
    value: float


# ---------------------------------------------------------------------------
# RK4 core
# ---------------------------------------------------------------------------


def _rhs(field_: SoundSpeedField, r: float, y: tuple) -> tuple:
    z, p, q11, q12, q21, q22 = y
    s = field_.index_at(r, z)
    dz, dp = ray_rhs(s, p)
    k = k_matrix(s, p)
    return (
        dz,
        dp,
        k.k11 * q11 + k.k12 * q21,
        k.k11 * q12 + k.k12 * q22,
        k.k21 * q11 + k.k22 * q21,
        k.k21 * q12 + k.k22 * q22,
    )


def _rk4_step(field_: SoundSpeedField, r: float, y: tuple, h: float) -> tuple:
    k1 = _rhs(field_, r, y)
    y2 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k1))
    k2 = _rhs(field_, r + 0.5 * h, y2)
    y3 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k2))
    k3 = _rhs(field_, r + 0.5 * h, y3)
    y4 = tuple(yi + h * ki for yi, ki in zip(y, k3))
    k4 = _rhs(field_, r + h, y4)
    return tuple(
        yi + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
    )


# ---------------------------------------------------------------------------
# Boundary events
# ---------------------------------------------------------------------------


def _gap(bath: Bathymetry, boundary: str, r: float, z: float) -> float:
    # Negative inside the water column, positive past the boundary.
    if boundary == SURFACE:
        return -z
    return z - bath.depth_at(r)


def _bisect_crossing(field_, bath, boundary, r0, y0, lo, hi, tol):
    """Shrink [lo, hi] (step lengths from r0) onto the boundary crossing.

    Treats gap <= 0 as inside, so a step that starts exactly on a boundary
    and initially moves away still converges to the genuine re-crossing.
    """
    y_hit = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        y_mid = _rk4_step(field_, r0, y0, mid)
        g_mid = _gap(bath, boundary, r0 + mid, y_mid[0])
        if abs(g_mid) < tol:
            return mid, y_mid
        if g_mid > 0.0:
            hi = mid
            y_hit = y_mid
        else:
            lo = mid
    if y_hit is None:
        y_hit = _rk4_step(field_, r0, y0, hi)
    return hi, y_hit


def _find_crossing(field_, bath, r0, y0, h, y_end, tol):
    """First boundary crossing within a step, or None.

    Checks the step endpoint for each boundary and, when both endpoints
    are inside, probes the step midpoint to catch shallow double
    crossings.  Returns (step_fraction_length, boundary, state_at_hit).
    """
    hits = []
    y_mid = None
    for boundary in (SURFACE, BOTTOM):
        g0 = _gap(bath, boundary, r0, y0[0])
        g1 = _gap(bath, boundary, r0 + h, y_end[0])
        if g0 <= 0.0 and g1 > 0.0:
            hits.append(_bisect_crossing(field_, bath, boundary, r0, y0, 0.0, h, tol)
                        + (boundary,))
            continue
        if g0 <= 0.0 and g1 <= 0.0:
            if y_mid is None:
                y_mid = _rk4_step(field_, r0, y0, 0.5 * h)
            g_mid = _gap(bath, boundary, r0 + 0.5 * h, y_mid[0])
            if g_mid > 0.0:
                hits.append(_bisect_crossing(field_, bath, boundary, r0, y0,
                                             0.0, 0.5 * h, tol) + (boundary,))
    if not hits:
        return None
    h_hit, y_hit, boundary = min(hits, key=lambda item: item[0])
    return h_hit, boundary, y_hit


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------


def trace_ray(field_: SoundSpeedField, bath: Bathymetry, cfg: TraceConfig) -> TraceResult:
    """Trace one ray launched at grazing angle cfg.theta0 from (r_start, z0).

    The initial pulse is n(r_start, z0) * sin(theta0) and the variation
    matrix starts as the identity.
    """
    n0 = field_.index_at(cfg.r_start, cfg.z0).n
    return trace_from_pulse(field_, bath, cfg, cfg.z0, n0 * math.sin(cfg.theta0))


def trace_from_pulse(field_: SoundSpeedField, bath: Bathymetry, cfg: TraceConfig,
                     z0: float, p0: float) -> TraceResult:
    """Trace from explicit initial (z0, p0); used by the FD oracle."""
    s0 = field_.index_at(cfg.r_start, z0)
    cutoff_sin = math.sin(cfg.steep_cutoff)
    if abs(p0) >= s0.n * cutoff_sin:
        raise ValueError(f"initial pulse {p0:g} exceeds the steep-ray cutoff")
    z_bottom = bath.depth_at(cfg.r_start)
    if not 0.0 <= z0 <= z_bottom:
        raise ValueError(f"source depth {z0:g} outside the water column")
    # Launching exactly on a boundary requires the ray to move into the water.
    if z0 == 0.0 and p0 <= 0.0:
        raise ValueError("source on the free surface must launch downward")
    if z0 == z_bottom:
        tz0 = p0 / s0.n
        t0 = np.array([math.sqrt(max(0.0, 1.0 - tz0 * tz0)), tz0])
        if float(t0 @ bath.bottom_at(cfg.r_start).frame.as_array()) <= 0.0:
            raise ValueError("source on the bottom must launch into the water")

    r = cfg.r_start
    y = (z0, p0, 1.0, 0.0, 0.0, 1.0)
    rows = [(r, *y)]
    bounces: list[BounceRecord] = []
    status = TraceStatus.COMPLETED

    while r < cfg.r_end - 1e-12:
        h = min(cfg.dr, cfg.r_end - r)
        try:
            y_end = _rk4_step(field_, r, y, h)
            hit = _find_crossing(field_, bath, r, y, h, y_end, cfg.bisect_tol)
        except SteepRayError:
            status = TraceStatus.STEEP_RAY
            break
        except DomainError:
            status = TraceStatus.DOMAIN_EXIT
            break

        if hit is None:
            r += h
            y = y_end
            s = field_.index_at(r, y[0])
            if abs(y[1]) >= s.n * cutoff_sin:
                rows.append((r, *y))
                status = TraceStatus.STEEP_RAY
                break
            rows.append((r, *y))
            continue

        h_hit, boundary, y_hit = hit
        r_hit = r + h_hit
        try:
            if boundary == SURFACE:
                frame = surface_frame()
                z_hit = 0.0
            else:
                bottom = bath.bottom_at(r_hit)
                frame = bottom.frame
                z_hit = bottom.z_b
            s = field_.index_at(r_hit, z_hit)
        except DomainError:
            status = TraceStatus.DOMAIN_EXIT
            break

        p_hit = y_hit[1]
        tz = p_hit / s.n
        if abs(tz) >= 1.0:
            rows.append((r_hit, z_hit, *y_hit[1:]))
            status = TraceStatus.STEEP_RAY
            break
        t = np.array([math.sqrt(1.0 - tz * tz), tz])
        t1 = t - 2.0 * float(t @ frame.as_array()) * frame.as_array()
        if t1[0] <= 1e-9:
            rows.append((r_hit, z_hit, *y_hit[1:]))
            status = TraceStatus.BACKSCATTERED
            break
        if len(bounces) >= cfg.max_bounces:
            rows.append((r_hit, z_hit, *y_hit[1:]))
            status = TraceStatus.MAX_BOUNCES
            break

        try:
            ctx = ReflectionContext(t=t, frame=frame, sample=s)
            kappa = kappa_matrix(ctx)
        except SingularReflectionError:
            # Tangential contact: the jump matrix diverges and the
            # range-marching picture ends here.
            rows.append((r_hit, z_hit, *y_hit[1:]))
            status = TraceStatus.BACKSCATTERED
            break
        except GeometryError:
            rows.append((r_hit, z_hit, *y_hit[1:]))
            status = TraceStatus.BACKSCATTERED
            break

        p1 = s.n * float(ctx.t1[1])
        theta_inc = math.atan2(tz, float(t[0]))
        bounces.append(BounceRecord(r=r_hit, z=z_hit, boundary=boundary,
                                    theta_incident=theta_inc, kappa=kappa))

        q11, q12, q21, q22 = y_hit[2:]
        y = (
            z_hit,
            p1,
            kappa.k11 * q11 + kappa.k12 * q21,
            kappa.k11 * q12 + kappa.k12 * q22,
            kappa.k22 * q21,
            kappa.k22 * q22,
        )
        r = r_hit
        rows.append((r, *y))
        if abs(p1) >= s.n * cutoff_sin:
            status = TraceStatus.STEEP_RAY
            break

    return TraceResult(samples=np.array(rows, dtype=float), bounces=bounces,
                       status=status)


def trace_fan(field_: SoundSpeedField, bath: Bathymetry, cfg: TraceConfig,
              angles) -> list[TraceResult]:
    """Trace one independent ray per launch angle (radians)."""
    return [trace_ray(field_, bath, replace(cfg, theta0=float(a))) for a in angles]


def spreading_at(result: TraceResult, r: float) -> SpreadingFactor:
    """Geometric spreading |q21| linearly interpolated at range r."""
    rs = result.r
    if not rs[0] <= r <= rs[-1]:
        raise ValueError(f"query range {r:g} outside the sampled trace "
                         f"[{rs[0]:g}, {rs[-1]:g}]")
    value = float(np.interp(r, rs, np.abs(result.samples[:, 5])))
    return SpreadingFactor(r=r, value=value)
