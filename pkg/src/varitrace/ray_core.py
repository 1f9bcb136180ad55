"""Range-parametrized Hamiltonian ray calculus.

The ray Hamiltonian is H(z, p; r) = -sqrt(n(r, z)^2 - p^2) where the pulse
p = n sin(theta) is conjugate to depth and theta is the grazing angle.
Rays obey dz/dr = dH/dp, dp/dr = -dH/dz; the 2x2 variation matrix
q = d(p, z)/d(p0, z0) obeys dq/dr = K q with K built from the second
derivatives of H.  The closed forms below are validated against finite
differences of ``hamiltonian`` and ``ray_rhs`` in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import IndexSample
from .errors import SteepRayError

__all__ = [
    "RayState",
    "VariationMatrix",
    "KMatrix",
    "hamiltonian",
    "ray_rhs",
    "k_matrix",
]


@dataclass(frozen=True)
class VariationMatrix:
    """Jacobian of the ray flow map (p0, z0) -> (p, z).

    q11 = dp/dp0, q12 = dp/dz0 (1/m), q21 = dz/dp0 (m), q22 = dz/dz0.
    Starts as the identity and keeps det q = 1 along smooth arcs and
    through reflections.
    """

    q11: float = 1.0
    q12: float = 0.0
    q21: float = 0.0
    q22: float = 1.0

    @classmethod
    def identity(cls) -> "VariationMatrix":
        return cls()

    @classmethod
    def from_array(cls, m) -> "VariationMatrix":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.q11, self.q12], [self.q21, self.q22]])

    def det(self) -> float:
        return self.q11 * self.q22 - self.q12 * self.q21


@dataclass(frozen=True)
class RayState:
    """Ray position, pulse and variation matrix at range r."""

    r: float
    z: float
    p: float
    q: VariationMatrix = field(default_factory=VariationMatrix.identity)

    def grazing_angle(self, n: float) -> float:
        """Grazing angle theta = arcsin(p / n) in radians."""
        return math.asin(self.p / n)


@dataclass(frozen=True)
class KMatrix:
    """Coefficient matrix of the variation equation dq/dr = K q.

    Arrangement: k11 = -H_zp, k12 = -H_zz, k21 = H_pp, k22 = H_zp, so the
    trace is zero by construction and k21 > 0 for any non-vertical ray.
    """

    k11: float
    k12: float
    k21: float
    k22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.k11, self.k12], [self.k21, self.k22]])


def _w(n: float, p: float) -> float:
    # w = sqrt(n^2 - p^2) = n cos(theta); the vertical-ray singularity.
    w2 = n * n - p * p
    if w2 <= 0.0:
        raise SteepRayError(f"|p| = {abs(p):g} >= n = {n:g}; ray turned vertical")
    return math.sqrt(w2)


def hamiltonian(n: float, p: float) -> float:
    """H = -sqrt(n^2 - p^2) = -n cos(theta); always negative."""
    return -_w(n, p)


def ray_rhs(sample: IndexSample, p: float) -> tuple[float, float]:
    """Right-hand side (dz/dr, dp/dr) of the ray equations.

    dz/dr = p / w and dp/dr = n n_z / w with w = sqrt(n^2 - p^2).
    """
    w = _w(sample.n, p)
    return p / w, sample.n * sample.n_z / w


def k_matrix(sample: IndexSample, p: float) -> KMatrix:
    """Second-derivative matrix K of the variation equation at one point."""
    n, n_z, n_zz = sample.n, sample.n_z, sample.n_zz
    w = _w(n, p)
    w3 = w * w * w
    k11 = p * n * n_z / w3
    k12 = (n_z * n_z + n * n_zz) / w - (n * n_z) ** 2 / w3
    k21 = n * n / w3
    return KMatrix(k11=k11, k12=k12, k21=k21, k22=-k11)
