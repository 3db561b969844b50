"""Metric, complex structures and symplectic forms of S^2 x S^2.

Points and tangent vectors are 6-vectors ``(x, y)`` / ``(u, v)`` in
R^3 x R^3.  The array functions broadcast over leading axes; the small
dataclasses wrap single values for the public API.

J0 at x in S^2 is ``u -> x cross u``, so ``J(e2, 0) = (e3, 0)`` at
``o = (e1, e1)``.  PLUS is J0 + J0, MINUS is J0 + (-J0), and
``omega(X, Y) = g(JX, Y)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import liegroup as lg

ORIGIN = np.concatenate([lg.E1, lg.E1])

_UNIT_TOL = 1e-12
_DEGENERATE_PLANE = 1e-10


class ComplexStructureChoice(enum.IntEnum):
    PLUS = 1
    MINUS = -1


PLUS = ComplexStructureChoice.PLUS
MINUS = ComplexStructureChoice.MINUS


def j_apply(base, vec, sign=PLUS) -> np.ndarray:
    base = np.asarray(base)
    vec = np.asarray(vec)
    return np.concatenate(
        [np.cross(base[..., :3], vec[..., :3]), int(sign) * np.cross(base[..., 3:], vec[..., 3:])],
        axis=-1,
    )


def omega_arr(base, t1, t2, sign=PLUS) -> np.ndarray:
    return np.sum(j_apply(base, t1, sign) * np.asarray(t2), axis=-1)


def project_tangent(base, vec) -> np.ndarray:
    """Orthogonal projection of ambient 6-vectors onto T(S^2 x S^2)."""
    base = np.asarray(base)
    vec = np.asarray(vec)
    x, y = base[..., :3], base[..., 3:]
    u = vec[..., :3] - np.sum(vec[..., :3] * x, axis=-1, keepdims=True) * x
    v = vec[..., 3:] - np.sum(vec[..., 3:] * y, axis=-1, keepdims=True) * y
    return np.concatenate([u, v], axis=-1)


@dataclass(frozen=True)
class SurfacePoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(3)
        y = np.array(self.y, dtype=float).reshape(3)
        if abs(np.linalg.norm(x) - 1) > _UNIT_TOL or abs(np.linalg.norm(y) - 1) > _UNIT_TOL:
            raise ValueError("point is not on S^2 x S^2")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_vector(cls, p) -> "SurfacePoint":
        p = np.asarray(p, dtype=float)
        return cls(p[:3], p[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class Tangent4:
    base: SurfacePoint
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(3)
        v = np.array(self.v, dtype=float).reshape(3)
        scale = max(1.0, np.linalg.norm(u), np.linalg.norm(v))
        if abs(u @ self.base.x) > _UNIT_TOL * scale or abs(v @ self.base.y) > _UNIT_TOL * scale:
            raise ValueError("vector is not tangent at its base point")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_vector(cls, base: SurfacePoint, t) -> "Tangent4":
        t = np.asarray(t, dtype=float)
        return cls(base, t[:3], t[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])


def _same_base(t1: Tangent4, t2: Tangent4):
    if not (np.array_equal(t1.base.x, t2.base.x) and np.array_equal(t1.base.y, t2.base.y)):
        raise ValueError("tangent vectors live at different base points")


def apply_j(t: Tangent4, choice=PLUS) -> Tangent4:
    return Tangent4.from_vector(t.base, j_apply(t.base.as_vector(), t.as_vector(), choice))


def metric(t1: Tangent4, t2: Tangent4) -> float:
    _same_base(t1, t2)
    return float(t1.as_vector() @ t2.as_vector())


def omega(t1: Tangent4, t2: Tangent4, choice=PLUS) -> float:
    _same_base(t1, t2)
    return float(omega_arr(t1.base.as_vector(), t1.as_vector(), t2.as_vector(), choice))


@dataclass(frozen=True)
class TwoPlane:
    """Oriented tangent 2-plane with orthonormal basis (b1, b2)."""

    base: SurfacePoint
    b1: Tangent4
    b2: Tangent4

    def __post_init__(self):
        _same_base(self.b1, self.b2)
        g = np.array([[metric(self.b1, self.b1), metric(self.b1, self.b2)],
                      [metric(self.b2, self.b1), metric(self.b2, self.b2)]])
        if np.abs(g - np.eye(2)).max() > 1e-10:
            raise ValueError("basis is not orthonormal")

    @classmethod
    def from_vectors(cls, base, a, b) -> "TwoPlane":
        """Gram-Schmidt two tangent vectors at ``base`` (a SurfacePoint or 6-vector)."""
        if not isinstance(base, SurfacePoint):
            base = SurfacePoint.from_vector(base)
        p = base.as_vector()
        a = project_tangent(p, np.asarray(a, dtype=float))
        b = project_tangent(p, np.asarray(b, dtype=float))
        na = np.linalg.norm(a)
        if na < _DEGENERATE_PLANE:
            raise ValueError("degenerate plane")
        a = a / na
        b = b - (b @ a) * a
        nb = np.linalg.norm(b)
        if nb < _DEGENERATE_PLANE:
            raise ValueError("degenerate plane")
        return cls(base, Tangent4.from_vector(base, a), Tangent4.from_vector(base, b / nb))

    def vectors(self) -> np.ndarray:
        return np.array([self.b1.as_vector(), self.b2.as_vector()])


@dataclass(frozen=True)
class AnglePair:
    """Kahler angles (theta1 + theta2, theta1 - theta2), a point of the domain C."""

    sum: float
    diff: float


def kahler_angles_arr(base, b1, b2, oriented=False) -> tuple[np.ndarray, np.ndarray]:
    wp = omega_arr(base, b1, b2, PLUS)
    wm = omega_arr(base, b1, b2, MINUS)
    if not oriented:
        wp, wm = np.abs(wp), np.abs(wm)
    return np.arccos(np.clip(wm, -1, 1)), np.arccos(np.clip(wp, -1, 1))


def kahler_angles(p: TwoPlane, oriented: bool = False) -> AnglePair:
    """Kahler angles of a plane.

    By default the orientation is quotiented out (absolute pairings), so both
    angles land in [0, pi/2].  With ``oriented=True`` the signed pairings of
    the ordered basis are used and the result ranges over all of [0, pi]^2.
    """
    s, d = kahler_angles_arr(p.base.as_vector(), p.b1.as_vector(), p.b2.as_vector(), oriented)
    return AnglePair(float(s), float(d))


def is_lagrangian_plane(p: TwoPlane, choice=PLUS, tol: float = 1e-10) -> bool:
    return abs(omega(p.b1, p.b2, choice)) <= tol


def plane_from_angles(theta1: float, theta2: float) -> TwoPlane:
    """``Exp X . V_o``: span{cos t1 (e2,0) + sin t1 (0,e2), cos t2 (e3,0) + sin t2 (0,e3)} at o."""
    e2, e3 = lg.E2, lg.E3
    b1 = np.concatenate([np.cos(theta1) * e2, np.sin(theta1) * e2])
    b2 = np.concatenate([np.cos(theta2) * e3, np.sin(theta2) * e3])
    return TwoPlane.from_vectors(ORIGIN, b1, b2)


def m_theta_plane(theta: float) -> TwoPlane:
    """The Lagrangian plane m_theta (theta1 = theta, theta2 = theta - pi/2)."""
    return plane_from_angles(theta, theta - np.pi / 2)


def rotation_to_origin(point) -> lg.ProductGroupElement:
    """Some g in G with ``g . point = o``."""
    p = point.as_vector() if isinstance(point, SurfacePoint) else np.asarray(point, dtype=float)
    return lg.ProductGroupElement.from_matrices(lg.rotation_taking(p[:3]), lg.rotation_taking(p[3:]))


def plane_at_origin(p: TwoPlane) -> TwoPlane:
    g = rotation_to_origin(p.base)
    return TwoPlane.from_vectors(ORIGIN, g.act(p.b1.as_vector()), g.act(p.b2.as_vector()))


def psi2_h_rank(p: TwoPlane, tol: float = 1e-9) -> int:
    """dim Im(Psi_2|h) for the plane moved to the origin, from the bracket directly."""
    q = plane_at_origin(p)
    basis = [lg.tangent_to_algebra(v) for v in q.vectors()]
    s = np.linalg.svd(lg.psi2_h_matrix(basis), compute_uv=False)
    return int(np.sum(s > tol))


def scan_fundamental_domain(resolution: int) -> list[tuple[float, float, int]]:
    """Rows (sum, diff, dim Im Psi_2|h) over a resolution x resolution grid of C."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    grid = np.linspace(0.0, np.pi, resolution)
    rows = []
    for s in grid:
        for d in grid:
            plane = plane_from_angles(0.5 * (s + d), 0.5 * (s - d))
            rows.append((float(s), float(d), psi2_h_rank(plane)))
    return rows
