"""Closed surfaces in S^2 x S^2: built-ins, parametric charts, frames and global invariants.

A surface is described by charts ``(s, t) -> (x, y)``.  Tori use one
2*pi-periodic chart.  Sphere-type surfaces are maps ``p -> (x, y)`` of the
unit sphere, read through two latitude/longitude charts whose poles sit at
+-e3 (chart 0) and +-e1 (chart 1); each chart is only trusted on
``|lat| <= SEARCH_LAT`` and together they cover the sphere.

Coordinate maps only use complex-analytic numpy operations, so chart
derivatives are taken by complex step and are exact to rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import liegroup as lg
from .expr import compile_expression

SEARCH_LAT = 1.3
ACCEPT_LAT = 1.35
_STEP = 1e-20
_RANK_TOL = 1e-10

SB_Z2 = {
    "sphere": 2,
    "torus": 4,
    "real projective plane": 3,
    "rp2": 3,
    "klein bottle": 4,
}


class ImmersionError(ValueError):
    """Chart Jacobian is rank deficient."""


class AtlasError(ValueError):
    """Charts do not close up or disagree on overlaps."""


class DegreeError(ValueError):
    """Projection degree is not close to an integer."""


def _normalize_factors(c):
    x, y = c[..., :3], c[..., 3:]
    x = x / np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    y = y / np.sqrt(np.sum(y * y, axis=-1, keepdims=True))
    return np.concatenate([x, y], axis=-1)


def sphere_chart(s, t, chart):
    """Unit vector of the domain sphere for longitude s, latitude t."""
    cl = np.cos(t)
    if chart == 0:
        return np.stack([cl * np.cos(s), cl * np.sin(s), np.sin(t)], axis=-1)
    return np.stack([np.sin(t), cl * np.cos(s), cl * np.sin(s)], axis=-1)


def sphere_params(p):
    """Chart-0 parameters of unit vectors p."""
    p = np.asarray(p, dtype=float)
    return np.stack([np.arctan2(p[..., 1], p[..., 0]) % (2 * np.pi),
                     np.arcsin(np.clip(p[..., 2], -1, 1))], axis=-1)


class TorusDomain:
    """[0, 2*pi)^2 with one periodic chart."""

    topology = "torus"
    n_charts = 1

    def chart_box(self, chart=0):
        """((s0, s1), (t0, t1)) search box and per-axis periodicity."""
        return ((0.0, 2 * np.pi), (0.0, 2 * np.pi)), (True, True)

    def in_chart(self, params, chart=0):
        return np.ones(np.asarray(params).shape[:-1], dtype=bool)

    def wrap(self, params, chart=0):
        return np.mod(params, 2 * np.pi)

    def domain_point(self, params, chart=0):
        """A chart-independent point of the abstract surface (for deduplication)."""
        params = np.asarray(params, dtype=float)
        return np.stack([np.cos(params[..., 0]), np.sin(params[..., 0]),
                         np.cos(params[..., 1]), np.sin(params[..., 1])], axis=-1)

    def sample_params(self, n, rng):
        return rng.uniform(0.0, 2 * np.pi, size=(n, 2))

    def quadrature(self, n):
        """Chart-0 nodes and weights integrating over the whole domain."""
        g = np.arange(n) * (2 * np.pi / n)
        s, t = np.meshgrid(g, g, indexing="ij")
        w = np.full(n * n, (2 * np.pi / n) ** 2)
        return np.stack([s.ravel(), t.ravel()], axis=-1), w

    def grid(self, resolution, chart=0):
        (s0, s1), (t0, t1) = self.chart_box(chart)[0]
        per = self.chart_box(chart)[1]
        s = np.linspace(s0, s1, resolution, endpoint=not per[0])
        t = np.linspace(t0, t1, resolution, endpoint=not per[1])
        ss, tt = np.meshgrid(s, t, indexing="ij")
        return np.stack([ss, tt], axis=-1)


class SphereDomain(TorusDomain):
    """Unit sphere with latitude/longitude charts (poles at +-e3, then +-e1)."""

    topology = "sphere"
    n_charts = 2

    def chart_box(self, chart=0):
        return ((0.0, 2 * np.pi), (-SEARCH_LAT, SEARCH_LAT)), (True, False)

    def in_chart(self, params, chart=0):
        return np.abs(np.asarray(params)[..., 1]) <= ACCEPT_LAT

    def wrap(self, params, chart=0):
        params = np.array(params, dtype=float)
        params[..., 0] = np.mod(params[..., 0], 2 * np.pi)
        return params

    def domain_point(self, params, chart=0):
        params = np.asarray(params, dtype=float)
        return sphere_chart(params[..., 0], params[..., 1], chart)

    def sample_params(self, n, rng):
        return np.stack([rng.uniform(0, 2 * np.pi, n), np.arcsin(rng.uniform(-1, 1, n))], axis=-1)

    def quadrature(self, n):
        lat, wl = np.polynomial.legendre.leggauss(n)
        lat = lat * (np.pi / 2)
        wl = wl * (np.pi / 2)
        lon = np.arange(n) * (2 * np.pi / n)
        s, t = np.meshgrid(lon, lat, indexing="ij")
        w = np.outer(np.full(n, 2 * np.pi / n), wl)
        return np.stack([s.ravel(), t.ravel()], axis=-1), w.ravel()


TORUS = TorusDomain()
SPHERE = SphereDomain()


class LagrangianSurface:
    """Base class for closed surfaces; Lagrangian-ness is checked, not assumed."""

    domain = TORUS

    def _coords(self, s, t, chart):
        raise NotImplementedError

    @property
    def topology(self):
        return self.domain.topology

    @property
    def n_charts(self):
        return self.domain.n_charts

    def describe(self) -> str:
        return type(self).__name__

    # -- evaluation ---------------------------------------------------------
    def points(self, params, chart=0) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        return _normalize_factors(self._coords(params[..., 0], params[..., 1], chart)).real

    def jacobian(self, params, chart=0) -> np.ndarray:
        """Chart derivatives, shape (..., 6, 2)."""
        params = np.asarray(params, dtype=float)
        s, t = params[..., 0], params[..., 1]
        ds = _normalize_factors(self._coords(s + 1j * _STEP, t, chart)).imag / _STEP
        dt = _normalize_factors(self._coords(s, t + 1j * _STEP, chart)).imag / _STEP
        return np.stack([ds, dt], axis=-1)

    def tangent_frame(self, params, chart=0) -> tuple[np.ndarray, np.ndarray]:
        base = self.points(params, chart)
        jac = self.jacobian(params, chart)
        a = geo.project_tangent(base, jac[..., 0])
        b = geo.project_tangent(base, jac[..., 1])
        na = np.linalg.norm(a, axis=-1, keepdims=True)
        nb = np.linalg.norm(b, axis=-1, keepdims=True)
        scale = np.maximum(na, nb)
        if np.any(scale <= 0):
            raise ImmersionError("chart Jacobian vanishes")
        b1 = a / np.where(na > 0, na, 1.0)
        b2 = b - np.sum(b * b1, axis=-1, keepdims=True) * b1
        n2 = np.linalg.norm(b2, axis=-1, keepdims=True)
        if np.any(na < _RANK_TOL * scale) or np.any(n2 < _RANK_TOL * scale):
            raise ImmersionError("chart Jacobian has rank < 2")
        return b1, b2 / n2

    def normal_frame(self, params, chart=0) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal normal frame; equals J(tangent frame) for Lagrangian planes."""
        base = self.points(params, chart)
        b1, b2 = self.tangent_frame(params, chart)
        n1 = geo.j_apply(base, b1)
        n2 = geo.j_apply(base, b2)
        for b in (b1, b2):
            n1 = n1 - np.sum(n1 * b, axis=-1, keepdims=True) * b
            n2 = n2 - np.sum(n2 * b, axis=-1, keepdims=True) * b
        l1 = np.linalg.norm(n1, axis=-1, keepdims=True)
        n1 = n1 / np.where(l1 > 0, l1, 1.0)
        n2 = n2 - np.sum(n2 * n1, axis=-1, keepdims=True) * n1
        l2 = np.linalg.norm(n2, axis=-1, keepdims=True)
        n2 = n2 / np.where(l2 > 0, l2, 1.0)
        bad = ((l1 < 1e-6) | (l2 < 1e-6))[..., 0]
        if np.any(bad):
            # near-complex planes: take any orthonormal complement
            x = np.zeros(base.shape[:-1] + (6, 4))
            x[..., :3, 0] = base[..., :3]
            x[..., 3:, 1] = base[..., 3:]
            x[..., :, 2] = b1
            x[..., :, 3] = b2
            q, _ = np.linalg.qr(x, mode="complete")
            n1 = np.where(bad[..., None], q[..., :, 4], n1)
            n2 = np.where(bad[..., None], q[..., :, 5], n2)
        return n1, n2

    # -- derived surfaces -----------------------------------------------------
    def transformed(self, g: lg.ProductGroupElement) -> "LagrangianSurface":
        return TransformedSurface(self, g)

    def reversed(self) -> "LagrangianSurface":
        return ReversedSurface(self)

    def check_atlas(self, resolution=16, tol=1e-8):
        """Immersion on every chart grid, plus closure (periodicity or chart overlap)."""
        dom = self.domain
        for c in range(dom.n_charts):
            self.tangent_frame(dom.grid(resolution, c).reshape(-1, 2), c)
        rng = np.random.default_rng(12345)
        if dom.topology == "torus":
            t = rng.uniform(0, 2 * np.pi, resolution)
            for which in (0, 1):
                lo = np.zeros((resolution, 2))
                lo[:, 1 - which] = t
                hi = lo.copy()
                hi[:, which] = 2 * np.pi
                if np.abs(self.points(lo) - self.points(hi)).max() > tol:
                    raise AtlasError("torus chart is not 2*pi-periodic")
            return
        p = rng.standard_normal((4 * resolution, 3))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        p = p[(np.abs(p[:, 2]) < 0.9) & (np.abs(p[:, 0]) < 0.9)]
        q0 = sphere_params(p)
        q1 = np.stack([np.arctan2(p[:, 2], p[:, 1]) % (2 * np.pi), np.arcsin(p[:, 0])], axis=-1)
        if np.abs(self.points(q0, 0) - self.points(q1, 1)).max() > tol:
            raise AtlasError("sphere charts disagree on their overlap")
        a0, b0 = self.tangent_frame(q0, 0)
        a1, b1 = self.tangent_frame(q1, 1)
        for v in (a1, b1):
            resid = v - np.sum(v * a0, axis=-1, keepdims=True) * a0 - np.sum(v * b0, axis=-1, keepdims=True) * b0
            if np.abs(resid).max() > 1e-6:
                raise AtlasError("sphere charts give different tangent planes")


class AntiDiagonalSphere(LagrangianSurface):
    """M0 = {(x, -x)}."""

    domain = SPHERE

    def _coords(self, s, t, chart):
        p = sphere_chart(s, t, chart)
        return np.concatenate([p, -p], axis=-1)

    def describe(self):
        return "m0"


class LatitudeTorus(LagrangianSurface):
    """T_{a,b} = {x1 = a, y1 = b}, heights a, b in [0, 1)."""

    def __init__(self, a: float, b: float):
        if not (0.0 <= a < 1.0 and 0.0 <= b < 1.0):
            raise ValueError("torus heights must lie in [0, 1)")
        self.a = float(a)
        self.b = float(b)

    def _coords(self, s, t, chart):
        ra = np.sqrt(1 - self.a ** 2)
        rb = np.sqrt(1 - self.b ** 2)
        one = np.ones_like(s)
        return np.stack([self.a * one, ra * np.cos(s), ra * np.sin(s),
                         self.b * one, rb * np.cos(t), rb * np.sin(t)], axis=-1)

    def describe(self):
        return f"torus:{self.a:g},{self.b:g}"


class TransformedSurface(LagrangianSurface):
    """g . L for g in G, sharing L's charts."""

    def __init__(self, base: LagrangianSurface, g: lg.ProductGroupElement):
        self.base = base
        self.g = g
        self.domain = base.domain

    def _coords(self, s, t, chart):
        return self.g.act(self.base._coords(s, t, chart))

    def describe(self):
        return f"g.{self.base.describe()}"


class ReversedSurface(LagrangianSurface):
    """Same image, opposite orientation: (s, t) -> (s, -t)."""

    def __init__(self, base: LagrangianSurface):
        self.base = base
        self.domain = base.domain

    def _coords(self, s, t, chart):
        return self.base._coords(s, -t, chart)

    def describe(self):
        return f"-{self.base.describe()}"


class ParametricSurface(LagrangianSurface):
    """Surface given by six coordinate expressions.

    Tori use variables ``s, t`` on [0, 2*pi)^2; spheres use ``p1, p2, p3``
    (a unit vector of the domain sphere).  Each factor is normalised onto the
    unit sphere after evaluation.
    """

    def __init__(self, topology, x, y, constants=None, name="param"):
        if topology not in ("torus", "sphere"):
            raise ValueError(f"unknown topology {topology!r}")
        if len(x) != 3 or len(y) != 3:
            raise ValueError("x and y need three expressions each")
        self.domain = TORUS if topology == "torus" else SPHERE
        self.name = name
        self.source = {"topology": topology, "x": list(x), "y": list(y), "constants": dict(constants or {})}
        variables = ("s", "t") if topology == "torus" else ("p1", "p2", "p3")
        self._fns = [compile_expression(e, variables, constants) for e in list(x) + list(y)]

    def _eval(self, env, shape):
        return np.stack([np.broadcast_to(f(env), shape) for f in self._fns], axis=-1)

    def _coords(self, s, t, chart):
        if self.topology == "torus":
            s, t = np.broadcast_arrays(s, t)
            return self._eval({"s": s, "t": t}, s.shape)
        p = sphere_chart(s, t, chart)
        return self._eval({"p1": p[..., 0], "p2": p[..., 1], "p3": p[..., 2]}, p.shape[:-1])

    def describe(self):
        return self.name

    @classmethod
    def from_dict(cls, data, name="param", validate=True) -> "ParametricSurface":
        surf = cls(data["topology"], data["x"], data["y"], data.get("constants"), name=name)
        if validate:
            surf.check_atlas()
        return surf

    @classmethod
    def from_json(cls, path, validate=True) -> "ParametricSurface":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), name=f"param:{path}", validate=validate)


def parse_surface(spec: str) -> LagrangianSurface:
    """``m0``, ``torus:a,b`` or ``param:path.json``."""
    spec = spec.strip()
    if spec == "m0":
        return AntiDiagonalSphere()
    if spec.startswith("torus:"):
        try:
            a, b = (float(v) for v in spec[len("torus:"):].split(","))
        except ValueError:
            raise ValueError(f"bad torus spec {spec!r}, expected torus:a,b") from None
        return LatitudeTorus(a, b)
    if spec.startswith("param:"):
        return ParametricSurface.from_json(spec[len("param:"):])
    raise ValueError(f"unknown surface spec {spec!r}")


# -- scalar API ----------------------------------------------------------------

def point_at(L: LagrangianSurface, params, chart=0) -> geo.SurfacePoint:
    params = np.asarray(params, dtype=float)
    if not L.domain.in_chart(params, chart):
        raise ValueError("parameters outside the chart domain")
    return geo.SurfacePoint.from_vector(L.points(params, chart))


def tangent_frame(L, params, chart=0) -> tuple[geo.Tangent4, geo.Tangent4]:
    p = point_at(L, params, chart)
    b1, b2 = L.tangent_frame(np.asarray(params, dtype=float), chart)
    return geo.Tangent4.from_vector(p, b1), geo.Tangent4.from_vector(p, b2)


def normal_frame(L, params, chart=0) -> tuple[geo.Tangent4, geo.Tangent4]:
    p = point_at(L, params, chart)
    n1, n2 = L.normal_frame(np.asarray(params, dtype=float), chart)
    return geo.Tangent4.from_vector(p, n1), geo.Tangent4.from_vector(p, n2)


def tangent_plane(L, params, chart=0) -> geo.TwoPlane:
    t1, t2 = tangent_frame(L, params, chart)
    return geo.TwoPlane(t1.base, t1, t2)


@dataclass
class SurfaceMesh:
    """Frames sampled on every chart's search grid (arrays stacked over samples)."""

    params: np.ndarray
    charts: np.ndarray
    points: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray


def build_mesh(L: LagrangianSurface, resolution: int) -> SurfaceMesh:
    parts = []
    for c in range(L.n_charts):
        q = L.domain.grid(resolution, c).reshape(-1, 2)
        b1, b2 = L.tangent_frame(q, c)
        n1, n2 = L.normal_frame(q, c)
        parts.append((q, np.full(len(q), c), L.points(q, c), np.stack([b1, b2], 1), np.stack([n1, n2], 1)))
    return SurfaceMesh(*(np.concatenate(cols) for cols in zip(*parts)))


def max_lagrangian_defect(L: LagrangianSurface, n_samples=256, seed=0, sign=geo.PLUS) -> float:
    q = L.domain.sample_params(n_samples, np.random.default_rng(seed))
    b1, b2 = L.tangent_frame(q)
    return float(np.abs(geo.omega_arr(L.points(q), b1, b2, sign)).max())


def check_lagrangian(L: LagrangianSurface, n_samples=256, tol=1e-9, seed=0) -> bool:
    return max_lagrangian_defect(L, n_samples, seed) <= tol


@dataclass(frozen=True)
class HomologyClass:
    """iota_*[L] = m S + n T."""

    m: int
    n: int


def projection_degrees(L: LagrangianSurface, quadrature_n=64) -> tuple[float, float]:
    """Signed-area integrals of both factor projections divided by 4*pi."""
    q, w = L.domain.quadrature(quadrature_n)
    p = L.points(q)
    jac = L.jacobian(q)
    degs = []
    for sl in (slice(0, 3), slice(3, 6)):
        vol = np.linalg.det(np.stack([p[:, sl], jac[:, sl, 0], jac[:, sl, 1]], axis=-1))
        degs.append(float(np.sum(w * vol) / (4 * np.pi)))
    return degs[0], degs[1]


def homology_class(L: LagrangianSurface, quadrature_n=64) -> HomologyClass:
    dm, dn = projection_degrees(L, quadrature_n)
    m, n = round(dm), round(dn)
    if abs(dm - m) >= 0.1 or abs(dn - n) >= 0.1:
        raise DegreeError(f"non-integral projection degrees ({dm:.4f}, {dn:.4f})")
    return HomologyClass(int(m), int(n))


@dataclass(frozen=True)
class EulerParity:
    self_intersection: int
    parity: str


def euler_parity_check(L: LagrangianSurface, quadrature_n=64) -> EulerParity:
    """Self-intersection 2mn of the class and its parity (a chi(L) mod 2 witness)."""
    h = homology_class(L, quadrature_n)
    si = 2 * h.m * h.n
    return EulerParity(si, "even" if si % 2 == 0 else "odd")


def sb_z2(topology: str) -> int:
    """Sum of Z2-Betti numbers."""
    try:
        return SB_Z2[topology.lower()]
    except KeyError:
        raise ValueError(f"unknown topology {topology!r}") from None


def surface_volume(L: LagrangianSurface, quadrature_n=64) -> float:
    q, w = L.domain.quadrature(quadrature_n)
    jac = L.jacobian(q)
    gram = np.einsum("nki,nkj->nij", jac, jac)
    return float(np.sum(w * np.sqrt(np.clip(np.linalg.det(gram), 0, None))))
