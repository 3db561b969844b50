"""Killing fields, moment maps, normal sections and Killing nullity.

A Killing field of S^2 x S^2 is an element Z = (hat(a), hat(b)) of
so(3) + so(3) acting by ``(x, y) -> (a x x, b x y)``.  Its normal part along
a surface is expressed in the surface's orthonormal normal frame, so the
section W^{NL} becomes a map from chart parameters to R^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import liegroup as lg
from .surfaces import LagrangianSurface, _normalize_factors

log = logging.getLogger(__name__)

NULLITY_TOLS = (1e-7, 1e-8, 1e-9)


class RankInstabilityError(RuntimeError):
    """Numerical rank changes across the tolerance decades."""

    def __init__(self, ranks, singular_values):
        super().__init__(f"Killing nullity unstable across tolerances: {ranks}")
        self.ranks = ranks
        self.singular_values = singular_values


class MorseMismatchError(RuntimeError):
    """Critical-point count and zero count of W^{NL} disagree."""


class MomentMapError(RuntimeError):
    pass


@dataclass(frozen=True)
class KillingField:
    generator: lg.ProductAlgebraElement

    @classmethod
    def from_vector(cls, w) -> "KillingField":
        return cls(lg.ProductAlgebraElement.from_vector(w))

    @property
    def axes(self) -> np.ndarray:
        return self.generator.as_vector()


def _as_field(z) -> KillingField:
    if isinstance(z, KillingField):
        return z
    if isinstance(z, lg.ProductAlgebraElement):
        return KillingField(z)
    return KillingField.from_vector(z)


def killing_vectors(z, points) -> np.ndarray:
    """Killing field values at stacked points (..., 6)."""
    w = _as_field(z).axes
    points = np.asarray(points)
    return np.concatenate([np.cross(w[:3], points[..., :3]), np.cross(w[3:], points[..., 3:])], axis=-1)


def killing_at(z, p: geo.SurfacePoint) -> geo.Tangent4:
    return geo.Tangent4.from_vector(p, killing_vectors(z, p.as_vector()))


def basis_fields():
    return [KillingField.from_vector(e) for e in np.eye(6)]


# -- moment maps ---------------------------------------------------------------

def _moment_raw(w, points):
    points = np.asarray(points)
    return points[..., :3] @ w[:3] + points[..., 3:] @ w[3:]


def moment_residual(z, points, tangents, sign=1.0, eps=1e-5) -> np.ndarray:
    """|df(X) - omega(xi, X)| by central differences along p + eps X (renormalised)."""
    w = _as_field(z).axes
    points = np.asarray(points, dtype=float)
    tangents = geo.project_tangent(points, np.asarray(tangents, dtype=float))
    fp = sign * _moment_raw(w, _normalize_factors(points + eps * tangents))
    fm = sign * _moment_raw(w, _normalize_factors(points - eps * tangents))
    df = (fp - fm) / (2 * eps)
    return np.abs(df - geo.omega_arr(points, killing_vectors(w, points), tangents))


def _random_points(rng, n):
    p = rng.standard_normal((n, 6))
    return _normalize_factors(p)


class MomentMap:
    """f_xi with df_xi = omega(xi, .); the overall sign is fixed by finite differences."""

    def __init__(self, z, n_check=10, tol=1e-6, seed=0):
        self.field = _as_field(z)
        rng = np.random.default_rng(seed)
        pts = _random_points(rng, n_check)
        tans = rng.standard_normal((n_check, 6))
        for sign in (1.0, -1.0):
            if moment_residual(self.field, pts, tans, sign).max() <= tol:
                self.sign = sign
                break
        else:
            raise MomentMapError("no sign makes df = omega(xi, .) hold")

    @property
    def axes(self):
        return self.field.axes

    def __call__(self, points) -> np.ndarray:
        return self.sign * _moment_raw(self.axes, points)


def moment_map_value(z, p: geo.SurfacePoint) -> float:
    return float(MomentMap(z)(p.as_vector()))


# -- normal sections -----------------------------------------------------------

def normal_component(z, L: LagrangianSurface, params, chart=0) -> np.ndarray:
    """Coefficients of W^{NL} in the normal frame, shape (..., 2)."""
    params = np.asarray(params, dtype=float)
    k = killing_vectors(z, L.points(params, chart))
    n1, n2 = L.normal_frame(params, chart)
    return np.stack([np.sum(k * n1, axis=-1), np.sum(k * n2, axis=-1)], axis=-1)


@dataclass(frozen=True)
class NormalSection:
    field: KillingField
    surface: LagrangianSurface

    def __call__(self, params, chart=0):
        return normal_component(self.field, self.surface, params, chart)


def moment_gradient(z, L: LagrangianSurface, params, chart=0) -> np.ndarray:
    """Chart gradient of the moment map restricted to L."""
    mm = z if isinstance(z, MomentMap) else MomentMap(z)
    jac = L.jacobian(np.asarray(params, dtype=float), chart)
    return mm.sign * np.einsum("k,...ki->...i", mm.axes, jac)


@dataclass
class ZeroReport:
    zeros: list = field(default_factory=list)  # (chart, params, nondegenerate)
    count: int = 0
    degenerate: bool = False
    failures: int = 0

    @property
    def all_nondegenerate(self) -> bool:
        return not self.degenerate and all(z[2] for z in self.zeros)


def _fd_jacobian(fun, x, chart, h=1e-6):
    cols = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        cols.append((fun(x + e, chart) - fun(x - e, chart)) / (2 * h))
    return np.stack(cols, axis=-1)


def _newton(fun, x, chart, dom, iters=60, max_step=0.5):
    x = np.array(x, dtype=float)
    f = fun(x, chart)
    r = np.linalg.norm(f, axis=-1)
    active = np.ones(len(x), dtype=bool)
    for _ in range(iters):
        active &= r > 1e-14
        if not active.any():
            break
        xa = x[active]
        jac = _fd_jacobian(fun, xa, chart)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac), f[active])
        sl = np.linalg.norm(step, axis=-1, keepdims=True)
        step = step * np.minimum(1.0, max_step / np.maximum(sl, 1e-300))
        alpha = np.ones((len(xa), 1))
        improved = np.zeros(len(xa), dtype=bool)
        xn, fn, rn = xa.copy(), f[active].copy(), r[active].copy()
        for _ in range(12):
            todo = ~improved
            if not todo.any():
                break
            trial = dom.wrap(xa[todo] + alpha[todo] * step[todo], chart)
            ft = fun(trial, chart)
            rt = np.linalg.norm(ft, axis=-1)
            ok = rt < r[active][todo]
            idx = np.flatnonzero(todo)
            xn[idx[ok]], fn[idx[ok]], rn[idx[ok]] = trial[ok], ft[ok], rt[ok]
            improved[idx[ok]] = True
            alpha[todo] *= 0.5
        ia = np.flatnonzero(active)
        x[ia], f[ia], r[ia] = xn, fn, rn
        active[ia[~improved]] = False
    return x, r


def _seeds(grid, values, periodic):
    """Centres of grid cells where both components change sign, plus local minima of |F|."""
    ns, nt = grid.shape[:2]
    ds = grid[1, 0, 0] - grid[0, 0, 0]
    dt = grid[0, 1, 1] - grid[0, 0, 1]
    i = np.arange(ns if periodic[0] else ns - 1)
    j = np.arange(nt if periodic[1] else nt - 1)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    i1 = (ii + 1) % ns
    j1 = (jj + 1) % nt
    corners = np.stack([values[ii, jj], values[i1, jj], values[ii, j1], values[i1, j1]])
    change = np.all((corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0), axis=-1)
    centres = grid[ii, jj] + 0.5 * np.array([ds, dt])
    seeds = [centres[change]]

    mag = np.linalg.norm(values, axis=-1)
    pad = np.pad(mag, ((1, 1), (0, 0)), mode="wrap" if periodic[0] else "edge")
    pad = np.pad(pad, ((0, 0), (1, 1)), mode="wrap" if periodic[1] else "edge")
    neigh = np.stack([pad[1 + a:1 + a + ns, 1 + b:1 + b + nt]
                      for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)])
    minima = (mag <= neigh.min(axis=0)) & (mag < 0.2 * mag.max())
    seeds.append(grid[minima])
    return np.concatenate(seeds)


def _zero_search(fun, L: LagrangianSurface, resolution, tol, dedup=1e-4):
    dom = L.domain
    grids = [dom.grid(resolution, c) for c in range(dom.n_charts)]
    values = [fun(g.reshape(-1, 2), c).reshape(g.shape[:2] + (2,)) for c, g in enumerate(grids)]
    peak = max(np.abs(v).max() for v in values)
    if peak < 1e-12:
        return ZeroReport(degenerate=True)

    found, failures = [], 0
    for c, (g, v) in enumerate(zip(grids, values)):
        seeds = _seeds(g, v, dom.chart_box(c)[1])
        if len(seeds) == 0:
            continue
        x, r = _newton(fun, seeds, c, dom)
        ok = (r <= tol) & dom.in_chart(x, c)
        failures += int(np.sum(~ok & (r > tol)))
        for xi in x[ok]:
            det = np.linalg.det(_fd_jacobian(fun, xi[None], c)[0])
            found.append((c, xi, abs(det) > 1e-8, dom.domain_point(xi, c)))

    zeros, pts = [], []
    for c, xi, nondeg, dp in found:
        if any(np.linalg.norm(dp - q) < dedup for q in pts):
            continue
        pts.append(dp)
        zeros.append((c, xi, nondeg))
    degenerate = not all(z[2] for z in zeros)
    return ZeroReport(zeros=zeros, count=len(zeros), degenerate=degenerate, failures=failures)


def find_zeros(z, L: LagrangianSurface, mesh_resolution=128, tol=1e-9) -> ZeroReport:
    """Zeros of the normal section W^{NL}: mesh scan, Newton refinement, deduplication."""
    section = NormalSection(_as_field(z), L)
    return _zero_search(section, L, mesh_resolution, tol)


def find_critical_points(z, L: LagrangianSurface, mesh_resolution=128, tol=1e-9) -> ZeroReport:
    """Critical points of the moment map f_Z restricted to L (gradient zeros in charts)."""
    mm = MomentMap(z)
    return _zero_search(lambda q, c: moment_gradient(mm, L, q, c), L, mesh_resolution, tol)


@dataclass(frozen=True)
class MorseReport:
    zero_count: int
    critical_count: int
    nondegenerate: bool


def morse_report(z, L, mesh_resolution=128) -> MorseReport:
    zr = find_zeros(z, L, mesh_resolution)
    cr = find_critical_points(z, L, mesh_resolution)
    return MorseReport(zr.count, cr.count, zr.all_nondegenerate and cr.all_nondegenerate)


def morse_count(z, L, mesh_resolution=128) -> int:
    """Number of critical points of z o phi, cross-checked against the zeros of W^{NL}."""
    rep = morse_report(z, L, mesh_resolution)
    if rep.zero_count != rep.critical_count:
        raise MorseMismatchError(
            f"{rep.critical_count} critical points but {rep.zero_count} zeros of the normal section")
    return rep.zero_count


# -- Killing nullity -----------------------------------------------------------

@dataclass(frozen=True)
class NullityReport:
    rank: int
    ranks: dict
    singular_values: np.ndarray

    @property
    def stable(self) -> bool:
        return len(set(self.ranks.values())) == 1


def nullity_matrix(L: LagrangianSurface, n_points=64, seed=0) -> np.ndarray:
    """6 x 2n matrix of normal parts of the basis fields at sampled points."""
    if n_points < 12:
        raise ValueError("need at least 12 sample points")
    q = L.domain.sample_params(n_points, np.random.default_rng(seed))
    pts = L.points(q)
    n1, n2 = L.normal_frame(q)
    rows = []
    for e in np.eye(6):
        k = killing_vectors(e, pts)
        rows.append(np.concatenate([np.sum(k * n1, axis=-1), np.sum(k * n2, axis=-1)]))
    return np.array(rows)


def nullity_report(L, n_points=64, tol=1e-8, seed=0) -> NullityReport:
    s = np.linalg.svd(nullity_matrix(L, n_points, seed), compute_uv=False)
    smax = s[0] if s[0] > 0 else 1.0
    ranks = {t: int(np.sum(s > t * smax)) for t in sorted(set(NULLITY_TOLS) | {tol})}
    return NullityReport(ranks[tol], ranks, s)


def killing_nullity(L: LagrangianSurface, n_points=64, tol=1e-8, seed=0) -> int:
    """Numerical dimension of the space of normal parts of Killing fields."""
    rep = nullity_report(L, n_points, tol, seed)
    if not rep.stable:
        raise RankInstabilityError(rep.ranks, rep.singular_values)
    return rep.rank


# -- Gotoh bound ---------------------------------------------------------------

def psi2_pairing(z, x, y, theta) -> float:
    """<Psi_2(Z) X, Y> for Z in h, X in m_theta, Y in m_theta-perp (closed form)."""
    z1, z2 = z
    x1, x2 = x
    y1, y2 = y
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    return x1 * y2 * (z1 * c2 + z2 * s2) - x2 * y1 * (z1 * s2 + z2 * c2)


def dim_im_psi2(theta, tol=1e-9) -> int:
    """Rank of h -> Hom(m_theta, m_theta-perp); 1 at theta = pi/4, 3pi/4, else 2."""
    if not (np.pi / 4 - 1e-12 <= theta <= 3 * np.pi / 4 + 1e-12):
        raise ValueError(f"theta={theta} outside [pi/4, 3pi/4]")
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    s = np.linalg.svd(np.array([[c2, s2], [s2, c2]]), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def gotoh_bounds(L: LagrangianSurface, params, chart=0, tol=1e-6, lag_tol=1e-8) -> np.ndarray:
    """codim + dim Im(Psi_2|h) at each parameter point (vectorised)."""
    params = np.asarray(params, dtype=float)
    base = L.points(params, chart)
    b1, b2 = L.tangent_frame(params, chart)
    if np.abs(geo.omega_arr(base, b1, b2)).max() > lag_tol:
        raise ValueError("surface is not Lagrangian at the requested points")
    total, _ = geo.kahler_angles_arr(base, b1, b2)
    degenerate = (total <= tol) | (np.abs(total - np.pi) <= tol)
    return 2 + np.where(degenerate, 1, 2)


def gotoh_bound(L: LagrangianSurface, params, chart=0, tol=1e-6) -> int:
    return int(gotoh_bounds(L, np.asarray(params, dtype=float)[None], chart, tol)[0])


# -- moment embeddings and Kuiper's bound --------------------------------------

class MomentEmbedding:
    """phi = (f_1, ..., f_N) restricted to L."""

    def __init__(self, L: LagrangianSurface, fields):
        if len(fields) < 1:
            raise ValueError("need at least one field")
        self.surface = L
        self.maps = [MomentMap(f) for f in fields]

    def __call__(self, params, chart=0) -> np.ndarray:
        pts = self.surface.points(np.asarray(params, dtype=float), chart)
        return np.stack([m(pts) for m in self.maps], axis=-1)

    def substantial_check(self, n_samples=200, tol=1e-8, seed=0) -> bool:
        """True iff the sampled image spans an affine subspace of full dimension N."""
        q = self.surface.domain.sample_params(n_samples, np.random.default_rng(seed))
        img = self(q)
        img = img - img.mean(axis=0)
        s = np.linalg.svd(img, compute_uv=False)
        if s[0] <= 1e-12:
            return False
        return int(np.sum(s > tol * s[0])) == len(self.maps)


def moment_embedding(L, fields) -> MomentEmbedding:
    return MomentEmbedding(L, [_as_field(f) for f in fields])


def kuiper_bound(n: int) -> int:
    """Largest N admitting a tight substantial map of a closed n-manifold into E^N."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * (n + 3) // 2
