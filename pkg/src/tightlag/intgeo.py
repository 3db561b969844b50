"""Intersection counting, angle integrals and Haar Monte Carlo over G = SO(3) x SO(3).

Haar draws are uniform (probability measure); integrals over G are rescaled
by the Riemannian volume ``vol(G) = (8 pi^2)^2``.  The isotropy group K is
parametrised by two angles in [0, 2 pi)^2 with measure d(phi) d(psi).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geometry as geo
from . import liegroup as lg
from .surfaces import AntiDiagonalSphere, LagrangianSurface, LatitudeTorus, sb_z2, surface_volume

log = logging.getLogger(__name__)

VOL_SO3 = 8 * np.pi ** 2
ROTATION_MARGIN = 1e-9
TANGENCY_MARGIN = 1e-9
JACOBIAN_MARGIN = 1e-7


def vol_so3() -> float:
    return VOL_SO3


def vol_g() -> float:
    return VOL_SO3 ** 2


@dataclass
class IntersectionReport:
    count: int | None
    points: list = field(default_factory=list)
    transverse: bool = True
    degenerate: bool = False


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    discarded: int = 0


# -- angles between subspaces --------------------------------------------------

def wedge_angle(v, w, tol=1e-10) -> float:
    """|v_1 ^ ... ^ v_p ^ w_1 ^ ... ^ w_q| for orthonormal families v, w."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    for fam in (v, w):
        if np.abs(fam @ fam.T - np.eye(len(fam))).max() > tol:
            raise ValueError("input family is not orthonormal")
    a = np.vstack([v, w])
    return float(np.sqrt(max(np.linalg.det(a @ a.T), 0.0)))


def _k_rotate(vecs, alpha, beta):
    """Apply the isotropy element (R_e1(alpha), R_e1(beta)) to tangent 6-vectors."""
    ra = lg.rodrigues(np.multiply.outer(alpha, lg.E1))
    rb = lg.rodrigues(np.multiply.outer(beta, lg.E1))
    u = np.einsum("...ij,...kj->...ki", ra, vecs[:, :3])
    v = np.einsum("...ij,...kj->...ki", rb, vecs[:, 3:])
    return np.concatenate([u, v], axis=-1)


def _plane_vectors(p) -> np.ndarray:
    if isinstance(p, geo.TwoPlane):
        base = p.base.as_vector()
        if not (np.allclose(np.abs(base[[0, 3]]), 1.0, atol=1e-12)):
            raise ValueError("planes must sit at a point fixed by K (x, y = +-e1)")
        return p.vectors()
    return np.atleast_2d(np.asarray(p, dtype=float))


def sigma_k_integrand(v, w, alpha, beta) -> np.ndarray:
    """sigma(V, k^{-1} W) with k^{-1} = (R(alpha), R(beta)); broadcasts over angles."""
    v = _plane_vectors(v)
    w = _plane_vectors(w)
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    kw = _k_rotate(w, alpha, beta)
    a = np.concatenate([np.broadcast_to(v, kw.shape[:-2] + v.shape), kw], axis=-2)
    gram = a @ np.swapaxes(a, -1, -2)
    return np.sqrt(np.clip(np.linalg.det(gram), 0, None))


def sigma_k(v, w, quadrature_n=512) -> float:
    """Integral over K of the angle between V and k^{-1} W (periodic trapezoid rule)."""
    g = np.arange(quadrature_n) * (2 * np.pi / quadrature_n)
    rows = max(1, 16384 // quadrature_n)  # block the grid to keep memory flat at large n
    total = 0.0
    for i in range(0, quadrature_n, rows):
        a, b = np.meshgrid(g[i:i + rows], g, indexing="ij")
        total += sigma_k_integrand(v, w, a, b).sum()
    return float(total * (2 * np.pi / quadrature_n) ** 2)


def m0_pairing_integrand(phi, psi) -> np.ndarray:
    """<a(u1 ^ u2), b(v1 ^ v2)> for M0's tangent/normal frames at (e1, -e1)."""
    s2 = 1 / np.sqrt(2)
    u = np.array([[0, 1, 0, 0, -1, 0], [0, 0, 1, 0, 0, -1]]) * s2
    v = np.array([[0, 1, 0, 0, 1, 0], [0, 0, 1, 0, 0, 1]]) * s2
    phi, psi = np.broadcast_arrays(np.asarray(phi, float), np.asarray(psi, float))
    au = _k_rotate(u, phi, np.zeros_like(phi))
    bv = _k_rotate(v, np.zeros_like(psi), psi)
    return np.linalg.det(au @ np.swapaxes(bv, -1, -2))


def normal_plane_at_origin(L: LagrangianSurface, params, chart=0) -> np.ndarray:
    """Normal plane of L at params, moved to o = (e1, e1)."""
    base = L.points(np.asarray(params, float), chart)
    n1, n2 = L.normal_frame(np.asarray(params, float), chart)
    g = geo.rotation_to_origin(base)
    return np.array([g.act(n1), g.act(n2)])


def poincare_rhs(L1: LagrangianSurface, L2: LagrangianSurface | None = None,
                 n_points=8, quadrature_n=64) -> float:
    """Right-hand side: double integral of sigma_K over L1 x L2 by product quadrature."""
    L2 = L1 if L2 is None else L2

    def nodes(L):
        q, w = L.domain.quadrature(n_points)
        jac = L.jacobian(q)
        area = np.sqrt(np.linalg.det(np.einsum("nki,nkj->nij", jac, jac)))
        return [normal_plane_at_origin(L, qi) for qi in q], w * area

    p1, w1 = nodes(L1)
    p2, w2 = nodes(L2)
    total = 0.0
    for a, wa in zip(p1, w1):
        for b, wb in zip(p2, w2):
            total += wa * wb * sigma_k(a, b, quadrature_n)
    return float(total)


# -- analytic intersection oracles ---------------------------------------------

def _m0_counts(a, b):
    """Vectorised count of M0 cap (A, B) M0; -1 flags a degenerate (coincident) draw."""
    c = np.swapaxes(b, -1, -2) @ a
    angle = lg.rotation_angle(c)
    return np.where(angle < ROTATION_MARGIN, -1, 2)


def intersect_m0(g: lg.ProductGroupElement) -> IntersectionReport:
    """M0 cap g M0: (p, -p) with A p = B p, i.e. the fixed axis of B^T A."""
    a, b = g.matrices
    c = b.T @ a
    if lg.rotation_angle(c) < ROTATION_MARGIN:
        return IntersectionReport(None, [], transverse=False, degenerate=True)
    axis = lg.vee(c)
    if np.linalg.norm(axis) < 1e-8:
        # half turn: axis is the +1 eigenvector
        vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
        axis = vecs[:, np.argmax(vals)]
    axis = axis / np.linalg.norm(axis)
    pts = []
    for sgn in (1.0, -1.0):
        q = a @ (sgn * axis)
        pts.append(geo.SurfacePoint(q / np.linalg.norm(q), -q / np.linalg.norm(q)))
    return IntersectionReport(2, pts, transverse=True)


def _circle_pair(n1, n2, h):
    """Points of {<n1,z> = h} cap {<n2,z> = h} on S^2.

    Returns (status, points) with status 'same', 'tangent' or 'ok'.
    """
    cosg = float(np.dot(n1, n2))
    cr = np.cross(n1, n2)
    sg = np.linalg.norm(cr)
    if sg < 1e-12:
        if cosg > 0 or abs(h) < 1e-12:
            return "same", []
        return "ok", []
    c = h / (1 + cosg)
    z0 = c * (n1 + n2)
    d = 1 - z0 @ z0
    if abs(d) <= TANGENCY_MARGIN:
        return "tangent", [z0 / np.linalg.norm(z0)]
    if d < 0:
        return "ok", []
    tau = np.sqrt(d) / sg
    return "ok", [z0 + tau * cr, z0 - tau * cr]


def _torus_factor_counts(r, h):
    """Vectorised factor count: 0/2, 1 for tangency, -1 for coincident circles."""
    cosg = r[..., 0, 0]  # <e1, R e1>
    sg = np.sqrt(np.clip(1 - cosg ** 2, 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 1 - 2 * h * h / (1 + cosg)
    d = np.where(1 + cosg < 1e-300, -np.inf, d)
    out = np.where(d > TANGENCY_MARGIN, 2, np.where(d < -TANGENCY_MARGIN, 0, 1))
    same = (sg < 1e-12) & ((cosg > 0) | (abs(h) < 1e-12))
    return np.where(same, -1, out)


def _torus_counts(a, b, ha, hb):
    """Total count per draw; -1 degenerate, -2 non-transverse (tangency)."""
    fa = _torus_factor_counts(a, ha)
    fb = _torus_factor_counts(b, hb)
    zero = (fa == 0) | (fb == 0)
    degen = (fa == -1) | (fb == -1)
    tangent = (fa == 1) | (fb == 1)
    return np.where(zero, 0, np.where(degen, -1, np.where(tangent, -2, fa * fb)))


def intersect_torus(L: LatitudeTorus, g: lg.ProductGroupElement) -> IntersectionReport:
    a, b = g.matrices
    sa, pa = _circle_pair(lg.E1, a[:, 0], L.a)
    sb, pb = _circle_pair(lg.E1, b[:, 0], L.b)
    if (sa == "ok" and not pa) or (sb == "ok" and not pb):
        return IntersectionReport(0, [], transverse=True)
    if "same" in (sa, sb):
        return IntersectionReport(None, [], transverse=False, degenerate=True)
    pts = [geo.SurfacePoint(x / np.linalg.norm(x), y / np.linalg.norm(y)) for x in pa for y in pb]
    return IntersectionReport(len(pts), pts, transverse=(sa == "ok" and sb == "ok"))


# -- generic numeric intersection ----------------------------------------------

def _gauss_newton(L1, L2, c1, c2, q1, q2, iters=40):
    for _ in range(iters):
        r = L1.points(q1, c1) - L2.points(q2, c2)
        j = np.concatenate([L1.jacobian(q1, c1), -L2.jacobian(q2, c2)], axis=-1)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(j), r)
        sl = np.linalg.norm(step, axis=-1, keepdims=True)
        step *= np.minimum(1.0, 0.5 / np.maximum(sl, 1e-300))
        q1 = L1.domain.wrap(q1 + step[:, :2], c1)
        q2 = L2.domain.wrap(q2 + step[:, 2:], c2)
        if np.abs(step).max() < 1e-15:
            break
    res = np.linalg.norm(L1.points(q1, c1) - L2.points(q2, c2), axis=-1)
    return q1, q2, res


def intersect_generic(L1: LagrangianSurface, L2: LagrangianSurface,
                      mesh_resolution=48, tol=1e-10, dedup=1e-6) -> IntersectionReport:
    """Proximity scan over both meshes, Gauss-Newton refinement, deduplication."""
    solutions = []  # (point, sigma_min)
    for c2 in range(L2.n_charts):
        g2 = L2.domain.grid(mesh_resolution, c2).reshape(-1, 2)
        p2 = L2.points(g2, c2)
        tree = cKDTree(p2)
        nn = np.sort(tree.query(p2, k=2)[0][:, 1])
        radius = 3.0 * nn[int(0.9 * len(nn))]
        for c1 in range(L1.n_charts):
            g1 = L1.domain.grid(mesh_resolution, c1).reshape(-1, 2)
            d, idx = tree.query(L1.points(g1, c1), distance_upper_bound=radius)
            hit = np.isfinite(d)
            if not hit.any():
                continue
            q1, q2, res = _gauss_newton(L1, L2, c1, c2, g1[hit], g2[idx[hit]])
            ok = (res <= tol) & L1.domain.in_chart(q1, c1) & L2.domain.in_chart(q2, c2)
            if not ok.any():
                continue
            q1, q2 = q1[ok], q2[ok]
            t1 = np.stack(L1.tangent_frame(q1, c1), axis=-1)
            t2 = np.stack(L2.tangent_frame(q2, c2), axis=-1)
            smin = np.linalg.svd(np.concatenate([t1, t2], axis=-1), compute_uv=False)[:, -1]
            for p, s in zip(L1.points(q1, c1), smin):
                solutions.append((p, s))

    pts, smins = [], []
    for p, s in solutions:
        if any(np.linalg.norm(p - q) < dedup for q in pts):
            continue
        pts.append(p)
        smins.append(s)
    tangential = [s < JACOBIAN_MARGIN for s in smins]
    # a continuum of tangential solutions means the surfaces overlap
    if sum(tangential) >= 3:
        return IntersectionReport(None, [], transverse=False, degenerate=True)
    return IntersectionReport(len(pts), [geo.SurfacePoint.from_vector(p) for p in pts],
                              transverse=not any(tangential))


def count_intersections(L: LagrangianSurface, g: lg.ProductGroupElement, **kw) -> IntersectionReport:
    """#(L cap g L) by the analytic oracle when one exists, else numerically."""
    if isinstance(L, AntiDiagonalSphere):
        return intersect_m0(g)
    if isinstance(L, LatitudeTorus):
        return intersect_torus(L, g)
    return intersect_generic(L, L.transformed(g), **kw)


def _batch_counts(L, a, b):
    """Per-draw counts with -1 degenerate, -2 non-transverse."""
    if isinstance(L, AntiDiagonalSphere):
        return _m0_counts(a, b)
    if isinstance(L, LatitudeTorus):
        return _torus_counts(a, b, L.a, L.b)
    out = []
    for ai, bi in zip(a, b):
        rep = count_intersections(L, lg.ProductGroupElement.from_matrices(ai, bi))
        out.append(-1 if rep.degenerate else (-2 if not rep.transverse else rep.count))
    return np.array(out)


def poincare_mc(L: LagrangianSurface, n_samples: int, seed: int, workers: int = 1) -> MonteCarloEstimate:
    """vol(G) * E[#(L cap g L)] over Haar-random g; degenerate draws are dropped.

    Each worker owns the stream spawned from (seed, worker index).
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    streams = np.random.SeedSequence(seed).spawn(workers)
    sizes = [n_samples // workers + (i < n_samples % workers) for i in range(workers)]

    def run(i):
        a, b = lg.haar_pairs(np.random.default_rng(streams[i]), sizes[i])
        return _batch_counts(L, a, b)

    if workers == 1:
        counts = run(0)
    else:
        with ThreadPoolExecutor(workers) as pool:
            counts = np.concatenate(list(pool.map(run, range(workers))))
    good = counts[counts >= 0].astype(float)
    discarded = len(counts) - len(good)
    if discarded:
        log.info("poincare_mc: discarded %d degenerate or non-transverse draws", discarded)
    if len(good) == 0:
        raise RuntimeError("every draw was degenerate")
    scale = vol_g()
    sd = good.std(ddof=1) if len(good) > 1 else 0.0
    return MonteCarloEstimate(scale * good.mean(), scale * sd / np.sqrt(len(good)), n_samples, seed, discarded)


def expected_intersection_integral(L: LagrangianSurface) -> float | None:
    """Closed-form value of the integral over G for the built-in surfaces."""
    if isinstance(L, AntiDiagonalSphere):
        return 2 * np.pi ** 2 * surface_volume(L) ** 2
    if isinstance(L, LatitudeTorus):
        return 16.0 * surface_volume(L) ** 2
    return None


# -- tightness -----------------------------------------------------------------

@dataclass
class TightnessVerdict:
    surface: LagrangianSurface
    regime: str
    trials: int
    transverse_trials: int
    violations: list = field(default_factory=list)  # (ProductGroupElement, count)
    epsilon: float | None = None
    seed: int | None = None

    @property
    def tight(self) -> bool:
        return not self.violations


def _local_draws(rng, n, epsilon):
    w = rng.standard_normal((n, 6))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    t = epsilon * (1.0 - rng.random(n))  # (0, epsilon]
    v = w * t[:, None]
    return lg.rodrigues(v[:, :3]), lg.rodrigues(v[:, 3:])


def tightness_check(L: LagrangianSurface, regime="global", n_trials=10_000,
                    epsilon=0.05, seed=0) -> TightnessVerdict:
    """Count L cap gL over random g; every transverse count different from SB(L) is a violation."""
    if regime not in ("local", "global"):
        raise ValueError("regime must be 'local' or 'global'")
    rng = np.random.default_rng(seed)
    if regime == "global":
        a, b = lg.haar_pairs(rng, n_trials)
    else:
        a, b = _local_draws(rng, n_trials, epsilon)
    counts = _batch_counts(L, a, b)
    expected = sb_z2(L.topology)
    transverse = counts >= 0
    bad = np.flatnonzero(transverse & (counts != expected))
    violations = [(lg.ProductGroupElement.from_matrices(a[i], b[i]), int(counts[i])) for i in bad]
    return TightnessVerdict(L, regime, n_trials, int(transverse.sum()), violations,
                            epsilon if regime == "local" else None, seed)


def violations_to_json(verdict: TightnessVerdict) -> list:
    return [{"first": g.first.matrix.tolist(), "second": g.second.matrix.tolist(), "count": c}
            for g, c in verdict.violations]


def violations_from_json(data) -> list:
    return [(lg.ProductGroupElement.from_matrices(np.array(d["first"]), np.array(d["second"])), d["count"])
            for d in data]
