"""Matrix model of G = SO(3) x SO(3) and its Lie algebra so(3) + so(3).

Algebra elements are stored as axis vectors; the antisymmetric matrix is
rebuilt on demand through :func:`hat`.  The inner product on each factor is
``<A, B> = -1/2 tr(AB)``, which makes ``hat`` an isometry from R^3.

The isotropy algebra h at the origin ``o = (e1, e1)`` is spanned by the
rotations about e1 in either factor; its complement m~ is identified with
the tangent space at ``o`` through ``X -> X . o``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

_SERIES_CUTOFF = 1e-4
_ORTHO_TOL = 1e-12


def hat(v) -> np.ndarray:
    """Antisymmetric matrix with ``hat(v) @ w == cross(v, w)``.

    Works on stacks: ``v`` of shape (..., 3) gives (..., 3, 3).
    """
    v = np.asarray(v)
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=v.dtype)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vee(m) -> np.ndarray:
    """Inverse of :func:`hat` (antisymmetric part only)."""
    m = np.asarray(m)
    return 0.5 * np.stack(
        [m[..., 2, 1] - m[..., 1, 2], m[..., 0, 2] - m[..., 2, 0], m[..., 1, 0] - m[..., 0, 1]],
        axis=-1,
    )


def trace_pairing(a, b) -> float:
    """``-1/2 tr(AB)`` for 3x3 matrices."""
    return -0.5 * float(np.trace(np.asarray(a) @ np.asarray(b)))


def rodrigues(v) -> np.ndarray:
    """Matrix exponential of ``hat(v)``, vectorised over leading axes."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)[..., None, None]
    k = hat(v)
    k2 = k @ k
    small = theta < _SERIES_CUTOFF
    safe = np.where(small, 1.0, theta)
    t2 = theta * theta
    # series: sin(t)/t = 1 - t^2/6 + t^4/120, (1 - cos t)/t^2 = 1/2 - t^2/24 + t^4/720
    a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, (1.0 - np.cos(safe)) / (safe * safe))
    return np.eye(3) + a * k + b * k2


def rotation_angle(r) -> np.ndarray:
    """Rotation angle in [0, pi] of a rotation matrix (stack-aware)."""
    r = np.asarray(r)
    c = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    # acos loses precision near 0; use the antisymmetric part as well
    s = np.linalg.norm(vee(r), axis=-1)
    return np.arctan2(s, np.clip(c, -1.0, 1.0))


def rotation_taking(x, target=E1) -> np.ndarray:
    """A rotation R with ``R @ x == target`` for unit vectors x, target."""
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    axis = np.cross(x, target)
    s = np.linalg.norm(axis)
    c = float(np.dot(x, target))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # half-turn about any axis orthogonal to x
        perp = np.cross(x, E1 if abs(x[0]) < 0.9 else E2)
        perp /= np.linalg.norm(perp)
        return 2.0 * np.outer(perp, perp) - np.eye(3)
    return rodrigues(axis / s * np.arctan2(s, c))


@dataclass(frozen=True)
class So3Element:
    """Element of so(3) held as its axis vector."""

    axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axis", np.array(self.axis, dtype=float).reshape(3))

    @property
    def matrix(self) -> np.ndarray:
        return hat(self.axis)


@dataclass(frozen=True)
class Rotation3:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(3, 3)
        if np.abs(m.T @ m - np.eye(3)).max() > _ORTHO_TOL or abs(np.linalg.det(m) - 1.0) > _ORTHO_TOL:
            raise ValueError("matrix is not a rotation")
        object.__setattr__(self, "matrix", m)

    @property
    def inverse(self) -> "Rotation3":
        return Rotation3(self.matrix.T)


@dataclass(frozen=True)
class ProductAlgebraElement:
    """Element (X1, X2) of so(3) + so(3); also read as a Killing field on S^2 x S^2."""

    first: So3Element
    second: So3Element

    @classmethod
    def from_axes(cls, a, b) -> "ProductAlgebraElement":
        return cls(So3Element(a), So3Element(b))

    @classmethod
    def from_vector(cls, w) -> "ProductAlgebraElement":
        w = np.asarray(w, dtype=float)
        return cls.from_axes(w[:3], w[3:])

    @classmethod
    def zero(cls) -> "ProductAlgebraElement":
        return cls.from_vector(np.zeros(6))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.first.axis, self.second.axis])

    @property
    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return self.first.matrix, self.second.matrix

    def __add__(self, other):
        return ProductAlgebraElement.from_vector(self.as_vector() + other.as_vector())

    def __sub__(self, other):
        return ProductAlgebraElement.from_vector(self.as_vector() - other.as_vector())

    def __neg__(self):
        return ProductAlgebraElement.from_vector(-self.as_vector())

    def __mul__(self, c):
        return ProductAlgebraElement.from_vector(float(c) * self.as_vector())

    __rmul__ = __mul__


@dataclass(frozen=True)
class ProductGroupElement:
    first: Rotation3
    second: Rotation3

    @classmethod
    def from_matrices(cls, a, b) -> "ProductGroupElement":
        return cls(Rotation3(a), Rotation3(b))

    @classmethod
    def identity(cls) -> "ProductGroupElement":
        return cls.from_matrices(np.eye(3), np.eye(3))

    @property
    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return self.first.matrix, self.second.matrix

    @property
    def inverse(self) -> "ProductGroupElement":
        return ProductGroupElement(self.first.inverse, self.second.inverse)

    def __matmul__(self, other: "ProductGroupElement") -> "ProductGroupElement":
        return ProductGroupElement.from_matrices(
            self.first.matrix @ other.first.matrix, self.second.matrix @ other.second.matrix
        )

    def act(self, xy) -> np.ndarray:
        """Apply to stacked points or tangent vectors of shape (..., 6)."""
        xy = np.asarray(xy)
        a, b = self.matrices
        return np.concatenate([xy[..., :3] @ a.T, xy[..., 3:] @ b.T], axis=-1)

    def conjugate(self, z: ProductAlgebraElement) -> ProductAlgebraElement:
        """Ad_g Z; on axis vectors this is just rotation of each axis."""
        a, b = self.matrices
        return ProductAlgebraElement.from_axes(a @ z.first.axis, b @ z.second.axis)


def inner(x: ProductAlgebraElement, y: ProductAlgebraElement) -> float:
    """Bi-invariant inner product, -1/2 tr per factor, summed."""
    return float(np.dot(x.as_vector(), y.as_vector()))


def norm(x: ProductAlgebraElement) -> float:
    return float(np.sqrt(inner(x, x)))


def bracket(x: ProductAlgebraElement, y: ProductAlgebraElement) -> ProductAlgebraElement:
    # [hat(u), hat(v)] = hat(u x v)
    return ProductAlgebraElement.from_axes(
        np.cross(x.first.axis, y.first.axis), np.cross(x.second.axis, y.second.axis)
    )


def exp_so3(x: So3Element) -> Rotation3:
    return Rotation3(rodrigues(x.axis))


def exp(z: ProductAlgebraElement) -> ProductGroupElement:
    return ProductGroupElement(exp_so3(z.first), exp_so3(z.second))


def random_rotations(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` Haar-uniform rotations, shape (n, 3, 3), from unit quaternions."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    r = np.empty((n, 3, 3))
    r[:, 0, 0] = 1 - 2 * (y * y + z * z)
    r[:, 0, 1] = 2 * (x * y - z * w)
    r[:, 0, 2] = 2 * (x * z + y * w)
    r[:, 1, 0] = 2 * (x * y + z * w)
    r[:, 1, 1] = 1 - 2 * (x * x + z * z)
    r[:, 1, 2] = 2 * (y * z - x * w)
    r[:, 2, 0] = 2 * (x * z - y * w)
    r[:, 2, 1] = 2 * (y * z + x * w)
    r[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return r


def haar_sample(rng: np.random.Generator) -> ProductGroupElement:
    """One Haar-distributed element of SO(3) x SO(3)."""
    r = random_rotations(rng, 2)
    return ProductGroupElement.from_matrices(r[0], r[1])


def haar_pairs(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched Haar sampling: two (n, 3, 3) stacks, consistent with :func:`haar_sample`."""
    r = random_rotations(rng, 2 * n).reshape(n, 2, 3, 3)
    return r[:, 0], r[:, 1]


# -- canonical decomposition g = h + m + m_perp -------------------------------

H_BASIS = (
    ProductAlgebraElement.from_axes(E1, np.zeros(3)),
    ProductAlgebraElement.from_axes(np.zeros(3), E1),
)


def tangent_to_algebra(t) -> ProductAlgebraElement:
    """Element of m~ whose action on ``o = (e1, e1)`` is the tangent vector ``t``."""
    t = np.asarray(t, dtype=float)
    return ProductAlgebraElement.from_axes(np.cross(E1, t[:3]), np.cross(E1, t[3:]))


def algebra_to_tangent(z: ProductAlgebraElement) -> np.ndarray:
    """``Z . o`` for ``o = (e1, e1)``."""
    return np.concatenate([np.cross(z.first.axis, E1), np.cross(z.second.axis, E1)])


def m_theta_basis(theta: float) -> tuple[ProductAlgebraElement, ProductAlgebraElement]:
    """Orthonormal basis of the Lagrangian plane m_theta inside m~."""
    c, s = np.cos(theta), np.sin(theta)
    return (
        ProductAlgebraElement.from_axes(c * E3, s * E3),
        ProductAlgebraElement.from_axes(-s * E2, c * E2),
    )


def m_theta_perp_basis(theta: float) -> tuple[ProductAlgebraElement, ProductAlgebraElement]:
    """Orthonormal basis of the complement of m_theta inside m~."""
    c, s = np.cos(theta), np.sin(theta)
    return (
        ProductAlgebraElement.from_axes(s * E3, -c * E3),
        ProductAlgebraElement.from_axes(-c * E2, -s * E2),
    )


@dataclass(frozen=True)
class CanonicalSplit:
    h_part: ProductAlgebraElement
    m_part: ProductAlgebraElement
    perp_part: ProductAlgebraElement


def _project(z: ProductAlgebraElement, basis) -> ProductAlgebraElement:
    vecs = np.array([b.as_vector() for b in basis])
    gram = vecs @ vecs.T
    coef = np.linalg.solve(gram, vecs @ z.as_vector())
    return ProductAlgebraElement.from_vector(coef @ vecs)


def split(z: ProductAlgebraElement, m_basis) -> CanonicalSplit:
    """Decompose along h, span(m_basis) and the rest of m~."""
    h = _project(z, H_BASIS)
    m = _project(z, m_basis)
    return CanonicalSplit(h, m, z - h - m)


def canonical_decompose(z: ProductAlgebraElement, theta: float) -> CanonicalSplit:
    if not (np.pi / 4 - 1e-12 <= theta <= 3 * np.pi / 4 + 1e-12):
        raise ValueError(f"theta={theta} outside [pi/4, 3pi/4]")
    return split(z, m_theta_basis(theta))


def complement_in_m(m_basis) -> tuple[ProductAlgebraElement, ProductAlgebraElement]:
    """Orthonormal basis of the complement of a 2-plane inside m~ (4-dimensional)."""
    m_tilde = np.array([[0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0],
                        [0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 1, 0]], dtype=float)
    vecs = np.array([b.as_vector() for b in m_basis])
    coords = vecs @ m_tilde.T
    q, _ = np.linalg.qr(np.vstack([coords, np.eye(4)]).T)
    perp = q[:, 2:4].T @ m_tilde
    return tuple(ProductAlgebraElement.from_vector(p) for p in perp)


def psi2_h_matrix(m_basis) -> np.ndarray:
    """Matrix of Psi_2 restricted to h for the tangent plane spanned by ``m_basis``.

    Rows index the h basis; columns the entries ``<[Z, X_i], Y_j>`` with
    X_i in the plane and Y_j in its complement in m~.  The second fundamental
    form term drops out on h.
    """
    perp = complement_in_m(m_basis)
    return np.array([[inner(bracket(z, x), y) for x in m_basis for y in perp] for z in H_BASIS])
