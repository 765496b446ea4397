"""Upper half-space model of H^3: Mobius maps, geodesics, exp/log, cross-ratios.

Conventions used throughout the package:

* points of H^3 are numpy arrays (..., 3) with third coordinate > 0;
* the ideal boundary CP^1 is represented by `BoundaryPoint` (projective pair);
* Mobius maps are normalized to det = 1 and stand for the pair {M, -M};
* the boundary action is z -> (az+b)/(cz+d), the interior action its
  Poincare extension, computed in quaternion form;
* cross_ratio is pinned by cross_ratio(inf, -1, 0, z) = z.

Everything here is a pure function of immutable values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

CLASS_TOL = 1e-9  # default tolerance on tr^2 comparisons


# ---------------------------------------------------------------------------
# boundary points (CP^1)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of CP^1 as a normalized projective pair (num : den)."""

    num: complex
    den: complex

    @staticmethod
    def of(value) -> "BoundaryPoint":
        if isinstance(value, BoundaryPoint):
            return value
        if value is None or value is math.inf:
            return INFTY
        return BoundaryPoint(complex(value), 1.0 + 0j)

    @staticmethod
    def infinity() -> "BoundaryPoint":
        return INFTY

    def _canonical(self) -> "BoundaryPoint":
        n, d = self.num, self.den
        if abs(d) <= 1e-14 * max(abs(n), 1.0):
            return BoundaryPoint(1.0 + 0j, 0j)
        return BoundaryPoint(n / d, 1.0 + 0j)

    @property
    def is_infinity(self) -> bool:
        c = self._canonical()
        return c.den == 0

    @property
    def value(self) -> complex:
        c = self._canonical()
        if c.den == 0:
            raise ValueError("point at infinity has no finite value")
        return c.num

    def chordal(self, other: "BoundaryPoint") -> float:
        """Chordal (round-sphere) distance, between 0 and 2."""
        o = BoundaryPoint.of(other)
        n1, d1, n2, d2 = self.num, self.den, o.num, o.den
        s1 = math.hypot(abs(n1), abs(d1))
        s2 = math.hypot(abs(n2), abs(d2))
        if s1 == 0 or s2 == 0:
            raise ValueError("degenerate projective pair")
        return 2.0 * abs(n1 * d2 - n2 * d1) / (s1 * s2)

    def close_to(self, other, tol: float = 1e-9) -> bool:
        return self.chordal(BoundaryPoint.of(other)) < tol

    def __repr__(self):
        c = self._canonical()
        return "BoundaryPoint(inf)" if c.den == 0 else f"BoundaryPoint({c.num:.6g})"


INFTY = BoundaryPoint(1.0 + 0j, 0j)


def bp(value) -> BoundaryPoint:
    """Shorthand constructor; bp(math.inf) or bp(None) give the infinite point."""
    return BoundaryPoint.of(value)


# ---------------------------------------------------------------------------
# H^3 points


def h3(x1: float, x2: float, x3: float) -> np.ndarray:
    if x3 <= 0:
        raise ValueError("upper half-space requires x3 > 0")
    return np.array([x1, x2, x3], dtype=float)


def check_h3(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.shape[-1] != 3 or not np.all(pts[..., 2] > 0):
        raise ValueError("invalid H^3 point array")
    return pts


def dist_h3(x, y) -> np.ndarray | float:
    """Hyperbolic distance; cosh d = 1 + |x-y|^2/(2 x3 y3)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = np.sum((x - y) ** 2, axis=-1)
    arg = 1.0 + diff / (2.0 * x[..., 2] * y[..., 2])
    d = np.arccosh(np.maximum(arg, 1.0))
    return float(d) if d.ndim == 0 else d


def norm_tangent(base, v) -> np.ndarray | float:
    """Metric norm of an ambient tangent vector at base."""
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.sqrt(np.sum(v**2, axis=-1)) / base[..., 2]
    return float(n) if n.ndim == 0 else n


# ---------------------------------------------------------------------------
# Mobius maps


@dataclass(frozen=True)
class MobiusMap:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) < 1e-300:
            raise ValueError("singular Mobius matrix")
        s = 1.0 / cmath.sqrt(det)
        object.__setattr__(self, "a", self.a * s)
        object.__setattr__(self, "b", self.b * s)
        object.__setattr__(self, "c", self.c * s)
        object.__setattr__(self, "d", self.d * s)

    @staticmethod
    def identity() -> "MobiusMap":
        return MobiusMap(1, 0, 0, 1)

    @staticmethod
    def translation(w: complex) -> "MobiusMap":
        return MobiusMap(1, w, 0, 1)

    @staticmethod
    def dilation(lam: complex) -> "MobiusMap":
        return MobiusMap(lam, 0, 0, 1.0 / lam)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def trace(self) -> complex:
        return self.a + self.d

    def tr2(self) -> complex:
        return (self.a + self.d) ** 2

    def same_psl(self, other: "MobiusMap", tol: float = 1e-9) -> bool:
        m, n = self.matrix(), other.matrix()
        return min(np.abs(m - n).max(), np.abs(m + n).max()) < tol

    def apply(self, p) -> BoundaryPoint:
        """Boundary action on CP^1."""
        q = BoundaryPoint.of(p)
        return BoundaryPoint(
            self.a * q.num + self.b * q.den, self.c * q.num + self.d * q.den
        )._canonical()

    def apply_h3(self, pts: np.ndarray) -> np.ndarray:
        """Poincare extension acting on arrays (..., 3) of H^3 points.

        With q = z + t j, M(q) = ((az+b)(conj(cz+d)) + a conj(c) t^2 + t j) / D,
        D = |cz+d|^2 + |c|^2 t^2.  Exact isometry of dist_h3.
        """
        pts = np.asarray(pts, dtype=float)
        z = pts[..., 0] + 1j * pts[..., 1]
        t = pts[..., 2]
        num = (self.a * z + self.b) * np.conj(self.c * z + self.d) + (
            self.a * np.conj(self.c)
        ) * t**2
        den = np.abs(self.c * z + self.d) ** 2 + abs(self.c) ** 2 * t**2
        out = np.empty_like(pts)
        out[..., 0] = num.real / den
        out[..., 1] = num.imag / den
        out[..., 2] = t / den
        return out

    def fixed_points(self) -> tuple[BoundaryPoint, BoundaryPoint]:
        """Both boundary fixed points (coincident for parabolics)."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if abs(c) < 1e-14:
            if abs(a - d) < 1e-14:
                return INFTY, INFTY
            return INFTY, BoundaryPoint(b, d - a)._canonical()
        disc = cmath.sqrt((d - a) ** 2 + 4 * b * c)
        r1 = ((a - d) + disc) / (2 * c)
        r2 = ((a - d) - disc) / (2 * c)
        # refine the smaller root through the product to limit cancellation
        if abs(r1) >= abs(r2) and abs(r1) > 0:
            r2 = (-b / c) / r1
        elif abs(r2) > 0:
            r1 = (-b / c) / r2
        return bp(r1), bp(r2)


def classify(m: MobiusMap, tol: float = CLASS_TOL) -> str:
    """'identity' | 'parabolic' | 'elliptic' | 'loxodromic' with tr^2 tolerance."""
    eye = MobiusMap.identity()
    if m.same_psl(eye, tol):
        return "identity"
    t2 = m.tr2()
    if abs(t2 - 4.0) < tol:
        return "parabolic"
    if abs(t2.imag) < tol and -tol < t2.real < 4.0 - tol:
        return "elliptic"
    return "loxodromic"


def is_semisimple(m: MobiusMap, tol: float = CLASS_TOL) -> bool:
    return classify(m, tol) in ("elliptic", "loxodromic")


@dataclass(frozen=True)
class Geodesic:
    """Unparametrized geodesic of H^3 given by its distinct ideal endpoints."""

    p1: BoundaryPoint
    p2: BoundaryPoint

    def __post_init__(self):
        if self.p1.chordal(self.p2) < 1e-13:
            raise ValueError("geodesic endpoints must be distinct")

    def transform(self, m: MobiusMap) -> "Geodesic":
        return Geodesic(m.apply(self.p1), m.apply(self.p2))


def axis(m: MobiusMap, tol: float = CLASS_TOL) -> Geodesic:
    kind = classify(m, tol)
    if kind not in ("elliptic", "loxodromic"):
        raise ValueError(f"axis undefined for {kind} element")
    f1, f2 = m.fixed_points()
    return Geodesic(f1, f2)


def translation_length(m: MobiusMap, tol: float = CLASS_TOL) -> float:
    if classify(m, tol) != "loxodromic":
        raise ValueError("translation length requires a loxodromic element")
    return 2.0 * abs(cmath.acosh(m.trace() / 2.0).real)


def frame_to_zero_infinity(g: Geodesic) -> MobiusMap:
    """Mobius map sending (g.p1, g.p2) to (0, inf)."""
    p, q = g.p1, g.p2
    # rows of z -> (z - p)/(z - q) in projective form
    return MobiusMap(p.den, -p.num, q.den, -q.num)


def elliptic_about_axis(g: Geodesic, theta: float) -> MobiusMap:
    """Rotation by theta about g: conjugate of diag(e^{i theta/2}, e^{-i theta/2})."""
    f = frame_to_zero_infinity(g)
    rot = MobiusMap(cmath.exp(0.5j * theta), 0, 0, cmath.exp(-0.5j * theta))
    return f.inverse() @ rot @ f


def dist_to_geodesic(pts: np.ndarray, g: Geodesic) -> np.ndarray | float:
    """Distance from H^3 points to a geodesic; cosh d = |x|/x3 in the 0-inf frame."""
    f = frame_to_zero_infinity(g)
    q = f.apply_h3(np.asarray(pts, dtype=float))
    ratio = np.sqrt(np.sum(q**2, axis=-1)) / q[..., 2]
    d = np.arccosh(np.maximum(ratio, 1.0))
    return float(d) if d.ndim == 0 else d


def mobius_normalizer(p1, p2, p3) -> MobiusMap:
    """The Mobius map taking the ordered triple (p1, p2, p3) to (inf, -1, 0)."""
    q1, q2, q3 = bp(p1), bp(p2), bp(p3)
    if min(q1.chordal(q2), q2.chordal(q3), q1.chordal(q3)) < 1e-13:
        raise ValueError("normalizer needs three distinct points")
    # z -> -( (p2-p1)(z-p3) ) / ( (p2-p3)(z-p1) ), written projectively
    u = q2.num * q1.den - q1.num * q2.den  # ~ (p2 - p1)
    v = q2.num * q3.den - q3.num * q2.den  # ~ (p2 - p3)
    return MobiusMap(-u * q3.den, u * q3.num, v * q1.den, -v * q1.num)


def mobius_from_triples(src, dst) -> MobiusMap:
    """Unique Mobius map sending the triple src to the triple dst."""
    return mobius_normalizer(*dst).inverse() @ mobius_normalizer(*src)


def cross_ratio(p1, p2, p3, p4) -> complex:
    """Mobius-invariant cross-ratio with cross_ratio(inf, -1, 0, z) = z."""
    q4 = bp(p4)
    m = mobius_normalizer(p1, p2, p3)
    out = m.apply(q4)
    if out.is_infinity:
        raise ValueError("cross_ratio of coincident points (p4 = p1)")
    return out.value


# ---------------------------------------------------------------------------
# geodesic exponential / logarithm

_VERT_EPS = 1e-13


def exp_h3(base: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Geodesic exponential: follow the geodesic from base with velocity vec.

    vec is in ambient coordinates; the travel time is its metric norm.
    """
    base = np.asarray(base, dtype=float)
    vec = np.asarray(vec, dtype=float)
    scalar = base.ndim == 1
    p = np.atleast_2d(base)
    v = np.atleast_2d(vec)

    t3 = p[:, 2]
    s = np.sqrt(np.sum(v**2, axis=1)) / t3  # metric norm = travel time
    out = p.copy()
    mov = s > 0
    if np.any(mov):
        vn = np.linalg.norm(v[mov], axis=1)
        u = v[mov] / vn[:, None]  # unit euclidean direction
        rho = np.hypot(u[:, 0], u[:, 1])
        sm = s[mov]
        res = np.empty((mov.sum(), 3))

        vert = rho < _VERT_EPS
        if np.any(vert):
            res[vert, 0] = 0.0
            res[vert, 1] = 0.0
            res[vert, 2] = np.exp(np.sign(u[vert, 2]) * sm[vert])
        gen = ~vert
        if np.any(gen):
            beta = np.arctan2(u[gen, 2], rho[gen])
            phi = beta - 0.5 * np.pi
            ch, sh = np.cos(0.5 * phi), np.sin(0.5 * phi)
            es = np.exp(sm[gen])
            zeta = (sh + 1j * ch * es) / (ch - 1j * sh * es)
            xi, tt = zeta.real, zeta.imag
            res[gen, 0] = xi * u[gen, 0] / rho[gen]
            res[gen, 1] = xi * u[gen, 1] / rho[gen]
            res[gen, 2] = tt
        # undo the similarity that took base to (0,0,1)
        out[mov, 0] = p[mov, 0] + t3[mov] * res[:, 0]
        out[mov, 1] = p[mov, 1] + t3[mov] * res[:, 1]
        out[mov, 2] = t3[mov] * res[:, 2]
    return out[0] if scalar else out


def log_h3(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Inverse of exp_h3: ambient tangent at base reaching target in unit time."""
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    scalar = base.ndim == 1 and target.ndim == 1
    p = np.atleast_2d(base)
    q = np.atleast_2d(target)
    if p.shape[0] == 1 and q.shape[0] > 1:
        p = np.broadcast_to(p, q.shape).copy()

    t3 = p[:, 2]
    z1 = (q[:, 0] - p[:, 0]) / t3
    z2 = (q[:, 1] - p[:, 1]) / t3
    tt = q[:, 2] / t3
    rho = np.hypot(z1, z2)
    out = np.zeros_like(p)

    vert = rho < _VERT_EPS * np.maximum(tt, 1.0)
    if np.any(vert):
        out[vert, 2] = np.log(tt[vert]) * t3[vert]
    gen = ~vert
    if np.any(gen):
        r, h = rho[gen], tt[gen]
        c = (r**2 + h**2 - 1.0) / (2.0 * r)
        norm = np.hypot(1.0, c)
        th1 = np.arctan2(1.0, -c)
        th2 = np.arctan2(h, r - c)
        sgn = np.sign(th2 - th1)
        d = np.arccosh(np.maximum(1.0 + (r**2 + (h - 1.0) ** 2) / (2.0 * h), 1.0))
        txi = sgn * (-1.0) / norm
        tth = sgn * (-c) / norm
        out[gen, 0] = d * txi * z1[gen] / r * t3[gen]
        out[gen, 1] = d * txi * z2[gen] / r * t3[gen]
        out[gen, 2] = d * tth * t3[gen]
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# horoballs


@dataclass(frozen=True)
class Horoball:
    """Horoball at an ideal point: level = euclidean diameter (finite center)
    or height of the bounding plane (center at infinity)."""

    center: BoundaryPoint
    level: float

    def __post_init__(self):
        if self.level <= 0:
            raise ValueError("horoball level must be positive")

    def boundary_sample(self) -> np.ndarray:
        """Some point of H^3 on the bounding horosphere."""
        if self.center.is_infinity:
            return np.array([0.0, 0.0, self.level])
        z = self.center.value
        return np.array([z.real, z.imag, self.level])

    def transform(self, m: MobiusMap) -> "Horoball":
        c2 = m.apply(self.center)
        x = m.apply_h3(self.boundary_sample())
        if c2.is_infinity:
            return Horoball(c2, x[2])
        w = c2.value
        lvl = ((x[0] - w.real) ** 2 + (x[1] - w.imag) ** 2 + x[2] ** 2) / x[2]
        return Horoball(c2, lvl)


def truncated_length(g: Geodesic, ball1: Horoball, ball2: Horoball) -> float:
    """Signed length of g between the horoballs at its two endpoints.

    ball1 sits at g.p1, ball2 at g.p2; negative when the horoballs overlap
    across the geodesic.
    """
    if not (ball1.center.close_to(g.p1, 1e-9) and ball2.center.close_to(g.p2, 1e-9)):
        raise ValueError("horoballs must be centered at the geodesic endpoints")
    f = frame_to_zero_infinity(Geodesic(g.p2, g.p1))  # p1 -> inf, p2 -> 0
    b_inf = ball1.transform(f)
    b_zero = ball2.transform(f)
    return math.log(b_inf.level / b_zero.level)
