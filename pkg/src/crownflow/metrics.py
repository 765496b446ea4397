"""C^2 interpolation of conformal factors near simple poles and zeros.

Two constructions produce the nonpositively-curved domain metric:

* near a zero of order n, the factor r^n is capped by the polynomial
  psi(r) = a r^{4n} + b r^{2n} + c matched to second order at r = eps;
* near a simple pole, the hyperbolic-cusp factor 1/(r ln r)^2 is joined to
  the flat factor 1/r by integrating a nonnegative bump v with k(r) = r u'(r)
  monotone, which keeps the curvature K = -(u'' + u'/r) e^{-2u} nonpositive.

All integrals are exact piecewise polynomial/logarithmic, so endpoint
matching is at machine precision.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# zero interpolation (polynomial cap)


def zero_interp_coeffs(n: int, eps: float) -> tuple[float, float, float]:
    """Closed-form (a, b, c) matching psi to r^n through second order at eps.

    The normalized solution of the matching system is n-independent:
    a eps^{3n} = -1/8, b eps^n = 3/4, c = (3/8) eps^n.
    """
    if n < 1 or not 0 < eps < 1:
        raise ValueError("need n >= 1 and 0 < eps < 1")
    a = -1.0 / (8 * eps ** (3 * n))
    b = 3.0 / (4 * eps**n)
    c = 0.375 * eps**n
    return a, b, c


def zero_cap_factor(r, n: int, eps: float):
    """Conformal factor: psi(r) inside eps, r^n outside."""
    a, b, c = zero_interp_coeffs(n, eps)
    r = np.asarray(r, dtype=float)
    inside = r < eps
    out = np.where(inside, a * r ** (4 * n) + b * r ** (2 * n) + c, r ** (1.0 * n))
    return out if out.ndim else float(out)


@dataclass
class ZeroInterpReport:
    ok: bool
    system_residual: float
    min_p: float
    min_p_location: float
    closed_form_min: float
    max_curvature: float
    messages: list[str] = field(default_factory=list)


def zero_interp_verify(n: int, eps: float, grid: int = 2000) -> ZeroInterpReport:
    """Audit the matching system, p(r) >= 0, and the curvature sign."""
    a, b, c = zero_interp_coeffs(n, eps)
    msgs = []

    def psi(r):
        return a * r ** (4 * n) + b * r ** (2 * n) + c

    def dpsi(r):
        return 4 * n * a * r ** (4 * n - 1) + 2 * n * b * r ** (2 * n - 1)

    def d2psi(r):
        return 4 * n * (4 * n - 1) * a * r ** (4 * n - 2) + 2 * n * (2 * n - 1) * b * r ** (
            2 * n - 2
        )

    res = max(
        abs(psi(eps) - eps**n) / max(eps**n, 1e-300),
        abs(dpsi(eps) - n * eps ** (n - 1)) / max(n * eps ** (n - 1), 1e-300),
        abs(d2psi(eps) - n * (n - 1) * eps ** (n - 2))
        / max(abs(n * (n - 1) * eps ** (n - 2)), 1.0),
    )
    r = np.linspace(eps / grid, eps, grid)
    p = (a * b) * r ** (4 * n) + (4 * a * c) * r ** (2 * n) + b * c
    pmin = float(p.min())
    loc = float(r[int(p.argmin())])
    closed = -((4 * a * c) ** 2) / (4 * a * b) + b * c
    # K = - (4 n^2 r^{2n-2} p) / (2 psi^3)  up to the positive Delta-log factor
    kmax = float((-4 * n**2 * r ** (2 * n - 2) * p / (2 * psi(r) ** 3)).max())
    ok = True
    if res > 1e-12:
        ok = False
        msgs.append(f"matching system residual {res:.3e} exceeds 1e-12")
    if pmin < -1e-12:
        ok = False
        msgs.append(f"p(r) dips to {pmin:.3e} at r={loc:.6g}")
    if closed < 0:
        ok = False
        msgs.append(f"closed-form bound {closed:.3e} negative")
    if kmax > 1e-10:
        ok = False
        msgs.append(f"curvature reaches {kmax:.3e} > 1e-10")
    if not (a < 0 < b and c > 0):
        ok = False
        msgs.append("sign pattern a<0<b, c>0 violated")
    return ZeroInterpReport(ok, res, pmin, loc, closed, kmax, msgs)


# ---------------------------------------------------------------------------
# simple-pole interpolation (cusp to flat)


def cusp_u(r):
    """u = -ln(r |ln r|), the hyperbolic-cusp conformal exponent."""
    r = np.asarray(r, dtype=float)
    return -np.log(r * np.abs(np.log(r)))


def cusp_k(r):
    return -1.0 - 1.0 / np.log(r)


def cusp_v(r):
    """k'(r) on the cusp side."""
    return 1.0 / (r * np.log(r) ** 2)


def flat_u(r):
    return -0.5 * np.log(np.asarray(r, dtype=float))


R_JOIN = 2.0 / 3.0
K_FLAT = -0.5


class PolyLog:
    """Piecewise c2 s^2 + c1 s + c0 data with exact integral of itself and of
    itself divided by s."""

    def __init__(self, breaks, coefs):
        self.breaks = list(breaks)  # len = segments + 1
        self.coefs = list(coefs)  # (c2, c1, c0) per segment

    def __call__(self, s: float) -> float:
        i = min(max(bisect_right(self.breaks, s) - 1, 0), len(self.coefs) - 1)
        c2, c1, c0 = self.coefs[i]
        return c2 * s * s + c1 * s + c0

    def derivative(self, s: float) -> float:
        i = min(max(bisect_right(self.breaks, s) - 1, 0), len(self.coefs) - 1)
        c2, c1, _ = self.coefs[i]
        return 2 * c2 * s + c1

    def integral(self, lo: float, hi: float) -> float:
        """integral of the function itself."""
        return self._int(lo, hi, over_s=False)

    def integral_over_s(self, lo: float, hi: float) -> float:
        """integral of f(s)/s."""
        return self._int(lo, hi, over_s=True)

    def _int(self, lo: float, hi: float, over_s: bool) -> float:
        total, s = 0.0, lo
        for i, (c2, c1, c0) in enumerate(self.coefs):
            a, b = self.breaks[i], self.breaks[i + 1]
            seg_lo, seg_hi = max(lo, a), min(hi, b)
            if seg_hi <= seg_lo:
                continue
            if over_s:
                total += (
                    0.5 * c2 * (seg_hi**2 - seg_lo**2)
                    + c1 * (seg_hi - seg_lo)
                    + c0 * math.log(seg_hi / seg_lo)
                )
            else:
                total += (
                    c2 * (seg_hi**3 - seg_lo**3) / 3.0
                    + 0.5 * c1 * (seg_hi**2 - seg_lo**2)
                    + c0 * (seg_hi - seg_lo)
                )
        return total


def _bump_k(eps: float, eps0: float, a: float, b: float, h2: float, veps: float) -> PolyLog:
    """k(r) = k(eps) + int v, for the two-window piecewise-linear bump v."""
    mid = 0.5 * (a + b)
    k_eps = float(cusp_k(eps))
    # v segments: descending line on [eps, eps0]; 0; tent up/down on [a, b]; 0
    m1 = 0.5 * veps * (eps0 - eps)
    m2a = 0.5 * h2 * (mid - a)
    breaks = [eps, eps0, a, mid, b, R_JOIN]
    coefs = []
    # [eps, eps0]: v = veps (eps0 - s)/(eps0 - eps); k = k_eps + veps(s-eps) - veps (s-eps)^2/(2(eps0-eps))
    d = eps0 - eps
    c2 = -veps / (2 * d)
    # expand k_eps + veps*(s-eps) + c2*(s-eps)^2:
    c2_full = c2
    c1_full = veps - 2 * c2 * eps
    c0_full = k_eps - veps * eps + c2 * eps * eps
    coefs.append((c2_full, c1_full, c0_full))
    # [eps0, a]: constant k_eps + m1
    coefs.append((0.0, 0.0, k_eps + m1))
    # [a, mid]: v = h2 (s-a)/(mid-a); k = k_eps + m1 + h2 (s-a)^2 / (2(mid-a))
    e = mid - a
    q2 = h2 / (2 * e)
    coefs.append((q2, -2 * q2 * a, k_eps + m1 + q2 * a * a))
    # [mid, b]: v = h2 (b-s)/(b-mid); k = ... + m2a + h2[(s-mid) - (s-mid)^2/(2(b-mid))]
    f = b - mid
    p2 = -h2 / (2 * f)
    p1 = h2 - 2 * p2 * mid
    p0 = k_eps + m1 + m2a - h2 * mid + p2 * mid * mid
    coefs.append((p2, p1, p0))
    # [b, 2/3]: constant k_eps + m1 + 2 m2a
    coefs.append((0.0, 0.0, k_eps + m1 + 2 * m2a))
    return PolyLog(breaks, coefs)


@dataclass
class RadialProfile:
    """Sampled conformal exponent u with derivatives and segment tags."""

    eps: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    segment: np.ndarray  # 'cusp' | 'interpolation' | 'flat'
    k_fn: PolyLog
    window: tuple[float, float, float, float]  # eps0, a, b, h2

    def u_of(self, r: float) -> float:
        if r <= self.eps:
            return float(cusp_u(r))
        if r >= R_JOIN:
            return float(flat_u(r))
        return float(cusp_u(self.eps)) + self.k_fn.integral_over_s(self.eps, r)

    def du_of(self, r: float) -> float:
        if r <= self.eps:
            return float(-1.0 / r - 1.0 / (r * math.log(r)))
        if r >= R_JOIN:
            return -0.5 / r
        return self.k_fn(r) / r

    def d2u_of(self, r: float) -> float:
        if r <= self.eps:
            lr = math.log(r)
            return (lr * lr + lr + 1.0) / (r * r * lr * lr)
        if r >= R_JOIN:
            return 0.5 / (r * r)
        return self.k_fn.derivative(r) / r - self.k_fn(r) / (r * r)

    def factor(self, r) -> np.ndarray:
        """Conformal factor lambda^2 = e^{2u}."""
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.array([math.exp(2.0 * self.u_of(x)) for x in rr])
        return out if np.ndim(r) else float(out[0])


def pole_interp_feasible(eps: float) -> tuple[bool, str]:
    if not 0 < eps < math.exp(-2.0):
        return False, f"need eps < e^-2 so that k(eps) < k(2/3): eps={eps:.3g}"
    k_eps = float(cusp_k(eps))
    target = float(flat_u(R_JOIN) - cusp_u(eps) - k_eps * math.log(R_JOIN / eps))
    alpha = (K_FLAT - k_eps) * math.log(R_JOIN / eps)
    if not 0 < target < alpha:
        return False, (
            f"integral condition out of range: target={target:.6g}, "
            f"alpha={alpha:.6g}"
        )
    return True, ""


def pole_interp_profile(eps: float, samples: int = 4096) -> RadialProfile:
    """Construct the cusp-to-flat interpolation for a simple pole.

    The bump v has two windows (a fixed descent at eps, a tunable tent at
    [a,b]); the tent position is found by bisection on the exact value of
    u(2/3).  Raises if eps violates the feasibility inequalities.
    """
    ok, msg = pole_interp_feasible(eps)
    if not ok:
        raise ValueError(msg)
    k_eps = float(cusp_k(eps))
    dk = K_FLAT - k_eps
    veps = float(cusp_v(eps))
    eps0 = eps + min(0.5 * eps, 0.004)
    while 0.5 * veps * (eps0 - eps) > 0.5 * dk:
        eps0 = eps + 0.5 * (eps0 - eps)
    m1 = 0.5 * veps * (eps0 - eps)
    w2 = min(0.04, (R_JOIN - eps0) / 8.0)
    h2 = 2.0 * (dk - m1) / w2
    target = float(flat_u(R_JOIN))

    def u_join(bpos: float) -> float:
        kf = _bump_k(eps, eps0, bpos - w2, bpos, h2, veps)
        return float(cusp_u(eps)) + kf.integral_over_s(eps, R_JOIN)

    lo = eps0 + w2 * 1.0000001
    hi = R_JOIN - 1e-9
    flo, fhi = u_join(lo) - target, u_join(hi) - target
    if flo * fhi > 0:
        raise ValueError(
            f"tent window cannot meet the matching integral: "
            f"f({lo:.4g})={flo:.3g}, f({hi:.4g})={fhi:.3g}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = u_join(mid) - target
        if abs(fm) < 1e-13:
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    bpos = 0.5 * (lo + hi)
    k_fn = _bump_k(eps, eps0, bpos - w2, bpos, h2, veps)

    prof = RadialProfile(
        eps,
        np.empty(0),
        np.empty(0),
        np.empty(0),
        np.empty(0),
        np.empty(0, dtype=object),
        k_fn,
        (eps0, bpos - w2, bpos, h2),
    )
    r_lo, r_hi = eps * 1e-2, 0.999
    r = np.geomspace(r_lo, r_hi, samples)
    r = np.unique(np.concatenate([r, [eps, R_JOIN]]))
    seg = np.where(r <= eps, "cusp", np.where(r < R_JOIN, "interpolation", "flat"))
    u = np.array([prof.u_of(x) for x in r])
    du = np.array([prof.du_of(x) for x in r])
    d2u = np.array([prof.d2u_of(x) for x in r])
    prof.r, prof.u, prof.du, prof.d2u, prof.segment = r, u, du, d2u, seg
    return prof


def max_feasible_eps(tol: float = 1e-10) -> float:
    """Largest eps accepted by the feasibility inequalities, by bisection."""
    lo, hi = 1e-8, math.exp(-2.0) - 1e-12
    if not pole_interp_feasible(lo)[0]:
        raise RuntimeError("no feasible eps at the small end")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pole_interp_feasible(mid)[0]:
            lo = mid
        else:
            hi = mid
    return lo


def curvature_of_profile(prof: RadialProfile) -> dict:
    """Pointwise K = -(u'' + u'/r) e^{-2u} plus a finite-difference check."""
    r, u, du, d2u = prof.r, prof.u, prof.du, prof.d2u
    K = -(d2u + du / r) * np.exp(-2.0 * u)
    du_fd = np.gradient(u, r)
    d2u_fd = np.gradient(du_fd, r)
    K_fd = -(d2u_fd + du_fd / r) * np.exp(-2.0 * u)
    inner = slice(2, -2)
    return {
        "r": r,
        "K": K,
        "K_fd": K_fd,
        "fd_agreement": float(np.max(np.abs((K - K_fd)[inner]))),
        "by_segment": {
            name: K[prof.segment == name] for name in ("cusp", "interpolation", "flat")
        },
    }


# ---------------------------------------------------------------------------
# assembled domain metric


@dataclass(frozen=True)
class MetricChart:
    """One rotationally-symmetric modification chart of the domain metric."""

    kind: str  # 'pole1' | 'zero' | 'flat'
    center: complex = 0j
    radius: float = 0.0
    order: int = 0
    profile: RadialProfile | None = None
    eps: float = 0.0


class DomainMetric:
    """Conformal factor field of the modified singular-flat metric."""

    def __init__(self, charts: list[MetricChart]):
        self.charts = charts
        mods = [c for c in charts if c.kind in ("pole1", "zero")]
        for i in range(len(mods)):
            for j in range(i + 1, len(mods)):
                ci, cj = mods[i], mods[j]
                if abs(ci.center - cj.center) < ci.radius + cj.radius:
                    raise ValueError(
                        f"modification regions at {ci.center} and {cj.center} overlap"
                    )

    def factor(self, chart_index: int, z) -> np.ndarray:
        """lambda^2 at chart points z (complex, chart-local)."""
        c = self.charts[chart_index]
        r = np.abs(np.asarray(z, dtype=complex) - c.center)
        if c.kind == "flat":
            return np.maximum(r, 1e-300) ** c.order
        if c.kind == "zero":
            return zero_cap_factor(r, c.order, c.eps)
        if c.kind == "pole1":
            return c.profile.factor(r)
        raise ValueError(c.kind)

    def curvature_audit(self, chart_index: int, radii) -> float:
        """Max radial curvature of the chart factor over sampled radii."""
        c = self.charts[chart_index]
        r = np.asarray(radii, dtype=float)
        lam2 = self.factor(chart_index, c.center + r)
        u = 0.5 * np.log(lam2)
        du = np.gradient(u, r)
        d2u = np.gradient(du, r)
        K = -(d2u + du / r) / lam2
        return float(K[2:-2].max()) if len(K) > 4 else float(K.max())


def domain_metric_assemble(
    model: "ModelDifferential",
    zero_eps: float = 0.25,
    pole_eps: float = 0.01,
):
    """Charts for every zero and simple pole of a model differential.

    The flat factor r^n outside a zero matches 4|q| for q = z^n dz^2 / 4;
    simple poles get the cusp interpolation profile.
    """
    from .quaddiff import ModelDifferential  # local import to avoid a cycle

    assert isinstance(model, ModelDifferential)
    charts = [MetricChart("flat")]
    profile = None
    for ppart in model.poles:
        if ppart.order == 1:
            if profile is None:
                profile = pole_interp_profile(pole_eps)
            charts.append(MetricChart("pole1", 0j, R_JOIN, 1, profile, pole_eps))
    for z0, n in model.zeros:
        charts.append(MetricChart("zero", z0, zero_eps, n, None, zero_eps))
    return DomainMetric(charts)
