"""Principal parts, residues, chains of geodesics, and Hopf-differential data.

Sign conventions: principal parts and metric residues are defined up to a
global sign; every comparison here is sign-agnostic.  A chain is stored by a
loxodromic deck element and one period of ideal base points; its geodesics
join consecutive orbit points.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .halfspace import (
    BoundaryPoint,
    Geodesic,
    Horoball,
    MobiusMap,
    bp,
    classify,
    frame_to_zero_infinity,
    mobius_from_triples,
    translation_length,
    truncated_length,
)
from .surfaces import FramedRepresentation, peripheral_monodromy

TOL_COMPAT = 1e-6


@dataclass(frozen=True)
class PrincipalPart:
    """Negative-degree tail of sqrt(q) at a pole, up to sign.

    order n >= 3: coeffs = (alpha_r, ..., alpha_1) with r = floor(n/2) and a
    z^{-1/2} prefactor when n is odd.  order n <= 2: a single leading
    coefficient a e^{i theta} of the quadratic differential itself.
    """

    order: int
    coeffs: tuple[complex, ...] = ()
    leading: complex = 0j

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("pole order must be nonnegative")
        if self.order >= 3:
            r = self.order // 2
            if len(self.coeffs) != r:
                raise ValueError(f"order {self.order} needs {r} coefficients")
            if self.coeffs and abs(self.coeffs[0]) == 0:
                raise ValueError("top coefficient alpha_r must be nonzero")
        elif self.coeffs:
            raise ValueError("orders <= 2 carry only a leading coefficient")

    @property
    def epsilon(self) -> float:
        return 0.5 if (self.order >= 3 and self.order % 2 == 1) else 0.0

    def sqrt_tail(self, w: np.ndarray) -> np.ndarray:
        """Evaluate the principal differential (one sign choice) at w."""
        w = np.asarray(w, dtype=complex)
        out = np.zeros_like(w)
        r = self.order // 2
        for k, a in enumerate(self.coeffs):
            out = out + a * w ** (-(r - k))
        return out * w ** (-self.epsilon)


def residue(pp: PrincipalPart) -> complex:
    """Analytic residue, one representative of the +- pair."""
    if pp.order >= 3:
        if pp.order % 2 == 1:
            raise ValueError("residue undefined for odd pole order >= 3")
        return pp.coeffs[-1]
    if pp.order == 2:
        return 4j * math.pi * cmath.sqrt(pp.leading)
    raise ValueError("residue defined for even order >= 4 or order 2")


def compatible_with_boundary(
    pp: PrincipalPart, length: float, tol: float = TOL_COMPAT
) -> bool:
    """Order <= 2 versus a geodesic boundary of length L (cusp when L = 0):
    L^2 = 16 pi^2 |a| sin^2(theta/2)."""
    if pp.order > 2:
        raise ValueError("boundary compatibility applies to orders <= 2")
    a = abs(pp.leading)
    theta = cmath.phase(pp.leading) if a > 0 else 0.0
    rhs = 16.0 * math.pi**2 * a * math.sin(theta / 2.0) ** 2
    return abs(length**2 - rhs) < tol * max(1.0, length**2)


def halfplane_decomposition(n: int) -> tuple[int, int, list[dict]]:
    """(horizontal count, vertical count) and the angular chart partition.

    The natural coordinate turns by pi per half-plane; one loop around the
    pole crosses n-2 horizontal and n-2 vertical half-planes, consecutive
    ones overlapping along quarter-planes.
    """
    if n < 3:
        raise ValueError("half-plane structure needs pole order >= 3")
    m = n - 2
    sectors = []
    for k in range(m):
        sectors.append(
            {"kind": "horizontal", "index": k, "angle": (k * math.pi, (k + 1) * math.pi)}
        )
        sectors.append(
            {
                "kind": "vertical",
                "index": k,
                "angle": ((k + 0.5) * math.pi, (k + 1.5) * math.pi),
            }
        )
    return m, m, sectors


# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class ChainSpec:
    deck: MobiusMap
    base_points: tuple[BoundaryPoint, ...]

    def __post_init__(self):
        if classify(self.deck) != "loxodromic":
            raise ValueError("chain deck element must be loxodromic")
        pts = list(self.base_points) + [self.deck.apply(self.base_points[0])]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i].chordal(pts[j]) < 1e-10:
                    raise ValueError("chain orbit points must be distinct in a period")

    @property
    def m(self) -> int:
        return len(self.base_points)

    def point(self, i: int) -> BoundaryPoint:
        """i-th orbit point, i arbitrary in Z (period m under the deck)."""
        q, r = divmod(i, self.m)
        p = self.base_points[r]
        if q == 0:
            return p
        g = self.deck if q > 0 else self.deck.inverse()
        for _ in range(abs(q)):
            p = g.apply(p)
        return p

    def geodesics(self, count: int | None = None) -> list[Geodesic]:
        n = self.m if count is None else count
        return [Geodesic(self.point(i), self.point(i + 1)) for i in range(n)]


def chain_from_framing(rep: FramedRepresentation, boundary_index: int) -> ChainSpec:
    """Deck = boundary monodromy; base points = framing values of the marked
    point lifts along one period of the lifted boundary."""
    ct = rep.tri
    deck = peripheral_monodromy(rep, ("boundary", boundary_index))
    if classify(deck) != "loxodromic":
        raise ValueError("boundary peripheral is not loxodromic")
    arcs = ct.boundary_cycles[boundary_index]
    prefixes = ct.boundary_prefix_words[boundary_index]
    pts = []
    for (t, i), w in zip(arcs, prefixes):
        val = rep.framing_at_corner((t, i))
        pts.append(rep.evaluate_word(w).apply(val))
    return ChainSpec(deck, tuple(pts))


def default_horoballs(chain: ChainSpec, levels=None) -> list[Horoball]:
    """One horoball per base point; finite centers get euclidean diameter
    `level`, an infinite center gets height 1/level."""
    if levels is None:
        levels = [1.0] * chain.m
    balls = []
    for p, s in zip(chain.base_points, levels):
        balls.append(Horoball(p, (1.0 / s) if p.is_infinity else s))
    return balls


def _ball_at(chain: ChainSpec, balls: list[Horoball], i: int) -> Horoball:
    q, r = divmod(i, chain.m)
    b = balls[r]
    if q == 0:
        return b
    g = chain.deck if q > 0 else chain.deck.inverse()
    for _ in range(abs(q)):
        b = b.transform(g)
    return b


def truncated_lengths(chain: ChainSpec, balls: list[Horoball] | None = None) -> list[float]:
    if balls is None:
        balls = default_horoballs(chain)
    out = []
    for i in range(chain.m):
        g = Geodesic(chain.point(i), chain.point(i + 1))
        out.append(truncated_length(g, _ball_at(chain, balls, i), _ball_at(chain, balls, i + 1)))
    return out


def metric_residue_chain(chain: ChainSpec, balls: list[Horoball] | None = None) -> float:
    """Alternating sum of horoball-truncated lengths over one period (m even);
    defined up to sign, the returned sign follows the stored point order."""
    if chain.m % 2 != 0:
        raise ValueError("metric residue needs an even chain")
    ls = truncated_lengths(chain, balls)
    return sum((-1) ** (i + 1) * l for i, l in enumerate(ls))


def compatible_with_chain(pp: PrincipalPart, chain: ChainSpec, tol: float = TOL_COMPAT) -> bool:
    """Order n >= 3 versus an m-chain: m = n-2, and for even n the metric
    residue matches Re(residue) up to the sign pair."""
    if pp.order < 3:
        raise ValueError("chain compatibility applies to orders >= 3")
    if chain.m != pp.order - 2:
        return False
    if pp.order % 2 == 1:
        return True
    alpha = metric_residue_chain(chain)
    target = residue(pp).real
    scale = max(1.0, abs(target))
    return min(abs(alpha - target), abs(alpha + target)) < tol * scale


# ---------------------------------------------------------------------------
# straightening


@dataclass
class ChainFrameInvariants:
    """Per cusp i: (d_i, zeta_i, delta_i) in the frame taking
    (p_i, p_{i+1}) -> (0, inf) with the horoball at p_{i+1} at height 1."""

    d: list[float]
    zeta: list[complex]
    delta: list[float]


def _chain_invariants(chain: ChainSpec, balls: list[Horoball]) -> ChainFrameInvariants:
    d, zeta, delta = [], [], []
    for i in range(chain.m):
        p0, p1, p2 = chain.point(i), chain.point(i + 1), chain.point(i + 2)
        f = frame_to_zero_infinity(Geodesic(p0, p1))
        b1 = _ball_at(chain, balls, i + 1).transform(f)
        s = 1.0 / b1.level  # rescale so the ball at infinity has height 1
        scale = MobiusMap(cmath.sqrt(s), 0, 0, 1.0 / cmath.sqrt(s))
        f = scale @ f
        d.append(_ball_at(chain, balls, i).transform(f).level)
        z = f.apply(p2)
        zeta.append(z.value)
        delta.append(_ball_at(chain, balls, i + 2).transform(f).level)
    return ChainFrameInvariants(d, zeta, delta)


def straighten_chain(
    chain: ChainSpec, balls: list[Horoball] | None = None
) -> tuple[ChainSpec, list[Horoball]]:
    """Planar chain with the same truncated-length data.

    Successive elliptic rotations about the chain geodesics rotate each frame
    coordinate zeta_i to |zeta_i|; the result lies on the circle R + i0 of
    CP^1 and is a lift of a hyperbolic crown.
    """
    if balls is None:
        balls = default_horoballs(chain)
    inv = _chain_invariants(chain, balls)
    m = chain.m
    # rebuild points: q_0 = 0, q_1 = inf, then each next point from its frame
    pts: list[BoundaryPoint] = [bp(0), bp(math.inf)]
    blls: list[Horoball] = [
        Horoball(bp(0), inv.d[0]),
        Horoball(bp(math.inf), 1.0),
    ]
    for i in range(m + 1):
        k = i % m
        f = frame_to_zero_infinity(Geodesic(pts[i], pts[i + 1]))
        b1 = blls[i + 1].transform(f)
        s = 1.0 / b1.level
        scale = MobiusMap(math.sqrt(s), 0, 0, 1.0 / math.sqrt(s))
        finv = (scale @ f).inverse()
        pts.append(finv.apply(bp(abs(inv.zeta[k]))))
        blls.append(Horoball(bp(abs(inv.zeta[k])), inv.delta[k]).transform(finv))
    deck = mobius_from_triples(tuple(pts[0:3]), tuple(pts[m : m + 3]))
    out = ChainSpec(deck, tuple(pts[:m]))
    return out, blls[:m]


# ---------------------------------------------------------------------------
# Hopf differential extraction from sampled maps


def _pair_h3(a: np.ndarray, b: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Complex-bilinear H^3 pairing of ambient vectors at the points `at`."""
    return (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]) / (
        at[..., 2] ** 2
    )


def hopf_from_grid(z: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi = <u_z, u_z> on the interior of a rectangular chart grid.

    z: complex chart coordinates (ny, nx) of a uniform grid; u: (ny, nx, 3).
    Central differences; returns (interior z, phi).
    """
    hx = (z[0, 1] - z[0, 0]).real
    hy = (z[1, 0] - z[0, 0]).imag
    ux = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * hx)
    uy = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * hy)
    at = u[1:-1, 1:-1]
    phi = 0.25 * (
        _pair_h3(ux, ux, at) - _pair_h3(uy, uy, at) - 2j * _pair_h3(ux, uy, at)
    )
    return z[1:-1, 1:-1], phi


def dbar_residual(z: np.ndarray, phi: np.ndarray) -> float:
    """Area-weighted RMS of dbar(phi) over the sample grid interior."""
    hx = (z[0, 1] - z[0, 0]).real
    hy = (z[1, 0] - z[0, 0]).imag
    px = (phi[1:-1, 2:] - phi[1:-1, :-2]) / (2 * hx)
    py = (phi[2:, 1:-1] - phi[:-2, 1:-1]) / (2 * hy)
    dbar = 0.5 * (px + 1j * py)
    return float(np.sqrt(np.mean(np.abs(dbar) ** 2)))


@dataclass
class PrincipalPartFit:
    part: PrincipalPart
    smooth: tuple[complex, ...]
    stderr: tuple[float, ...]
    residual: float
    cond: float


def fit_principal_part(
    w: np.ndarray,
    phi: np.ndarray,
    order: int,
    n_smooth: int = 2,
    cond_max: float = 1e12,
) -> PrincipalPartFit:
    """Least-squares Laurent tail of sqrt(phi) on an annulus of w-samples.

    Fits phi itself on integer powers w^{-m-2eps} (single-valued, so the sqrt
    branch never enters), then recovers alpha_r..alpha_1 triangularly from the
    top coefficients beta_{2r}..beta_{r+1}, which the smooth remainder of
    sqrt(phi) cannot touch.  Coefficients come back up to one global sign.
    """
    if order < 2:
        raise ValueError("fit needs pole order >= 2")
    w = np.asarray(w, dtype=complex).ravel()
    phi = np.asarray(phi, dtype=complex).ravel()
    r = order // 2 if order >= 3 else 1
    two_eps = 1 if (order >= 3 and order % 2 == 1) else 0

    # phi ~ sum_m beta_m w^{-m-2eps}, m from 2r down to -n_smooth
    ms = list(range(2 * r, -n_smooth - 1, -1))
    a = np.stack([w ** (-m - two_eps) for m in ms], axis=1)
    scale = np.abs(a).mean(axis=0)
    sol, *_ = np.linalg.lstsq(a / scale, phi, rcond=None)
    sol = sol / scale
    cond = float(np.linalg.cond(a / scale))
    if cond > cond_max:
        raise ValueError(f"principal-part fit ill-conditioned (cond={cond:.3g})")
    resid = phi - a @ sol
    dof = max(len(w) - len(ms), 1)
    sigma2 = float(np.sum(np.abs(resid) ** 2) / dof)
    gram = (a / scale).conj().T @ (a / scale)
    cov = sigma2 * np.linalg.inv(gram) / np.outer(scale, scale)
    beta_err = [float(np.sqrt(abs(cov[i, i].real))) for i in range(len(ms))]
    beta = {m: sol[i] for i, m in enumerate(ms)}
    berr = {m: beta_err[i] for i, m in enumerate(ms)}

    # triangular extraction: beta_m = sum_{i+j=m, 1<=i,j<=r} alpha_i alpha_j
    alpha = {}
    top = cmath.sqrt(beta[2 * r])
    if abs(top) == 0:
        raise ValueError("vanishing top coefficient in principal-part fit")
    alpha[r] = top
    for m in range(2 * r - 1, r, -1):
        # beta_m = 2 alpha_r alpha_{m-r} + sum over m-r < i < r of alpha_i alpha_{m-i}
        cross = sum(alpha[i] * alpha[m - i] for i in range(m - r + 1, r))
        alpha[m - r] = (beta[m] - cross) / (2 * alpha[r])
    tail = tuple(alpha[k] for k in range(r, 0, -1))
    err = tuple(berr[r + k] / (2 * abs(top)) for k in range(r, 0, -1))

    if order >= 3:
        part = PrincipalPart(order, tail)
    else:
        part = PrincipalPart(order, (), tail[0] ** 2)
    smooth = tuple(beta[m] for m in range(r, -n_smooth - 1, -1))
    return PrincipalPartFit(part, smooth, err, float(np.sqrt(sigma2)), cond)


# ---------------------------------------------------------------------------
# model differentials


@dataclass(frozen=True)
class ModelDifferential:
    """Pole data at the punctures plus a zero divisor on the core chart."""

    genus: int
    poles: tuple[PrincipalPart, ...]
    zeros: tuple[tuple[complex, int], ...] = ()

    def __post_init__(self):
        total_zero = sum(k for _, k in self.zeros)
        total_pole = sum(p.order for p in self.poles)
        if total_zero - total_pole != 4 * self.genus - 4:
            raise ValueError(
                f"degree relation violated: zeros {total_zero} - poles "
                f"{total_pole} != {4 * self.genus - 4}"
            )
