import cmath
import math

import numpy as np
import pytest

from crownflow.halfspace import Geodesic, Horoball, MobiusMap, bp, classify, cross_ratio
from crownflow.quaddiff import (
    ChainSpec,
    ModelDifferential,
    PrincipalPart,
    chain_from_framing,
    compatible_with_boundary,
    compatible_with_chain,
    dbar_residual,
    default_horoballs,
    fit_principal_part,
    halfplane_decomposition,
    hopf_from_grid,
    metric_residue_chain,
    residue,
    straighten_chain,
    truncated_lengths,
)
from crownflow.surfaces import develop, holonomy, one_boundary_torus

rng = np.random.default_rng(19)


class TestPrincipalPart:
    def test_residue_order2(self):
        pp = PrincipalPart(2, (), 1.0 + 0j)
        assert abs(residue(pp) - 4j * math.pi) < 1e-14

    def test_residue_order4(self):
        pp = PrincipalPart(4, (2.0 + 1j, 0.5 - 0.25j))
        assert residue(pp) == 0.5 - 0.25j

    def test_residue_order3_rejected(self):
        with pytest.raises(ValueError):
            residue(PrincipalPart(3, (1.0 + 0j,)))

    def test_top_coefficient_nonzero(self):
        with pytest.raises(ValueError):
            PrincipalPart(4, (0j, 1.0 + 0j))

    def test_boundary_compatibility(self):
        assert compatible_with_boundary(PrincipalPart(2, (), 1.0 + 0j), 0.0)
        pp = PrincipalPart(2, (), 0.25 * cmath.exp(1j * math.pi))
        assert compatible_with_boundary(pp, 2 * math.pi)
        assert not compatible_with_boundary(PrincipalPart(2, (), 0j), 1.0)

    def test_halfplanes(self):
        for n in (3, 4, 5):
            h, v, sectors = halfplane_decomposition(n)
            assert h == v == n - 2
            assert len(sectors) == 2 * (n - 2)


def planar_chain(m=2, spread=1.0, deck_len=2.0):
    """A chain on the real circle with loxodromic deck fixing 0, inf."""
    lam = math.exp(deck_len / 2)
    deck = MobiusMap(lam, 0, 0, 1 / lam)
    pts = tuple(bp(spread * (k + 1)) for k in range(m))
    return ChainSpec(deck, pts)


def bent_chain(theta=0.7):
    """A 2-chain with one vertex rotated out of the plane."""
    base = planar_chain(2, 1.0, 2.2)
    from crownflow.halfspace import elliptic_about_axis

    rot = elliptic_about_axis(Geodesic(base.point(0), base.point(1)), theta)
    # rotate everything from index 2 on, equivariantly: conjugate the deck too
    pts = (base.point(0), base.point(1))
    deck = rot @ base.deck @ rot.inverse()
    pts2 = (pts[0], pts[1])
    return ChainSpec(deck, pts2)


class TestChains:
    def test_orbit_points(self):
        c = planar_chain(2)
        p2 = c.point(2)
        assert p2.close_to(c.deck.apply(c.point(0)), 1e-12)
        assert c.point(-1).close_to(c.deck.inverse().apply(c.point(1)), 1e-12)

    def test_symmetric_residue_zero(self):
        c = planar_chain(2, spread=1.0)
        # symmetric horoballs: equal diameters -> equal truncated lengths
        balls = default_horoballs(c, [1.0, 1.0])
        ls = truncated_lengths(c, balls)
        alpha = metric_residue_chain(c, balls)
        sym = abs(ls[0] - ls[1])
        assert abs(alpha) - sym < 1e-12

    def test_horoball_independence(self):
        c = planar_chain(4, spread=0.7, deck_len=3.0)
        base = metric_residue_chain(c, default_horoballs(c, [1, 0.5, 0.25, 0.8]))
        for _ in range(10):
            lv = np.exp(rng.uniform(-1, 1, 4))
            got = metric_residue_chain(c, default_horoballs(c, list(lv)))
            assert abs(got - base) < 1e-10

    def test_global_rescale(self):
        c = planar_chain(2)
        b1 = metric_residue_chain(c, default_horoballs(c, [0.3, 0.7]))
        b2 = metric_residue_chain(c, default_horoballs(c, [0.6, 1.4]))
        assert abs(b1 - b2) < 1e-10

    def test_odd_chain_rejected(self):
        c = planar_chain(3)
        with pytest.raises(ValueError):
            metric_residue_chain(c)

    def test_compatibility_counts(self):
        c1 = planar_chain(1, deck_len=2.0)
        assert compatible_with_chain(PrincipalPart(3, (0.5 + 0j,)), c1)
        assert not compatible_with_chain(PrincipalPart(4, (0.5 + 0j, 0j + 1)), c1)

    def test_compatibility_residue_condition(self):
        c = planar_chain(2, spread=1.0)
        alpha = metric_residue_chain(c)
        # even order: need Re(residue) = alpha up to sign
        pp_good = PrincipalPart(4, (1.0 + 0j, alpha + 0.3j))
        pp_bad = PrincipalPart(4, (1.0 + 0j, alpha + 1.5 + 0j))
        assert compatible_with_chain(pp_good, c)
        assert not compatible_with_chain(pp_bad, c)


class TestStraighten:
    def test_planar_unchanged_invariants(self):
        c = planar_chain(2, spread=0.8, deck_len=2.5)
        balls = default_horoballs(c, [0.5, 0.9])
        s, sballs = straighten_chain(c, balls)
        l0 = truncated_lengths(c, balls)
        l1 = truncated_lengths(s, sballs)
        assert np.abs(np.array(l0) - np.array(l1)).max() < 1e-9

    def test_bent_chain_planarized(self):
        from crownflow.halfspace import elliptic_about_axis

        base = planar_chain(2, 1.0, 2.5)
        balls = default_horoballs(base, [0.4, 0.7])
        rot = elliptic_about_axis(Geodesic(base.point(1), base.point(2)), 0.9)
        # conjugated chain is genuinely non-planar as a point set with deck
        pts = (base.point(0), base.point(1))
        c = ChainSpec(rot @ base.deck @ rot.inverse(), (rot.apply(pts[0]), rot.apply(pts[1])))
        alpha0 = metric_residue_chain(base, balls)
        s, sballs = straighten_chain(
            c, [b.transform(rot) for b in balls]
        )
        # all straightened points + deck orbit lie on the real circle
        orbit = [s.point(i) for i in range(-1, s.m + 2)]
        for quad in zip(orbit, orbit[1:], orbit[2:], orbit[3:]):
            v = cross_ratio(*quad)
            assert abs(v.imag) < 1e-9
        alpha1 = metric_residue_chain(s, sballs)
        assert min(abs(alpha1 - alpha0), abs(alpha1 + alpha0)) < 1e-9

    def test_idempotent(self):
        c = planar_chain(2, 0.9, 2.2)
        balls = default_horoballs(c, [0.5, 0.5])
        s1, b1 = straighten_chain(c, balls)
        s2, b2 = straighten_chain(s1, b1)
        l1 = truncated_lengths(s1, b1)
        l2 = truncated_lengths(s2, b2)
        assert np.abs(np.array(l1) - np.array(l2)).max() < 1e-9


class TestChainFromFraming:
    def _crowned_rep(self):
        ct = one_boundary_torus().compiled()
        z = np.array([1.0, 1.0, 1.0, 2.0], dtype=complex)
        rep = holonomy(develop(ct, z))
        return rep

    def test_fuchsian_chain_real(self):
        rep = self._crowned_rep()
        c = chain_from_framing(rep, 0)
        assert c.m == 1
        orbit = [c.point(i) for i in range(-1, 3)]
        for quad in zip(orbit, orbit[1:], orbit[2:], orbit[3:]):
            assert abs(cross_ratio(*quad).imag) < 1e-9

    def test_equivariance_under_conjugation(self):
        rep = self._crowned_rep()
        c0 = chain_from_framing(rep, 0)
        m = MobiusMap(1, 2j, 0.5, 1)
        c1 = chain_from_framing(rep.conjugate(m), 0)
        assert c1.point(0).close_to(m.apply(c0.point(0)), 1e-8)
        assert c1.deck.same_psl(m @ c0.deck @ m.inverse(), 1e-8)


class TestHopf:
    def _grid(self, n=41, lo=-1.0, hi=1.0, y0=1.0):
        xs = np.linspace(lo, hi, n)
        ys = np.linspace(y0, y0 + (hi - lo), n)
        return xs[None, :] + 1j * ys[:, None]

    def test_conformal_map_zero(self):
        z = self._grid()
        u = np.stack([z.real, np.zeros_like(z.real), z.imag], axis=-1)
        _, phi = hopf_from_grid(z, u)
        assert np.abs(phi).max() < 1e-10

    def test_collapse_map_constant(self):
        for c in (0.0, 1.0, 2.0):
            z = self._grid()
            w = np.exp(z.real - c * z.imag)
            u = np.stack([np.zeros_like(w), np.zeros_like(w), w], axis=-1)
            _, phi = hopf_from_grid(z, u)
            expect = 0.25 * (1 + 1j * c) ** 2
            err = np.abs(phi - expect).max()
            assert err < 5e-3 * abs(expect)

    def test_dbar_shrinks_under_refinement(self):
        # geodesic-valued map with harmonic exponent is harmonic; its phi is
        # v_z^2, holomorphic, so the discrete dbar residual is pure truncation
        def run(n):
            z = self._grid(n)
            v = z.real + 0.3 * (z.real**2 - z.imag**2)
            w = np.exp(v)
            u = np.stack([np.zeros_like(w), np.zeros_like(w), w], axis=-1)
            zz, phi = hopf_from_grid(z, u)
            return dbar_residual(zz, phi)

        r1, r2 = run(33), run(65)
        assert r2 < 0.35 * r1


class TestFit:
    def test_synthetic_recovery(self):
        r = rng.uniform(2.0, 3.0, 600)
        th = rng.uniform(-math.pi, math.pi, 600)
        w = r * np.exp(1j * th)
        alpha = (1.3 - 0.4j, 0.2 + 0.9j)
        smooth = 0.05 + 0.02j
        psi = alpha[0] / w**2 + alpha[1] / w + smooth
        fit = fit_principal_part(w, psi**2, 4)
        got = np.array(fit.part.coeffs)
        want = np.array(alpha)
        err = min(np.abs(got - want).max(), np.abs(got + want).max())
        assert err < 1e-6 * np.abs(want).max()

    def test_odd_order_halfinteger(self):
        r = rng.uniform(2.0, 3.0, 400)
        th = rng.uniform(-math.pi, math.pi, 400)
        w = r * np.exp(1j * th)
        alpha = 0.8 + 0.1j
        theta_c = np.angle(w)
        whalf = np.exp(-0.5 * (np.log(np.abs(w)) + 1j * theta_c))
        psi = whalf * (alpha / w + 0.03)
        fit = fit_principal_part(w, psi**2, 3)
        got = fit.part.coeffs[0]
        assert min(abs(got - alpha), abs(got + alpha)) < 1e-6

    def test_conditioning_reported(self):
        w = np.full(50, 2.0 + 0j) + rng.normal(0, 1e-9, 50)
        with pytest.raises(ValueError):
            fit_principal_part(w, 1.0 / w**4, 4)


class TestModelDifferential:
    def test_degree_relation(self):
        ModelDifferential(1, (PrincipalPart(3, (1.0 + 0j,)),), ((0.3 + 0j, 3),))
        with pytest.raises(ValueError):
            ModelDifferential(1, (PrincipalPart(3, (1.0 + 0j,)),), ())
