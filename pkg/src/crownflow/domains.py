"""Truncated fundamental-domain meshes for the flow fixtures.

The Fuchsian shadow development of the once-punctured torus with positive
coordinates places the fundamental region as an ideal quadrilateral with two
vertical sides and two bottom semicircles; corners are truncated by one
equivariant horoball family (the quotient horocircle is the Dirichlet
boundary).  The one-boundary torus has the same core shape with one extra
bottom arc pair and one vertical side left unpaired: a flat half-plane strip
is grafted there along the boundary geodesic.

Meshing is row-based and metric-adaptive: row j follows the curve
y_j(x) = env(x)^{1-t} Y^t between the two verticals, and points along a row
are spaced uniformly in the hyperbolic metric, so cells stay quasi-uniform
where a tensor grid would degenerate toward the ideal corners.  Consecutive
rows are stitched into triangle strips.  Seam-paired boundary points are
never duplicated: the image side's bottom slots reference the preimage
side's vertices through the deck word, which makes ring closure across the
seams exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .halfspace import INFTY, Horoball, MobiusMap, bp, classify
from .meshes import EquivariantMesh, MeshBuilder
from .surfaces import (
    DevelopedTriangulation,
    FramedRepresentation,
    develop,
    holonomy,
    once_punctured_torus,
    one_boundary_torus,
    peripheral_monodromy,
)

Slot = tuple  # (vertex_id, word, position, lam2)


def _assert_real(m: MobiusMap, what: str):
    im = max(abs(m.a.imag), abs(m.b.imag), abs(m.c.imag), abs(m.d.imag))
    if im > 1e-8:
        raise ValueError(f"{what} is not in PSL(2,R): imaginary size {im:.3e}")


def _pt(p) -> float | None:
    return None if p.is_infinity else p.value.real


@dataclass
class SideGeom:
    side: tuple
    ends: tuple  # floats, None marking infinity
    letter: int  # signed crossing letter, 0 for a boundary arc

    @property
    def is_vertical(self) -> bool:
        return any(e is None for e in self.ends)

    @property
    def x_vertical(self) -> float:
        return next(e for e in self.ends if e is not None)

    @property
    def arc_span(self) -> tuple[float, float]:
        a, c = sorted(self.ends)
        return a, c


def _outer_sides(dev: DevelopedTriangulation) -> list[SideGeom]:
    ct = dev.tri
    out = []

    def geom(side, letter):
        t, i = side
        p = dev.placed((t, i))
        q = dev.placed((t, (i + 1) % 3))
        for x in (p, q):
            if not x.is_infinity and abs(x.value.imag) > 1e-9:
                raise ValueError("development is not Fuchsian-normalized")
        return SideGeom(side, (_pt(p), _pt(q)), letter)

    for letter in range(ct.n_letters):
        side_a = ct.seam_dir[letter]
        out.append(geom(side_a, letter + 1))
        out.append(geom(ct.glue[side_a], -(letter + 1)))
    for side in ct.boundary_sides:
        out.append(geom(side, 0))
    return out


def _corner_horoballs(dev, rep, y_trunc) -> dict[float, Horoball]:
    """Equivariant horoball family at the placed finite corner values."""
    ct = dev.tri
    top = Horoball(bp(math.inf), y_trunc)
    balls: dict[float, Horoball] = {}
    for corner in ct.vertex_of:
        p = dev.placed(corner)
        key = _pt(p)
        if key is None or key in balls:
            continue
        g = rep.evaluate_word(ct.lift_word[ct.lift_class_of[corner]]).inverse()
        ball = top.transform(g)
        if not ball.center.close_to(p, 1e-8):
            raise ValueError("horoball transport mismatch at a corner")
        balls[key] = ball
    return balls


class _BottomEnvelope:
    def __init__(self, arc_spans, bites):
        self.pieces = []
        for a, c in arc_spans:
            ctr, rad = 0.5 * (a + c), 0.5 * abs(c - a)
            self.pieces.append(("arc", ctr, rad, min(a, c), max(a, c)))
        for p, d in bites:
            r = 0.5 * d
            self.pieces.append(("bite", p, r, p - r, p + r))

    def __call__(self, x: float) -> float:
        best = 0.0
        for kind, ctr, rad, lo, hi in self.pieces:
            if lo - 1e-12 <= x <= hi + 1e-12:
                s = max(rad**2 - (x - ctr) ** 2, 0.0)
                y = math.sqrt(s) + (rad if kind == "bite" else 0.0)
                best = max(best, y)
        return best


@dataclass
class _Row:
    slots: list  # sorted by x; each (vertex_id|None, word, pos, lam2, dirichlet)


class _CoreBuilder:
    """Row-based hyperbolic core mesher over a Fuchsian development."""

    def __init__(self, dev, rep, y_trunc, ny, target_letters):
        self.dev, self.rep, self.y_trunc, self.ny = dev, rep, y_trunc, ny
        for g in rep.generators:
            _assert_real(g, "shadow generator")
        self.sides = _outer_sides(dev)
        self.verticals = sorted(
            (s for s in self.sides if s.is_vertical), key=lambda s: s.x_vertical
        )
        self.arcs = [s for s in self.sides if not s.is_vertical]
        self.balls = _corner_horoballs(dev, rep, y_trunc)
        self.env = _BottomEnvelope(
            [s.arc_span for s in self.arcs],
            [(x, b.level) for x, b in self.balls.items()],
        )
        self.b = MeshBuilder(tuple(target_letters))
        self.x_l = self.verticals[0].x_vertical
        self.x_r = self.verticals[-1].x_vertical
        d_l = self.env(self.x_l)
        self.h_target = math.log(y_trunc / d_l) / ny

    def letter_map(self, signed: int) -> MobiusMap:
        g = self.rep.generators[abs(signed) - 1]
        return g if signed > 0 else g.inverse()

    def row_profile(self, j: int):
        t = j / self.ny

        def y(x):
            return self.env(x) ** (1.0 - t) * self.y_trunc**t

        return y

    def vertical_nodes(self, x: float, dirichlet_all=False) -> list[int]:
        ys = np.geomspace(self.env(x), self.y_trunc, self.ny + 1)
        ids = []
        for j, y in enumerate(ys):
            diri = dirichlet_all or j in (0, self.ny)
            ids.append(self.b.vertex(complex(x, y), 1.0 / y**2, diri, "core"))
        return ids

    def match_vertical_to_arc(self, v: SideGeom):
        """Signed letter g with g({x_v, inf}) = an arc's endpoint set."""
        for s in (v.letter, -v.letter):
            g = self.letter_map(s)
            e1, e2 = g.apply(bp(v.x_vertical)), g.apply(INFTY)
            if e1.is_infinity or e2.is_infinity:
                continue
            if abs(e1.value.imag) + abs(e2.value.imag) > 1e-8:
                continue
            ends = tuple(sorted((e1.value.real, e2.value.real)))
            for a in self.arcs:
                if max(abs(ends[0] - a.arc_span[0]), abs(ends[1] - a.arc_span[1])) < 1e-8:
                    return a, s
        raise ValueError("vertical side does not map onto a bottom arc")

    def image_slots(self, src_ids, src_pts, signed: int) -> list:
        """Reference slots for the deck image of stored source points."""
        g = self.letter_map(signed)
        out = []
        for vid, z in zip(src_ids, src_pts):
            w = g.apply(bp(complex(z))).value
            if abs(w.imag - self.env(w.real)) > 1e-6 * max(1.0, abs(w)):
                raise ValueError("seam image point left the bottom envelope")
            out.append((vid, (signed,), w, 1.0 / w.imag**2, None))
        return out

    def metric_spaced(self, y_of_x, x_lo, x_hi, h, samples=None) -> np.ndarray:
        """Interior x-points equally spaced in hyperbolic arclength."""
        n_fine = max(64, samples or 40 * self.ny)
        xs = np.linspace(x_lo, x_hi, n_fine)
        ys = np.array([y_of_x(x) for x in xs])
        dx = np.diff(xs)
        dy = np.diff(ys)
        seg = np.sqrt(dx**2 + dy**2) / (0.5 * (ys[1:] + ys[:-1]))
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        count = max(int(round(total / h)), 1)
        targets = np.linspace(0.0, total, count + 1)[1:-1]
        return np.interp(targets, s, xs)

    def bottom_row(self, anchor_groups) -> _Row:
        """Row 0: anchored slot groups plus metric-spaced bite fills."""
        slots = []
        for grp in anchor_groups:
            slots.extend(grp)
        slots.sort(key=lambda s: s[2].real)
        filled = [slots[0]]
        for nxt in slots[1:]:
            x0, x1 = filled[-1][2].real, nxt[2].real
            if x1 - x0 > 1e-10:
                for x in self.metric_spaced(self.env, x0, x1, self.h_target, 512):
                    y = self.env(x)
                    vid = self.b.vertex(complex(x, y), 1.0 / y**2, True, "core")
                    filled.append((vid, (), complex(x, y), 1.0 / y**2, None))
            if abs(x1 - x0) < 1e-12:
                continue
            filled.append(nxt)
        return _Row(filled)

    def interior_row(self, j: int, left_slot, right_slot, dirichlet=False) -> _Row:
        y_of_x = self.row_profile(j)
        xs = self.metric_spaced(y_of_x, self.x_l, self.x_r, self.h_target)
        slots = [left_slot]
        for x in xs:
            y = y_of_x(x)
            vid = self.b.vertex(complex(x, y), 1.0 / y**2, dirichlet, "core")
            slots.append((vid, (), complex(x, y), 1.0 / y**2, None))
        slots.append(right_slot)
        return _Row(slots)

    def stitch(self, rows: list[_Row], region="core"):
        def metric_len(a, b):
            za, zb = a[2], b[2]
            return abs(zb - za) * 2.0 / (za.imag + zb.imag)

        for ra, rb in zip(rows[:-1], rows[1:]):
            A, B = ra.slots, rb.slots
            i = k = 0
            while i < len(A) - 1 or k < len(B) - 1:
                can_a = i < len(A) - 1
                can_b = k < len(B) - 1
                if can_a and (not can_b or metric_len(A[i + 1], B[k]) <= metric_len(A[i], B[k + 1])):
                    self.b.triangle((A[i][:4], A[i + 1][:4], B[k][:4]), region)
                    i += 1
                else:
                    self.b.triangle((A[i][:4], B[k + 1][:4], B[k][:4]), region)
                    k += 1


def punctured_torus_mesh(
    coords=None,
    refine: int = 1,
    y_trunc: float = 3.0,
    target_letters: tuple[MobiusMap, ...] | None = None,
) -> EquivariantMesh:
    """Truncated once-punctured torus over its Fuchsian shadow development."""
    ct = once_punctured_torus().compiled()
    z = np.ones(3, dtype=complex) if coords is None else np.asarray(coords, complex)
    if np.abs(z.imag).max() > 1e-12 or np.any(z.real <= 0):
        raise ValueError("shadow coordinates must be positive reals")
    dev = develop(ct, z)
    rep = holonomy(dev)
    if classify(peripheral_monodromy(rep, ("puncture", 0))) != "parabolic":
        raise ValueError("peripheral monodromy is not parabolic (cusp incomplete)")

    core = _CoreBuilder(dev, rep, y_trunc, 8 * 2**refine, target_letters or rep.generators)
    if len(core.verticals) != 2 or len(core.arcs) != 2:
        raise ValueError("fundamental quadrilateral has an unexpected shape")

    left_ids = core.vertical_nodes(core.x_l)
    right_ids = core.vertical_nodes(core.x_r)
    cols = {core.x_l: left_ids, core.x_r: right_ids}

    groups = []
    claimed = set()
    for v, ids in ((core.verticals[0], left_ids), (core.verticals[1], right_ids)):
        arc, signed = core.match_vertical_to_arc(v)
        if arc.arc_span in claimed:
            raise ValueError("two verticals map onto the same arc")
        claimed.add(arc.arc_span)
        ys = np.geomspace(core.env(v.x_vertical), y_trunc, core.ny + 1)
        pts = [complex(v.x_vertical, y) for y in ys]
        groups.append(core.image_slots(ids, pts, signed))
    if len(claimed) != 2:
        raise ValueError("bottom arcs not fully claimed by the seam letters")

    def vert_slot(ids, x, j):
        y = np.geomspace(core.env(x), y_trunc, core.ny + 1)[j]
        return (ids[j], (), complex(x, y), 1.0 / y**2, None)

    rows = [core.bottom_row(groups + [[vert_slot(left_ids, core.x_l, 0)],
                                      [vert_slot(right_ids, core.x_r, 0)]])]
    for j in range(1, core.ny + 1):
        rows.append(
            core.interior_row(
                j,
                vert_slot(left_ids, core.x_l, j),
                vert_slot(right_ids, core.x_r, j),
                dirichlet=(j == core.ny),
            )
        )
    core.stitch(rows)

    mesh = core.b.finalize()
    mesh.meta.update(
        rep=rep, dev=dev, y_trunc=y_trunc, balls=core.balls, kind="punctured_torus"
    )
    return mesh


def crowned_torus_mesh(
    coords,
    refine: int = 1,
    y_trunc: float = 6.0,
    r_trunc: float = 8.0,
    target_letters: tuple[MobiusMap, ...] | None = None,
):
    """Truncated one-boundary torus: hyperbolic core plus a flat grafted strip.

    Returns (mesh, info); info carries the strip layout, the boundary
    geodesic, and the deck data used by the initial map and Hopf sampling.
    """
    ct = one_boundary_torus().compiled()
    z = np.asarray(coords, dtype=complex)
    if np.abs(z.imag).max() > 1e-12 or np.any(z.real <= 0):
        raise ValueError("shadow coordinates must be positive reals")
    dev = develop(ct, z)
    rep = holonomy(dev)
    deck = peripheral_monodromy(rep, ("boundary", 0))
    if classify(deck) != "loxodromic":
        raise ValueError("boundary monodromy is not loxodromic")

    core = _CoreBuilder(dev, rep, y_trunc, 8 * 2**refine, target_letters or rep.generators)
    if len(core.verticals) != 2 or len(core.arcs) != 3:
        raise ValueError("crowned fundamental domain has an unexpected shape")
    boundary_side = next(s for s in core.sides if s.letter == 0)
    if not boundary_side.is_vertical:
        raise ValueError("boundary geodesic is not a vertical side")
    seam_vertical = next(v for v in core.verticals if v.letter != 0)

    x_b = boundary_side.x_vertical
    x_s = seam_vertical.x_vertical
    seam_ids = core.vertical_nodes(x_s)
    bnd_ids = core.vertical_nodes(x_b)
    arc_a, signed_a = core.match_vertical_to_arc(seam_vertical)

    rest = [a for a in core.arcs if a.arc_span != arc_a.arc_span]
    pairing = None
    for a in rest:
        other = next(x for x in rest if x is not a)
        for s in (a.letter, -a.letter):
            g = core.letter_map(s)
            e1, e2 = g.apply(bp(a.ends[0])), g.apply(bp(a.ends[1]))
            if e1.is_infinity or e2.is_infinity:
                continue
            if abs(e1.value.imag) + abs(e2.value.imag) > 1e-8:
                continue
            ends = tuple(sorted((e1.value.real, e2.value.real)))
            if max(abs(ends[0] - other.arc_span[0]), abs(ends[1] - other.arc_span[1])) < 1e-8:
                pairing = (a, other, s)
                break
        if pairing:
            break
    if pairing is None:
        raise ValueError("could not pair the remaining bottom arcs")
    src_arc, dst_arc, arc_letter = pairing

    # source arc: stored, metric-spaced points between its horoball bites
    lo, hi = src_arc.arc_span
    fn_arc = lambda x: core.env(x)
    x_lo = _bisect_crossing(core, lo, (lo, hi))
    x_hi = _bisect_crossing(core, hi, (lo, hi))
    xs_src = np.concatenate(
        [[x_lo], core.metric_spaced(fn_arc, x_lo, x_hi, core.h_target, 512), [x_hi]]
    )
    src_ids, src_slots = [], []
    for i, x in enumerate(xs_src):
        y = core.env(x)
        diri = i in (0, len(xs_src) - 1)  # junction points on the horocircle
        vid = core.b.vertex(complex(x, y), 1.0 / y**2, diri, "core")
        src_ids.append(vid)
        src_slots.append((vid, (), complex(x, y), 1.0 / y**2, None))

    groups = [
        core.image_slots(
            seam_ids,
            [complex(x_s, y) for y in np.geomspace(core.env(x_s), y_trunc, core.ny + 1)],
            signed_a,
        ),
        src_slots,
        core.image_slots(
            src_ids, [complex(x, core.env(x)) for x in xs_src], arc_letter
        ),
    ]

    def vert_slot(ids, x, j):
        y = np.geomspace(core.env(x), y_trunc, core.ny + 1)[j]
        return (ids[j], (), complex(x, y), 1.0 / y**2, None)

    rows = [
        core.bottom_row(
            groups
            + [[vert_slot(seam_ids, x_s, 0)], [vert_slot(bnd_ids, x_b, 0)]]
        )
    ]
    for j in range(1, core.ny + 1):
        rows.append(
            core.interior_row(
                j,
                vert_slot(seam_ids, x_s, j) if x_s < x_b else vert_slot(bnd_ids, x_b, j),
                vert_slot(bnd_ids, x_b, j) if x_s < x_b else vert_slot(seam_ids, x_s, j),
                dirichlet=(j == core.ny),
            )
        )
    core.stitch(rows)

    # flat strip, chart 1: zeta = s + i h, s = -log(y) so the chart keeps the
    # surface orientation with h pointing into the grafted half-plane
    b = core.b
    bnd_ys = np.geomspace(core.env(x_b), y_trunc, core.ny + 1)
    svals = -np.log(bnd_ys)
    nh = max(4, int(round(r_trunc / abs(svals[1] - svals[0]))))
    hvals = np.linspace(0.0, r_trunc, nh + 1)
    strip_ids = np.empty((nh + 1, len(svals)), dtype=object)
    strip_ids[0, :] = bnd_ids
    for k in range(1, nh + 1):
        for j in range(len(svals)):
            diri = k == nh or j in (0, len(svals) - 1)
            strip_ids[k, j] = b.vertex(
                complex(svals[j], hvals[k]), 1.0, diri, "end", chart=1
            )

    def strip_slot(k, j):
        v = strip_ids[k, j]
        return (v, (), complex(svals[j], hvals[k]), 1.0)

    for k in range(nh):
        for j in range(len(svals) - 1):
            b.quad(
                strip_slot(k, j),
                strip_slot(k, j + 1),
                strip_slot(k + 1, j + 1),
                strip_slot(k + 1, j),
                "end",
                chart=1,
            )

    mesh = b.finalize()
    info = {
        "rep": rep,
        "dev": dev,
        "deck": deck,
        "boundary_x": x_b,
        "strip_ids": strip_ids,
        "strip_s": svals,
        "strip_h": hvals,
        "y_trunc": y_trunc,
        "r_trunc": r_trunc,
        "balls": core.balls,
        "kind": "crowned_torus",
    }
    mesh.meta.update(info)
    return mesh, info


def _bisect_crossing(core: _CoreBuilder, corner: float, span: tuple[float, float]):
    """x where the horoball bite at `corner` meets the semicircle over span."""
    lo, hi = span
    ctr, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    ball = core.balls[corner]
    r = 0.5 * ball.level

    def semi(x):
        return math.sqrt(max(rad**2 - (x - ctr) ** 2, 0.0))

    def bite(x):
        return r + math.sqrt(max(r**2 - (x - corner) ** 2, 0.0))

    a = corner
    bmid = ctr
    f = lambda x: semi(x) - bite(x)
    x0, x1 = (a, bmid) if a < bmid else (bmid, a)
    # restrict to the bite support
    x0 = max(x0, corner - r)
    x1 = min(x1, corner + r)
    f0, f1 = f(x0), f(x1)
    if f0 == 0:
        return x0
    if f1 == 0:
        return x1
    if f0 * f1 > 0:
        raise ValueError("horoball bite does not meet the arc")
    for _ in range(200):
        mid = 0.5 * (x0 + x1)
        fm = f(mid)
        if abs(fm) < 1e-14 or x1 - x0 < 1e-14:
            return mid
        if (fm > 0) == (f0 > 0):
            x0, f0 = mid, fm
        else:
            x1 = mid
    return 0.5 * (x0 + x1)
