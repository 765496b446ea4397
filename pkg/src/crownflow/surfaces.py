"""Marked/bordered surfaces, ideal triangulations, developing maps, holonomy.

Combinatorial conventions:

* a triangle has corners 0,1,2 in ccw order; side i runs from corner i to
  corner i+1 (mod 3);
* `gluing` pairs sides of distinct triangle/side slots, orientation-reversing:
  across the gluing (t,i)|(t',j), corner i of t is corner j+1 of t' and
  corner i+1 of t is corner j of t';
* internal edges are glued side pairs, boundary arcs are unglued sides;
* coordinates live on internal edges: the coordinate of an edge is the
  cross-ratio of the adjacent quadrilateral read ccw from a diagonal end,
  with the convention cross_ratio(inf,-1,0,z) = z;
* the fundamental region is the dual spanning tree (BFS from triangle 0);
  non-tree internal edges carry generator letters, words are tuples of
  signed letters (1-based), applied leftmost-first.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .halfspace import (
    INFTY,
    BoundaryPoint,
    Geodesic,
    MobiusMap,
    axis,
    bp,
    classify,
    cross_ratio,
    is_semisimple,
    mobius_from_triples,
    mobius_normalizer,
)

Corner = tuple[int, int]
Side = tuple[int, int]
Word = tuple[int, ...]


class DevelopmentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# surface data


@dataclass(frozen=True)
class MarkedBorderedSurface:
    genus: int
    boundary_marked: tuple[int, ...] = ()
    punctures: int = 0
    puncture_kinds: tuple[str, ...] = ()  # 'cusp' | 'cylinder' per interior puncture

    def __post_init__(self):
        if not self.puncture_kinds:
            object.__setattr__(self, "puncture_kinds", ("cusp",) * self.punctures)

    @property
    def chi_punctured(self) -> int:
        return 2 - 2 * self.genus - len(self.boundary_marked) - self.punctures


@dataclass
class SurfaceReport:
    valid: bool
    chi: int
    dimension: int  # N = 6g - 6 + sum(n_i + 3)
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def validate_surface(s: MarkedBorderedSurface) -> SurfaceReport:
    errors, warnings = [], []
    if s.genus < 0:
        errors.append("genus must be nonnegative")
    if s.punctures < 0:
        errors.append("puncture count must be nonnegative")
    for i, n in enumerate(s.boundary_marked):
        if n < 1:
            errors.append(f"boundary component {i} needs at least one marked point")
    if s.punctures == 0 and not s.boundary_marked:
        errors.append("marked set is empty")
    if len(s.puncture_kinds) != s.punctures:
        errors.append("puncture_kinds length must equal puncture count")
    for k in s.puncture_kinds:
        if k not in ("cusp", "cylinder"):
            errors.append(f"unknown puncture kind {k!r}")
    chi = s.chi_punctured
    if chi >= 0:
        errors.append(f"Euler characteristic of the punctured surface is {chi} >= 0")
    dim = 6 * s.genus - 6 + sum(n + 3 for n in s.boundary_marked)
    if s.genus == 0 and len(s.boundary_marked) == 1 and s.punctures == 0:
        warnings.append("disk case is out of scope (handled separately)")
    return SurfaceReport(not errors, chi, dim, errors, warnings)


# ---------------------------------------------------------------------------
# triangulations


@dataclass(frozen=True)
class IdealTriangulation:
    """Gluing data: n_triangles and an involution on glued sides."""

    n_triangles: int
    gluing: tuple[tuple[Side, Side], ...]  # each internal edge once

    def compiled(self) -> "CompiledTriangulation":
        return CompiledTriangulation(self)


class CompiledTriangulation:
    """Derived combinatorics: vertices, edges, dual tree, words, quad tables."""

    def __init__(self, tri: IdealTriangulation):
        self.tri = tri
        self.F = tri.n_triangles
        glue: dict[Side, Side] = {}
        for s1, s2 in tri.gluing:
            if s1 in glue or s2 in glue or s1 == s2:
                raise ValueError(f"bad gluing pair {s1} {s2}")
            glue[s1] = s2
            glue[s2] = s1
        self.glue = glue
        self.sides = [(t, i) for t in range(self.F) for i in range(3)]
        for s in glue:
            if s not in set(self.sides):
                raise ValueError(f"glued side {s} out of range")
        self.boundary_sides = [s for s in self.sides if s not in glue]
        # internal edges, ordered by their lexicographically smaller side
        seen = set()
        self.edges: list[tuple[Side, Side]] = []
        for s in self.sides:
            if s in glue and s not in seen:
                s2 = glue[s]
                seen.add(s)
                seen.add(s2)
                self.edges.append((min(s, s2), max(s, s2)))
        self.edges.sort()
        self.edge_of_side = {}
        for k, (s1, s2) in enumerate(self.edges):
            self.edge_of_side[s1] = k
            self.edge_of_side[s2] = k
        self.n_edges = len(self.edges)
        self._build_vertices()
        self._build_tree()
        self._build_lift_classes()
        self._build_peripherals()
        self._build_quads()

    # corner moves ---------------------------------------------------------
    def next_corner(self, c: Corner) -> Corner | None:
        t, i = c
        s = self.glue.get((t, i))
        if s is None:
            return None
        return (s[0], (s[1] + 1) % 3)

    def prev_corner(self, c: Corner) -> Corner | None:
        t, i = c
        s = self.glue.get((t, (i - 1) % 3))
        if s is None:
            return None
        return s

    def _build_vertices(self):
        corners = [(t, i) for t in range(self.F) for i in range(3)]
        unvisited = set(corners)
        self.vertex_of = {}
        self.vertex_cycles: list[list[Corner]] = []  # corner walk per vertex
        self.vertex_interior: list[bool] = []
        while unvisited:
            c0 = min(unvisited)
            # rewind to a boundary start if there is one
            start, seen = c0, {c0}
            while True:
                p = self.prev_corner(start)
                if p is None or p in seen:
                    break
                seen.add(p)
                start = p
            walk, cur = [start], start
            while True:
                n = self.next_corner(cur)
                if n is None or n == start:
                    break
                walk.append(n)
                cur = n
            interior = self.next_corner(cur) == start
            v = len(self.vertex_cycles)
            self.vertex_cycles.append(walk)
            self.vertex_interior.append(interior)
            for c in walk:
                self.vertex_of[c] = v
                unvisited.discard(c)
        self.n_vertices = len(self.vertex_cycles)
        self.interior_vertices = [
            v for v in range(self.n_vertices) if self.vertex_interior[v]
        ]
        self.chi = self.n_vertices - (self.n_edges + len(self.boundary_sides)) + self.F

    def _build_tree(self):
        """Dual BFS tree; non-tree internal edges become generator letters."""
        self.tree_sides: set[Side] = set()
        self.seam_dir: dict[int, Side] = {}  # letter -> canonical crossing side
        self.letter_of_edge: dict[int, int] = {}
        placed = [False] * self.F
        placed[0] = True
        queue = [0]
        order = [0]
        edge_seen = set()
        seams: list[int] = []
        while queue:
            t = queue.pop(0)
            for i in range(3):
                s2 = self.glue.get((t, i))
                if s2 is None:
                    continue
                e = self.edge_of_side[(t, i)]
                if e in edge_seen:
                    continue
                edge_seen.add(e)
                if not placed[s2[0]]:
                    placed[s2[0]] = True
                    self.tree_sides.add((t, i))
                    self.tree_sides.add(s2)
                    queue.append(s2[0])
                    order.append(s2[0])
                else:
                    letter = len(seams)
                    seams.append(e)
                    self.seam_dir[letter] = (t, i)
                    self.letter_of_edge[e] = letter
        if not all(placed):
            raise ValueError("triangulation is not connected")
        self.bfs_order = order
        self.n_letters = len(seams)

    def crossing_letter(self, side: Side) -> int:
        """Signed letter for crossing through `side`; 0 for tree sides."""
        if side in self.tree_sides:
            return 0
        e = self.edge_of_side.get(side)
        if e is None:
            raise ValueError(f"cannot cross boundary side {side}")
        letter = self.letter_of_edge[e]
        return letter + 1 if self.seam_dir[letter] == side else -(letter + 1)

    def _build_lift_classes(self):
        """Corner lift classes under tree-only moves, with deck words.

        placed(corner) = rho(word)^{-1} . framing(vertex) for the corner's word.
        """
        parent = {c: c for c in self.vertex_of}

        def find(c):
            while parent[c] != c:
                parent[c] = parent[parent[c]]
                c = parent[c]
            return c

        for c in self.vertex_of:
            n = self.next_corner(c)
            if n is not None and (c[0], c[1]) in self.tree_sides:
                ra, rb = find(c), find(n)
                if ra != rb:
                    parent[ra] = rb
        roots = sorted({find(c) for c in self.vertex_of})
        self.lift_class_of = {c: roots.index(find(c)) for c in self.vertex_of}
        self.n_lift_classes = len(roots)
        # words along each vertex walk
        self.lift_word: list[Word | None] = [None] * self.n_lift_classes
        self.peripheral_word_of_vertex: dict[int, Word] = {}
        for v, walk in enumerate(self.vertex_cycles):
            w: Word = ()
            lc0 = self.lift_class_of[walk[0]]
            if self.lift_word[lc0] is None:
                self.lift_word[lc0] = ()
            for c in walk:
                lc = self.lift_class_of[c]
                if self.lift_word[lc] is None:
                    self.lift_word[lc] = w
                n = self.next_corner(c)
                if n is not None:
                    letter = self.crossing_letter((c[0], c[1]))
                    if letter:
                        w = w + (letter,)
            if self.vertex_interior[v]:
                self.peripheral_word_of_vertex[v] = w
        self.canonical_lift = [None] * self.n_vertices
        for v, walk in enumerate(self.vertex_cycles):
            self.canonical_lift[v] = self.lift_class_of[walk[0]]
        self.vertex_of_lift = [None] * self.n_lift_classes
        for c, lc in self.lift_class_of.items():
            self.vertex_of_lift[lc] = self.vertex_of[c]

    def _build_peripherals(self):
        """Boundary cycles with prefix words: lifts of the boundary arcs."""
        self.boundary_cycles: list[list[Side]] = []
        self.boundary_prefix_words: list[list[Word]] = []
        self.boundary_cycle_words: list[Word] = []
        todo = set(self.boundary_sides)
        while todo:
            b0 = min(todo)
            arcs, prefixes = [], []
            w: Word = ()
            b = b0
            while True:
                arcs.append(b)
                prefixes.append(w)
                todo.discard(b)
                # rotate around the head vertex of b until the next boundary side
                c = (b[0], (b[1] + 1) % 3)
                while True:
                    side = (c[0], c[1])
                    if side not in self.glue:
                        break
                    letter = self.crossing_letter(side)
                    if letter:
                        w = w + (letter,)
                    c = self.next_corner(c)
                b = (c[0], c[1])
                if b == b0:
                    break
            self.boundary_cycles.append(arcs)
            self.boundary_prefix_words.append(prefixes)
            self.boundary_cycle_words.append(w)

    def _build_quads(self):
        """Per edge: the four quad slots ccw from a diagonal end.

        Slot = (corner, extra_letter or 0).  Values are
        rho(extra) . rho(lift_word)^{-1} . framing(vertex).
        Quad order (P_i, R, P_{i+1}, P_{i+2}) for edge sides (t,i)|(t',j),
        with the crossing side chosen as a tree side when available, else the
        seam's canonical direction.
        """
        self.quads: list[tuple[tuple[Corner, int], ...]] = []
        for s1, s2 in self.edges:
            side = s1
            if side not in self.tree_sides:
                letter = self.letter_of_edge[self.edge_of_side[side]]
                side = self.seam_dir[letter]
            t, i = side
            t2, j = self.glue[side]
            extra = 0 if side in self.tree_sides else self.crossing_letter(side)
            slots = (
                ((t, i), 0),
                ((t2, (j + 2) % 3), extra),
                ((t, (i + 1) % 3), 0),
                ((t, (i + 2) % 3), 0),
            )
            self.quads.append(slots)

    # queries ---------------------------------------------------------------
    def boundary_marked_counts(self) -> list[int]:
        return [len(c) for c in self.boundary_cycles]

    def matches_surface(self, s: MarkedBorderedSurface) -> list[str]:
        errs = []
        if sorted(self.boundary_marked_counts()) != sorted(s.boundary_marked):
            errs.append("boundary marked-point counts do not match the surface")
        if len(self.interior_vertices) != s.punctures:
            errs.append("interior puncture count does not match the surface")
        chi_closed = 2 - 2 * s.genus - len(s.boundary_marked)
        if self.chi != chi_closed:
            errs.append(
                f"triangulation Euler characteristic {self.chi} != {chi_closed}"
            )
        return errs


# ---------------------------------------------------------------------------
# fixtures


def once_punctured_torus() -> IdealTriangulation:
    return IdealTriangulation(2, (((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 2), (1, 2))))


def one_boundary_torus() -> IdealTriangulation:
    """Genus one, one boundary component with a single marked point."""
    return IdealTriangulation(
        3,
        (((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 2), (2, 0)), ((1, 2), (2, 1))),
    )


# ---------------------------------------------------------------------------
# development


@dataclass
class DevelopedTriangulation:
    tri: CompiledTriangulation
    coords: np.ndarray  # complex, one per internal edge
    placements: list[tuple[BoundaryPoint, BoundaryPoint, BoundaryPoint]]
    collars: dict[Side, tuple[BoundaryPoint, BoundaryPoint, BoundaryPoint]]

    def placed(self, corner: Corner) -> BoundaryPoint:
        return self.placements[corner[0]][corner[1]]

    def recompute_coords(self) -> np.ndarray:
        """Cross-ratios of the placed quads; equals `coords` for a consistent
        development."""
        out = np.empty(self.tri.n_edges, dtype=complex)
        for k, slots in enumerate(self.tri.quads):
            vals = []
            for corner, extra in slots:
                if extra == 0:
                    vals.append(self.placed(corner))
                else:
                    side = self.tri.seam_dir[abs(extra) - 1]
                    vals.append(self.collars[side][corner[1]])
            out[k] = cross_ratio(*vals)
        return out


def develop(
    tri: CompiledTriangulation | IdealTriangulation,
    coords,
    merge_tol: float = 1e-12,
) -> DevelopedTriangulation:
    """Place the fundamental region (plus a one-triangle collar) in CP^1."""
    ct = tri if isinstance(tri, CompiledTriangulation) else tri.compiled()
    z = np.asarray(coords, dtype=complex)
    if z.shape != (ct.n_edges,):
        raise ValueError(f"need {ct.n_edges} edge coordinates")
    if np.any(z == 0):
        raise ValueError("coordinates must be nonzero")

    placements: list = [None] * ct.F
    placements[0] = (INFTY, bp(-1), bp(0))

    def fourth_vertex(tri_pts, i, ze, edge_id):
        p_i = tri_pts[i]
        p_i1 = tri_pts[(i + 1) % 3]
        p_i2 = tri_pts[(i + 2) % 3]
        n = mobius_normalizer(p_i1, p_i2, p_i)
        r = n.inverse().apply(bp(ze))
        for q in (p_i, p_i1, p_i2):
            if r.chordal(q) < merge_tol:
                raise DevelopmentError(
                    f"degenerate placement across edge {edge_id}: "
                    f"new vertex coincides with a quad vertex"
                )
        return r

    queue = [0]
    seen_edges = set()
    collars = {}
    while queue:
        t = queue.pop(0)
        pts = placements[t]
        for i in range(3):
            s2 = ct.glue.get((t, i))
            if s2 is None:
                continue
            e = ct.edge_of_side[(t, i)]
            t2, j = s2
            if (t, i) in ct.tree_sides and placements[t2] is None:
                r = fourth_vertex(pts, i, z[e], e)
                tripts = [None] * 3
                tripts[j] = pts[(i + 1) % 3]
                tripts[(j + 1) % 3] = pts[i]
                tripts[(j + 2) % 3] = r
                placements[t2] = tuple(tripts)
                queue.append(t2)
            seen_edges.add(e)
    # collar placements across each seam's canonical side
    for letter, side in ct.seam_dir.items():
        t, i = side
        t2, j = ct.glue[side]
        pts = placements[t]
        e = ct.edge_of_side[side]
        r = fourth_vertex(pts, i, z[e], e)
        tripts = [None] * 3
        tripts[j] = pts[(i + 1) % 3]
        tripts[(j + 1) % 3] = pts[i]
        tripts[(j + 2) % 3] = r
        collars[side] = tuple(tripts)
    return DevelopedTriangulation(ct, z, placements, collars)


# ---------------------------------------------------------------------------
# framed representations


@dataclass
class FramedRepresentation:
    tri: CompiledTriangulation
    generators: tuple[MobiusMap, ...]
    framing: dict[int, BoundaryPoint]  # vertex class -> canonical value
    relator_residual: float = 0.0

    def letter(self, signed: int) -> MobiusMap:
        m = self.generators[abs(signed) - 1]
        return m if signed > 0 else m.inverse()

    def evaluate_word(self, word: Word) -> MobiusMap:
        m = MobiusMap.identity()
        for l in word:
            m = m @ self.letter(l)
        return m

    def framing_at_corner(self, corner: Corner) -> BoundaryPoint:
        """Framing value of the corner's lift in the fundamental region."""
        lc = self.tri.lift_class_of[corner]
        v = self.tri.vertex_of[corner]
        w = self.tri.lift_word[lc]
        return self.evaluate_word(w).inverse().apply(self.framing[v])

    def all_lift_values(self) -> list[BoundaryPoint]:
        out = []
        for lc in range(self.tri.n_lift_classes):
            v = self.tri.vertex_of_lift[lc]
            w = self.tri.lift_word[lc]
            out.append(self.evaluate_word(w).inverse().apply(self.framing[v]))
        return out

    def conjugate(self, m: MobiusMap) -> "FramedRepresentation":
        gens = tuple(m @ g @ m.inverse() for g in self.generators)
        fr = {v: m.apply(p) for v, p in self.framing.items()}
        return FramedRepresentation(self.tri, gens, fr, self.relator_residual)


def holonomy(dev: DevelopedTriangulation) -> FramedRepresentation:
    """Generator images carrying tree placements to collar placements."""
    ct = dev.tri
    gens = []
    for letter in range(ct.n_letters):
        side = ct.seam_dir[letter]
        t2 = ct.glue[side][0]
        src = dev.placements[t2]
        dst = dev.collars[side]
        if min(src[0].chordal(src[1]), src[1].chordal(src[2]), src[0].chordal(src[2])) < 1e-12:
            raise DevelopmentError(f"ill-conditioned triple for generator {letter}")
        gens.append(mobius_from_triples(src, dst))
    framing = {}
    for v in range(ct.n_vertices):
        walk = ct.vertex_cycles[v]
        framing[v] = dev.placed(walk[0])
    rep = FramedRepresentation(ct, tuple(gens), framing)
    rep.relator_residual = consistency_residual(rep, dev)
    return rep


def consistency_residual(rep: FramedRepresentation, dev: DevelopedTriangulation | None = None) -> float:
    """Development-consistency residual (plays the role of a relator check).

    Max chordal error over: peripheral monodromies fixing their framing value,
    lift-class words reproducing placed corners, and seam maps reproducing
    collar triples.
    """
    ct = rep.tri
    res = 0.0
    for v, word in ct.peripheral_word_of_vertex.items():
        m = rep.evaluate_word(word)
        p = rep.framing[v]
        res = max(res, m.apply(p).chordal(p))
    if dev is not None:
        for c in ct.vertex_of:
            res = max(res, rep.framing_at_corner(c).chordal(dev.placed(c)))
        for letter in range(ct.n_letters):
            side = ct.seam_dir[letter]
            t2 = ct.glue[side][0]
            g = rep.generators[letter]
            for k in range(3):
                got = g.apply(dev.placements[t2][k])
                res = max(res, got.chordal(dev.collars[side][k]))
    return res


def fg_from_rep(rep: FramedRepresentation, tol: float = 1e-10) -> np.ndarray:
    """Edge coordinates recomputed from framing values through the quad table."""
    ct = rep.tri
    out = np.empty(ct.n_edges, dtype=complex)
    for k, slots in enumerate(ct.quads):
        vals = []
        for corner, extra in slots:
            p = rep.framing_at_corner(corner)
            if extra:
                p = rep.letter(extra).apply(p)
            vals.append(p)
        for a in range(4):
            for b in range(a + 1, 4):
                if vals[a].chordal(vals[b]) < tol:
                    raise DevelopmentError(f"edge {k} degenerate: coincident framing values")
        out[k] = cross_ratio(*vals)
    return out


def fuchsian_shadow(coords) -> np.ndarray:
    z = np.asarray(coords, dtype=complex)
    return np.abs(z).astype(complex)


def bend(rep: FramedRepresentation, arguments) -> FramedRepresentation:
    """Recombine |z_e| with prescribed arguments and rebuild the holonomy."""
    mods = np.abs(fg_from_rep(rep))
    z = mods * np.exp(1j * np.asarray(arguments, dtype=float))
    return holonomy(develop(rep.tri, z))


# ---------------------------------------------------------------------------
# peripheral structure


def peripheral_ends(ct: CompiledTriangulation) -> list[tuple]:
    """All ends: ('puncture', vertex) then ('boundary', cycle index)."""
    ends = [("puncture", v) for v in ct.interior_vertices]
    ends += [("boundary", i) for i in range(len(ct.boundary_cycles))]
    return ends


def peripheral_word(ct: CompiledTriangulation, end) -> Word:
    kind, idx = end
    if kind == "puncture":
        return ct.peripheral_word_of_vertex[idx]
    return ct.boundary_cycle_words[idx]


def peripheral_monodromy(rep: FramedRepresentation, end) -> MobiusMap:
    return rep.evaluate_word(peripheral_word(rep.tri, end))


def is_type_preserving(
    rep: FramedRepresentation, surface: MarkedBorderedSurface, tol: float = 1e-9
) -> tuple[bool, list[str]]:
    """Cusps must be parabolic, cylinder punctures and crowns loxodromic."""
    ct = rep.tri
    problems = []
    kinds = dict(zip(ct.interior_vertices, surface.puncture_kinds))
    for end in peripheral_ends(ct):
        m = peripheral_monodromy(rep, end)
        c = classify(m, tol)
        if c == "identity":
            problems.append(f"{end}: trivial peripheral monodromy")
            continue
        want = "parabolic"
        if end[0] == "boundary" or kinds.get(end[1]) == "cylinder":
            want = "loxodromic"
        if c != want:
            problems.append(f"{end}: monodromy is {c}, expected {want}")
    return (not problems, problems)


def classify_degenerate(
    rep: FramedRepresentation, tol: float = 1e-8
) -> tuple[str, int | None]:
    """('nondegenerate', None) or ('degenerate', case) per the three cases."""
    ct = rep.tri
    values = rep.all_lift_values()
    periph = [peripheral_monodromy(rep, e) for e in peripheral_ends(ct)]

    # case 1: framing image one point, all peripherals parabolic fixing it
    p = values[0]
    if all(p.chordal(q) < tol for q in values):
        ok = all(
            classify(m) == "identity"
            or (classify(m) == "parabolic" and m.apply(p).chordal(p) < tol)
            for m in periph
        )
        if ok:
            return ("degenerate", 1)

    # case 2: framing image two points, all peripherals fix both
    reps: list[BoundaryPoint] = []
    for q in values:
        if not any(q.chordal(r) < tol for r in reps):
            reps.append(q)
    if len(reps) == 2:
        pq = reps
        ok = all(
            m.apply(x).chordal(x) < tol for m in periph for x in pq
        )
        if ok:
            return ("degenerate", 2)

    # case 3: a boundary arc whose endpoint lifts share a framing value
    for arcs in ct.boundary_cycles:
        for (t, i) in arcs:
            a = rep.framing_at_corner((t, i))
            b = rep.framing_at_corner((t, (i + 1) % 3))
            if a.chordal(b) < tol:
                return ("degenerate", 3)
    return ("nondegenerate", None)


# ---------------------------------------------------------------------------
# semi-simple pair search


def _axes_distinct(g1: Geodesic, g2: Geodesic, tol: float) -> bool:
    d_same = max(g1.p1.chordal(g2.p1), g1.p2.chordal(g2.p2))
    d_swap = max(g1.p1.chordal(g2.p2), g1.p2.chordal(g2.p1))
    return min(d_same, d_swap) > tol


class _PairFound(Exception):
    def __init__(self, w1: Word, w2: Word):
        self.pair = (w1, w2)


def semisimple_pair(
    rep: FramedRepresentation,
    max_len: int = 8,
    n_sweep: int = 64,
    axis_tol: float = 1e-8,
) -> tuple[Word, Word]:
    """Two words with semi-simple images on distinct axes (exists for
    nondegenerate type-preserving input)."""
    letters = [l for k in range(rep.tri.n_letters) for l in (k + 1, -(k + 1))]
    found: list[tuple[Word, Geodesic]] = []
    parabolics: list[tuple[Word, MobiusMap]] = []

    def consider(word: Word, m: MobiusMap):
        kind = classify(m)
        if kind in ("elliptic", "loxodromic"):
            g = axis(m)
            for w0, g0 in found:
                if _axes_distinct(g0, g, axis_tol):
                    raise _PairFound(w0, word)
            found.append((word, g))
        elif kind == "parabolic":
            for w0, m0 in parabolics:
                if m0.fixed_points()[0].chordal(m.fixed_points()[0]) > axis_tol:
                    # sweep alpha^n delta until it leaves the parabolic locus
                    acc = m
                    for n in range(1, n_sweep + 1):
                        acc = m0 @ acc
                        if classify(acc) in ("elliptic", "loxodromic"):
                            consider(w0 * n + word, acc)
                            break
            parabolics.append((word, m))

    try:
        frontier: list[tuple[Word, MobiusMap]] = [((), MobiusMap.identity())]
        for _ in range(max_len):
            nxt = []
            for word, m in frontier:
                for l in letters:
                    if word and word[-1] == -l:
                        continue
                    w2 = word + (l,)
                    m2 = m @ rep.letter(l)
                    consider(w2, m2)
                    nxt.append((w2, m2))
            frontier = nxt
    except _PairFound as f:
        return f.pair
    raise ValueError(f"no semi-simple pair found up to word length {max_len}")
