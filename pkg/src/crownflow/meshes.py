"""Truncated equivariant meshes with deck-word transport.

A mesh stores one canonical vertex per quotient point.  Triangles carry, per
slot, the referenced vertex, a deck word (target isometry id) and the slot's
position in the triangle's own chart; a slot's map value is rho(word) applied
to the canonical value.  Tension assembly works on per-vertex wedges reframed
so the owner's word is trivial, which keeps every accumulated quantity an
ambient tensor at the owner's point: cotangent weights and flat-chart
gradients are conformally invariant, the vertex mass carries dvol_g.

Charts only matter at build time (positions, conformal factors); runtime
state is a plain (N, 3) array of upper half-space points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .halfspace import MobiusMap, bp
from .surfaces import FramedRepresentation

Word = tuple[int, ...]


def reduce_word(w) -> Word:
    out = []
    for l in w:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def invert_word(w) -> Word:
    return tuple(-l for l in reversed(w))


class WordTable:
    """Registry of deck words with resolved target isometries."""

    def __init__(self, letters: tuple[MobiusMap, ...]):
        self.letters = letters
        self.keys: list[Word] = [()]
        self.maps: list[MobiusMap] = [MobiusMap.identity()]
        self._index: dict[Word, int] = {(): 0}

    def resolve(self, word) -> int:
        key = reduce_word(word)
        if key in self._index:
            return self._index[key]
        m = MobiusMap.identity()
        for l in key:
            g = self.letters[abs(l) - 1]
            m = m @ (g if l > 0 else g.inverse())
        idx = len(self.keys)
        self.keys.append(key)
        self.maps.append(m)
        self._index[key] = idx
        return idx


@dataclass
class EquivariantMesh:
    pos: np.ndarray  # complex canonical chart positions (diagnostics only)
    chart: np.ndarray  # int chart id per vertex
    lam2: np.ndarray  # conformal factor at the canonical position
    dirichlet: np.ndarray  # bool
    region: np.ndarray  # small str codes: 'core', 'end', ...
    words: WordTable
    # triangle arrays
    tri_v: np.ndarray  # (T,3) vertex ids
    tri_w: np.ndarray  # (T,3) word ids
    tri_gx: np.ndarray  # (T,3) gradient coefficients (d/dx of linear interp)
    tri_gy: np.ndarray
    tri_area: np.ndarray  # (T,) flat chart area
    tri_lam2: np.ndarray  # (T,) mean conformal factor over the slots
    tri_region: np.ndarray  # str codes per triangle
    # wedge arrays (one per triangle corner, reframed to the owner)
    wed_v: np.ndarray
    wed_n1: np.ndarray
    wed_n2: np.ndarray
    wed_w1: np.ndarray
    wed_w2: np.ndarray
    wed_c1: np.ndarray  # half-cot weight of edge (v, n1)
    wed_c2: np.ndarray
    wed_gx: np.ndarray  # (W,3) gradient coefficients for slots (v, n1, n2)
    wed_gy: np.ndarray
    wed_a3: np.ndarray  # flat area / 3
    wed_a3lam: np.ndarray  # (area/3) * lambda^2 at the owner slot
    mass: np.ndarray  # (N,) lumped dvol_g
    h_mesh: float
    value_checks: list[tuple[int, int, int]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.pos)

    @property
    def free(self) -> np.ndarray:
        return ~self.dirichlet

    def gather(self, u: np.ndarray, idx: np.ndarray, wid: np.ndarray) -> np.ndarray:
        """rho(word) applied to u[idx], grouped by word id."""
        out = u[idx].copy()
        for w in np.unique(wid):
            if w == 0:
                continue
            sel = wid == w
            out[sel] = self.words.maps[w].apply_h3(out[sel])
        return out

    def cfl_dt(self, cfl: float = 0.2) -> float:
        """dt bound ~ cfl * min(lambda^2 h^2): 4*cfl*min(mass/sum|w|)."""
        wsum = np.zeros(self.n_vertices)
        np.add.at(wsum, self.wed_v, np.abs(self.wed_c1) + np.abs(self.wed_c2))
        sel = self.free
        return float(4.0 * cfl * np.min(self.mass[sel] / np.maximum(wsum[sel], 1e-300)))

    def equivariance_residual(self, u: np.ndarray) -> float:
        """Max holonomy-consistency error over registered word-pair checks."""
        from .halfspace import dist_h3

        res = 0.0
        for v, wa, wb in self.value_checks:
            pa = self.words.maps[wa].apply_h3(u[v])
            pb = self.words.maps[wb].apply_h3(u[v])
            res = max(res, float(dist_h3(pa, pb)))
        return res


class MeshBuilder:
    def __init__(self, letters: tuple[MobiusMap, ...]):
        self.words = WordTable(letters)
        self.pos: list[complex] = []
        self.chart: list[int] = []
        self.lam2: list[float] = []
        self.dirichlet: list[bool] = []
        self.region: list[str] = []
        self.tris: list[tuple] = []  # (chart, region, slots); slot = (v, word_key, pos, lam2)
        self.value_checks: list[tuple[int, Word, Word]] = []
        self.meta: dict = {}

    def vertex(self, pos: complex, lam2: float, dirichlet: bool, region: str, chart: int = 0) -> int:
        self.pos.append(complex(pos))
        self.chart.append(chart)
        self.lam2.append(float(lam2))
        self.dirichlet.append(bool(dirichlet))
        self.region.append(region)
        return len(self.pos) - 1

    def triangle(self, slots, region: str, chart: int = 0):
        """slots: three (vertex_id, word, position, lam2) tuples; reordered ccw."""
        p = [complex(s[2]) for s in slots]
        signed = ((p[1] - p[0]).conjugate() * (p[2] - p[0])).imag
        if signed < 0:
            slots = (slots[0], slots[2], slots[1])
        self.tris.append((chart, region, tuple(slots)))

    def quad(self, s00, s10, s11, s01, region: str, chart: int = 0):
        self.triangle((s00, s10, s11), region, chart)
        self.triangle((s00, s11, s01), region, chart)

    def check(self, v: int, wa, wb):
        self.value_checks.append((v, reduce_word(wa), reduce_word(wb)))

    def finalize(self) -> EquivariantMesh:
        nt = len(self.tris)
        tri_v = np.zeros((nt, 3), dtype=np.int64)
        tri_w = np.zeros((nt, 3), dtype=np.int64)
        tri_gx = np.zeros((nt, 3))
        tri_gy = np.zeros((nt, 3))
        tri_area = np.zeros(nt)
        tri_lam2 = np.zeros(nt)
        tri_region = np.empty(nt, dtype=object)
        wed = {k: [] for k in ("v", "n1", "n2", "w1", "w2", "c1", "c2", "a3", "a3lam")}
        wed_gx, wed_gy = [], []
        h_max = 0.0

        for t, (chart, region, slots) in enumerate(self.tris):
            vids = [s[0] for s in slots]
            wkeys = [reduce_word(s[1]) for s in slots]
            p = [complex(s[2]) for s in slots]
            l2 = [float(s[3]) for s in slots]
            area = 0.5 * ((p[1] - p[0]).conjugate() * (p[2] - p[0])).imag
            if area <= 0:
                raise ValueError(f"degenerate or misoriented triangle {t}")
            # linear interpolation gradients: grad hat_k = i*(p_{k+2}-p_{k+1})/(2A)
            gx, gy = [], []
            for k in range(3):
                e = p[(k + 2) % 3] - p[(k + 1) % 3]
                g = 1j * e / (2 * area)
                gx.append(g.real)
                gy.append(g.imag)
            # orientation check: gradients must reproduce linear functions
            tri_v[t] = vids
            tri_w[t] = [self.words.resolve(k) for k in wkeys]
            tri_gx[t] = gx
            tri_gy[t] = gy
            tri_area[t] = area
            tri_lam2[t] = sum(l2) / 3.0
            tri_region[t] = region
            lam_edge = [math.sqrt(x) for x in l2]
            for k in range(3):
                e = abs(p[(k + 1) % 3] - p[k]) * 0.5 * (lam_edge[k] + lam_edge[(k + 1) % 3])
                h_max = max(h_max, e)
            # cot weights per corner
            cots = []
            for k in range(3):
                a = p[(k + 1) % 3] - p[k]
                b = p[(k + 2) % 3] - p[k]
                cross = (a * b.conjugate()).imag
                dot = (a * b.conjugate()).real
                cots.append(dot / abs(cross))
            for k in range(3):
                k1, k2 = (k + 1) % 3, (k + 2) % 3
                inv = invert_word(wkeys[k])
                w1 = reduce_word(inv + wkeys[k1])
                w2 = reduce_word(inv + wkeys[k2])
                wed["v"].append(vids[k])
                wed["n1"].append(vids[k1])
                wed["n2"].append(vids[k2])
                wed["w1"].append(self.words.resolve(w1))
                wed["w2"].append(self.words.resolve(w2))
                # edge (v,n1) is opposite corner k2, edge (v,n2) opposite k1
                wed["c1"].append(0.5 * cots[k2])
                wed["c2"].append(0.5 * cots[k1])
                wed["a3"].append(area / 3.0)
                wed["a3lam"].append(area / 3.0 * l2[k])
                wed_gx.append((gx[k], gx[k1], gx[k2]))
                wed_gy.append((gy[k], gy[k1], gy[k2]))

        n = len(self.pos)
        mass = np.zeros(n)
        np.add.at(mass, np.array(wed["v"], dtype=np.int64), np.array(wed["a3lam"]))
        mesh = EquivariantMesh(
            pos=np.array(self.pos, dtype=complex),
            chart=np.array(self.chart, dtype=np.int64),
            lam2=np.array(self.lam2),
            dirichlet=np.array(self.dirichlet, dtype=bool),
            region=np.array(self.region, dtype=object),
            words=self.words,
            tri_v=tri_v,
            tri_w=tri_w,
            tri_gx=tri_gx,
            tri_gy=tri_gy,
            tri_area=tri_area,
            tri_lam2=tri_lam2,
            tri_region=tri_region,
            wed_v=np.array(wed["v"], dtype=np.int64),
            wed_n1=np.array(wed["n1"], dtype=np.int64),
            wed_n2=np.array(wed["n2"], dtype=np.int64),
            wed_w1=np.array(wed["w1"], dtype=np.int64),
            wed_w2=np.array(wed["w2"], dtype=np.int64),
            wed_c1=np.array(wed["c1"]),
            wed_c2=np.array(wed["c2"]),
            wed_gx=np.array(wed_gx),
            wed_gy=np.array(wed_gy),
            wed_a3=np.array(wed["a3"]),
            wed_a3lam=np.array(wed["a3lam"]),
            mass=mass,
            h_mesh=h_max,
            value_checks=[
                (v, self.words.resolve(a), self.words.resolve(b))
                for v, a, b in self.value_checks
            ],
            meta=dict(self.meta),
        )
        _validate_rings(mesh)
        return mesh


def _validate_rings(mesh: EquivariantMesh):
    """Every quotient edge at a free vertex must be shared by two wedge spokes.

    Spokes that pair up only across distinct deck words witness a ring
    monodromy relation; they must agree as isometries and are registered as
    runtime equivariance checks.
    """
    from collections import Counter, defaultdict

    spokes = Counter()
    for v, n1, n2, w1, w2 in zip(
        mesh.wed_v, mesh.wed_n1, mesh.wed_n2, mesh.wed_w1, mesh.wed_w2
    ):
        spokes[(int(v), int(n1), int(w1))] += 1
        spokes[(int(v), int(n2), int(w2))] += 1
    odd = defaultdict(list)
    for (v, n, w), count in spokes.items():
        if mesh.dirichlet[v]:
            continue
        if count % 2 != 0:
            odd[(v, n)].append(w)
    bad = []
    for (v, n), ws in odd.items():
        if len(ws) % 2 != 0:
            bad.append((v, n, ws))
            continue
        ws.sort()
        for a, b in zip(ws[::2], ws[1::2]):
            ma, mb = mesh.words.maps[a], mesh.words.maps[b]
            if not ma.same_psl(mb, 1e-8):
                raise ValueError(
                    f"inconsistent deck words {mesh.words.keys[a]} vs "
                    f"{mesh.words.keys[b]} around vertex {v}"
                )
            mesh.value_checks.append((n, a, b))
    if bad:
        raise ValueError(f"mesh rings do not close at {len(bad)} spokes, e.g. {bad[:4]}")


# ---------------------------------------------------------------------------
# flat fixtures


def rect_chart_mesh(
    nx: int,
    ny: int,
    x0: float = 0.0,
    x1: float = 1.0,
    y0: float = 0.0,
    y1: float = 1.0,
    lam2_fn=None,
    region: str = "core",
) -> EquivariantMesh:
    """Plain Dirichlet-boundary grid chart (tests and oracles)."""
    b = MeshBuilder(())
    lam2_fn = lam2_fn or (lambda z: np.ones_like(z, dtype=float))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    ids = np.empty((ny + 1, nx + 1), dtype=int)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            z = complex(x, y)
            l2 = float(lam2_fn(np.array([z]))[0])
            edge = i in (0, nx) or j in (0, ny)
            ids[j, i] = b.vertex(z, l2, edge, region)

    def slot(i, j):
        v = ids[j, i]
        return (v, (), b.pos[v], b.lam2[v])

    for j in range(ny):
        for i in range(nx):
            b.quad(slot(i, j), slot(i + 1, j), slot(i + 1, j + 1), slot(i, j + 1), region)
    mesh = b.finalize()
    mesh.meta["grid_ids"] = ids
    mesh.meta["grid_xy"] = (xs, ys)
    return mesh


def flat_torus_mesh(
    nx: int,
    ny: int,
    deck_x: MobiusMap,
    deck_y: MobiusMap,
    lx: float = 1.0,
    ly: float = 1.0,
) -> EquivariantMesh:
    """Flat square torus; wrapping in x applies deck_x, in y deck_y."""
    b = MeshBuilder((deck_x, deck_y))
    hx, hy = lx / nx, ly / ny
    ids = np.empty((ny, nx), dtype=int)
    for j in range(ny):
        for i in range(nx):
            ids[j, i] = b.vertex(complex(i * hx, j * hy), 1.0, False, "core")

    def slot(i, j):
        word = ()
        if i == nx:
            word = word + (1,)
        if j == ny:
            word = word + (2,)
        v = ids[j % ny, i % nx]
        return (v, word, complex(i * hx, j * hy), 1.0)

    for j in range(ny):
        for i in range(nx):
            b.quad(slot(i, j), slot(i + 1, j), slot(i + 1, j + 1), slot(i, j + 1), "core")
    b.check(ids[0, 0], (1, 2), (2, 1))
    mesh = b.finalize()
    mesh.meta["grid_ids"] = ids
    return mesh
