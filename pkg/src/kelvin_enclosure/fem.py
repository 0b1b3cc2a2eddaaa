"""Forward Neumann problem on the cracked slab (P1 finite elements).

Cracks are modelled as thin rectangular cavities of zero conductivity,
i.e. holes in the mesh whose faces carry the natural (zero-flux) boundary
condition.  The mesh is a tensor-product grid that places grid lines on
every cavity face, with a few geometrically graded lines near tips and
faces, cut into right triangles.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .geometry import CrackSet, GeometryError, SlabGeometry

log = logging.getLogger(__name__)

EDGE_TAGS = ("bottom", "right", "top", "left", "cavity")
# outward unit normal of each outer edge
NORMALS = {"bottom": (0.0, -1.0), "right": (1.0, 0.0),
           "top": (0.0, 1.0), "left": (-1.0, 0.0)}


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray            # (N, 2), slab frame
    triangles: np.ndarray        # (M, 3), counterclockwise
    boundary_edges: np.ndarray   # (E, 2), oriented with the domain on the left
    edge_tags: np.ndarray        # (E,), entries of EDGE_TAGS
    a: float
    b: float
    cavities: tuple = ()         # ((x_lo, x_hi, y_lo, y_hi), ...)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @cached_property
    def outer_edges(self) -> np.ndarray:
        return self.boundary_edges[self.edge_tags != "cavity"]

    @cached_property
    def outer_tags(self) -> np.ndarray:
        return self.edge_tags[self.edge_tags != "cavity"]

    @cached_property
    def cavity_edges(self) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == "cavity"]

    @cached_property
    def outer_nodes(self) -> np.ndarray:
        """Nodes on the outer rectangle, sorted by :attr:`arclength`."""
        idx = np.unique(self.outer_edges)
        return idx[np.argsort(self.perimeter_coordinate(self.nodes[idx]), kind="stable")]

    @cached_property
    def arclength(self) -> np.ndarray:
        return self.perimeter_coordinate(self.nodes[self.outer_nodes])

    def perimeter_coordinate(self, pts):
        """Counterclockwise perimeter parameter starting at the corner (0, 0)."""
        a, b = self.a, self.b
        x, y = pts[:, 0], pts[:, 1]
        tol = 1e-12 * max(a, b)
        return np.select(
            [np.abs(y) <= tol, np.abs(x - a) <= tol, np.abs(y - b) <= tol],
            [x, a + y, a + b + (a - x)],
            2 * a + b + (b - y))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.outer_edges
        return np.linalg.norm(self.nodes[e[:, 1]] - self.nodes[e[:, 0]], axis=1)

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Trapezoid weights for the outer boundary, aligned with :attr:`outer_nodes`."""
        w = np.zeros(len(self.nodes))
        half = 0.5 * self.edge_lengths
        np.add.at(w, self.outer_edges[:, 0], half)
        np.add.at(w, self.outer_edges[:, 1], half)
        return w[self.outer_nodes]

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        return assemble_stiffness(self.nodes, self.triangles)

    @cached_property
    def _factor(self):
        # one node pinned to zero removes the constant null space
        K = self.stiffness.tocsc()
        keep = np.arange(1, K.shape[0])
        return spla.splu(K[keep][:, keep].tocsc()), keep

    def n_components(self) -> int:
        n = len(self.nodes)
        t = self.triangles
        rows = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
        cols = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
        adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(adj, directed=False)[0]


def _graded_axis(breaks, h, refine, protect=()):
    """1-D grid through every breakpoint with spacing about ``h``.

    ``refine`` extra lines at ``h/2, h/4, ...`` are inserted on both sides of
    each breakpoint listed in ``protect``.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    pts = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(round((hi - lo) / h)))
        pts.extend(np.linspace(lo, hi, n + 1)[1:])
    pts = np.array(pts)
    extra = []
    for p in protect:
        for k in range(1, refine + 1):
            d = h / 2 ** k
            extra.extend([p - d, p + d])
    if extra:
        extra = np.array(extra)
        extra = extra[(extra > breaks[0]) & (extra < breaks[-1])]
        pts = np.concatenate([pts, extra])
    pts = np.unique(np.round(pts, 12))
    # drop lines that landed almost on top of an existing one
    keep = np.concatenate([[True], np.diff(pts) > 1e-3 * h / 2 ** refine])
    return pts[keep]


def build_mesh(geom: SlabGeometry, cracks: CrackSet, crack_width: float = 0.04,
               target_elements: int = 30720, refine: int = 2,
               min_band_cells: int = 2) -> Mesh:
    """Triangulate the slab with each crack interval cut out as a cavity.

    The cavity of interval ``[lo, hi]`` is ``[lo, hi] x [c - w/2, c + w/2]``.
    The element count lands within a few percent of ``target_elements``
    (before the small overhead of the graded lines).
    """
    a, b, c = geom.a, geom.b, cracks.line_height
    w = float(crack_width)
    if target_elements < 1000:
        raise GeometryError("target_elements must be at least 1000")
    if cracks.intervals:
        if not 0 < w < 2 * min(c, b - c):
            raise GeometryError(
                f"crack width {w} does not fit between the crack line and the faces")
        gaps = [lo2 - hi1 for (_, hi1), (lo2, _) in zip(cracks.intervals[:-1],
                                                         cracks.intervals[1:])]
        if gaps and min(gaps) <= 0:
            raise GeometryError("widened cavities intersect")

    # cells = target / 2; square-ish cells, band resolved by >= min_band_cells
    h = np.sqrt(a * b / (target_elements / 2.0))
    y_lo, y_hi = c - w / 2, c + w / 2
    tips = list(cracks.tips)
    xbreaks = [0.0, a, *tips]
    if cracks.intervals:
        band_h = w / max(min_band_cells, int(round(w / h)))
        ybreaks = [0.0, y_lo, y_hi, b]
        ys_out = _graded_axis([0.0, y_lo], h, refine, protect=[y_lo])
        ys_mid = np.linspace(y_lo, y_hi, int(round(w / band_h)) + 1)
        ys_top = _graded_axis([y_hi, b], h, refine, protect=[y_hi])
        ys = np.unique(np.round(np.concatenate([ys_out, ys_mid, ys_top]), 12))
        del ybreaks
    else:
        ys = _graded_axis([0.0, c, b], h, 0)
    xs = _graded_axis(xbreaks, h, refine if tips else 0, protect=tips)

    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange(nx * ny).reshape(nx, ny)

    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    xc = 0.5 * (xs[i] + xs[i + 1])
    yc = 0.5 * (ys[j] + ys[j + 1])
    solid = np.ones(len(i), dtype=bool)
    cavities = []
    for lo, hi in cracks.intervals:
        cavities.append((lo, hi, y_lo, y_hi))
        solid &= ~((xc > lo) & (xc < hi) & (yc > y_lo) & (yc < y_hi))
    i, j, xc = i[solid], j[solid], xc[solid]

    p00, p10 = idx[i, j], idx[i + 1, j]
    p01, p11 = idx[i, j + 1], idx[i + 1, j + 1]
    # diagonals mirrored about x = a/2 so the mesh is left-right symmetric
    left = xc < a / 2
    t1 = np.where(left[:, None], np.stack([p00, p10, p11], 1), np.stack([p00, p10, p01], 1))
    t2 = np.where(left[:, None], np.stack([p00, p11, p01], 1), np.stack([p10, p11, p01], 1))
    tris = np.concatenate([t1, t2])

    used = np.unique(tris)
    remap = -np.ones(len(nodes), dtype=int)
    remap[used] = np.arange(len(used))
    nodes = nodes[used]
    tris = remap[tris]

    edges, tags = _boundary_edges(nodes, tris, a, b)
    mesh = Mesh(nodes=nodes, triangles=tris, boundary_edges=edges, edge_tags=tags,
                a=a, b=b, cavities=tuple(cavities))
    log.debug("mesh: %d nodes, %d triangles, %d cavities",
              len(nodes), len(tris), len(cavities))
    return mesh


def _boundary_edges(nodes, tris, a, b):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    bnd = e[counts[inv.ravel()] == 1]
    p, q = nodes[bnd[:, 0]], nodes[bnd[:, 1]]
    tol = 1e-12 * max(a, b)
    tags = np.full(len(bnd), "cavity", dtype=object)
    tags[(np.abs(p[:, 1]) <= tol) & (np.abs(q[:, 1]) <= tol)] = "bottom"
    tags[(np.abs(p[:, 1] - b) <= tol) & (np.abs(q[:, 1] - b) <= tol)] = "top"
    tags[(np.abs(p[:, 0]) <= tol) & (np.abs(q[:, 0]) <= tol)] = "left"
    tags[(np.abs(p[:, 0] - a) <= tol) & (np.abs(q[:, 0] - a) <= tol)] = "right"
    return bnd, tags.astype(str)


def assemble_stiffness(nodes, tris) -> sp.csr_matrix:
    """P1 Laplace stiffness matrix."""
    p = nodes[tris]                                   # (M, 3, 2)
    d = np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1)  # edge opposite each vertex
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) \
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    if np.any(area2 <= 0):
        raise GeometryError("mesh has non-positive triangle areas")
    ke = np.einsum("mik,mjk->mij", d, d) / (2.0 * area2[:, None, None])
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = len(nodes)
    return sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclass(frozen=True, eq=False)
class NeumannData:
    """Flux samples on the outer boundary nodes (ordered as ``mesh.outer_nodes``)."""

    mesh: Mesh
    values: np.ndarray
    support_mask: np.ndarray

    def integral(self) -> float:
        return float(self.mesh.boundary_weights @ self.values)


def neumann_sin3(mesh: Mesh, exclusion: float = 0.05, mode: str = "top-bottom",
                 frequency: int = 3) -> NeumannData:
    """``g = sin(3 theta)`` with ``theta`` the normalised arclength of the support.

    mode ``"top-bottom"``: support is both long faces minus ``exclusion`` at
    each end, traversed counterclockwise (bottom left-to-right, then top
    right-to-left).  ``"top"``: top face only.  ``"full"``: whole perimeter
    from the corner ``(0, 0)``.  The result is projected to discrete mean
    zero over its support.
    """
    a, b = mesh.a, mesh.b
    pts = mesh.nodes[mesh.outer_nodes]
    x, y = pts[:, 0], pts[:, 1]
    tol = 1e-12 * max(a, b)
    if exclusion < 0 or exclusion >= min(a, b) / 2 and mode != "full":
        raise GeometryError("corner exclusion must be in [0, min(a, b)/2)")
    inner = (x > exclusion - tol) & (x < a - exclusion + tol)
    bottom = (np.abs(y) <= tol) & inner
    top = (np.abs(y - b) <= tol) & inner
    span = a - 2 * exclusion
    if mode == "top-bottom":
        mask = bottom | top
        s = np.where(bottom, x - exclusion, span + (a - exclusion - x))
        theta = 2 * np.pi * s / (2 * span)
    elif mode == "top":
        mask = top
        theta = 2 * np.pi * (a - exclusion - x) / span
    elif mode == "full":
        mask = np.ones(len(x), dtype=bool)
        theta = 2 * np.pi * mesh.arclength / (2 * (a + b))
    else:
        raise ValueError(f"unknown forcing mode {mode!r}")
    g = np.where(mask, np.sin(frequency * theta), 0.0)
    w = mesh.boundary_weights
    g = np.where(mask, g - (w @ g) / w[mask].sum(), 0.0)
    return NeumannData(mesh, g, mask)


def neumann_from_function(mesh: Mesh, flux) -> NeumannData:
    """Neumann data from ``flux(points, tag_normal)`` evaluated per outer node.

    Corner nodes average the two adjacent edge normals' values.
    """
    vals = np.zeros(len(mesh.nodes))
    cnt = np.zeros(len(mesh.nodes))
    for tag, nrm in NORMALS.items():
        e = mesh.outer_edges[mesh.outer_tags == tag]
        ids = np.unique(e)
        vals[ids] += flux(mesh.nodes[ids], np.array(nrm))
        cnt[ids] += 1
    g = (vals / np.maximum(cnt, 1))[mesh.outer_nodes]
    w = mesh.boundary_weights
    g = g - (w @ g) / w.sum()
    return NeumannData(mesh, g, np.abs(g) > 0)


@dataclass(frozen=True, eq=False)
class CauchyData:
    mesh: Mesh
    g: NeumannData
    u_trace: np.ndarray                 # on mesh.outer_nodes
    normalization: float = 0.0          # constant subtracted from the raw solve
    u_full: np.ndarray | None = None    # nodal field, same gauge as u_trace
    residual: float = 0.0

    def replace_trace(self, u_trace):
        return CauchyData(self.mesh, self.g, np.asarray(u_trace, dtype=float),
                          self.normalization, self.u_full, self.residual)

    @property
    def points(self) -> np.ndarray:
        return self.mesh.nodes[self.mesh.outer_nodes]


def load_vector(g: NeumannData) -> np.ndarray:
    f = np.zeros(len(g.mesh.nodes))
    f[g.mesh.outer_nodes] = g.mesh.boundary_weights * g.values
    return f


def solve_neumann(mesh: Mesh, g: NeumannData, mean_tol: float = 1e-10) -> CauchyData:
    """Solve ``-Lap u = 0``, ``du/dn = g`` on the outer boundary, zero flux on cavities.

    One node is pinned, then the trace is shifted so that its boundary
    integral vanishes.
    """
    f = load_vector(g)
    scale = np.abs(f).sum()
    if scale > 0 and abs(f.sum()) > mean_tol * scale:
        raise SolverError(f"Neumann data is not mean-free (sum {f.sum():.3e})")
    if mesh.n_components() != 1:
        raise SolverError("mesh is not connected")
    lu, keep = mesh._factor
    u = np.zeros(len(mesh.nodes))
    K = mesh.stiffness
    if scale > 0:
        u[keep] = lu.solve(f[keep])
        u[keep] += lu.solve((f - K @ u)[keep])      # one step of iterative refinement
    # normwise backward error |Ku - f| / (|K| |u| + |f|)
    res = np.linalg.norm(K @ u - f, np.inf)
    den = spla.norm(K, np.inf) * np.linalg.norm(u, np.inf) + np.linalg.norm(f, np.inf)
    rel = res / den if den > 0 else res
    if not np.isfinite(rel) or rel > 1e-12:
        raise SolverError(f"linear solve backward error too large: {rel:.3e}")
    w = mesh.boundary_weights
    shift = float(w @ u[mesh.outer_nodes] / w.sum())
    u = u - shift
    return CauchyData(mesh, g, u[mesh.outer_nodes].copy(), shift, u, float(rel))


def crack_jump(cauchy: CauchyData, cracks: CrackSet):
    """Potential jump ``u(top face) - u(bottom face)`` along each cavity.

    Returns a list of ``(x1_stations, jump)`` pairs, one per crack interval,
    stations taken from the upper face.
    """
    mesh = cauchy.mesh
    if cauchy.u_full is None:
        raise ValueError("full nodal field required for the crack jump")
    if len(mesh.cavities) != len(cracks.intervals):
        raise ValueError("crack set does not match the meshed cavities")
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    out = []
    for (lo, hi, ylo, yhi), (clo, chi) in zip(mesh.cavities, cracks.intervals):
        if abs(lo - clo) > 1e-12 or abs(hi - chi) > 1e-12:
            raise ValueError("crack set does not match the meshed cavities")
        tol = 1e-9
        top = np.flatnonzero((np.abs(y - yhi) < tol) & (x >= lo - tol) & (x <= hi + tol))
        bot = np.flatnonzero((np.abs(y - ylo) < tol) & (x >= lo - tol) & (x <= hi + tol))
        top = top[np.argsort(x[top])]
        bot = bot[np.argsort(x[bot])]
        if len(top) < 2 or len(bot) < 2 or abs(x[top[0]] - x[bot[0]]) > tol \
                or abs(x[top[-1]] - x[bot[-1]]) > tol:
            raise ValueError("cavity faces cannot be paired")
        xt = x[top]
        ub = np.interp(xt, x[bot], cauchy.u_full[bot])
        out.append((xt, cauchy.u_full[top] - ub))
    return out


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text mesh: three headed tables (nodes, triangles, boundary edges)."""
    with open(path, "w") as fh:
        fh.write(f"# kelvin-enclosure mesh a={float(mesh.a)!r} b={float(mesh.b)!r}\n")
        fh.write(f"cavities {len(mesh.cavities)}\n")
        for cav in mesh.cavities:
            fh.write(" ".join(repr(float(v)) for v in cav) + "\n")
        fh.write(f"nodes {len(mesh.nodes)}\n")
        for px, py in mesh.nodes.tolist():
            fh.write(f"{px!r} {py!r}\n")
        fh.write(f"triangles {len(mesh.triangles)}\n")
        for t in mesh.triangles:
            fh.write(f"{t[0]} {t[1]} {t[2]}\n")
        fh.write(f"boundary_edges {len(mesh.boundary_edges)}\n")
        for (p, q), tag in zip(mesh.boundary_edges, mesh.edge_tags):
            fh.write(f"{p} {q} {tag}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        header = dict(t.split("=", 1) for t in fh.readline().split() if "=" in t)
        a, b = float(header["a"]), float(header["b"])

        def table(name, conv):
            key, n = fh.readline().split()
            if key != name:
                raise ValueError(f"expected table {name!r}, found {key!r}")
            return [conv(fh.readline().split()) for _ in range(int(n))]

        cav = table("cavities", lambda r: tuple(float(v) for v in r))
        nodes = np.array(table("nodes", lambda r: [float(v) for v in r]))
        tris = np.array(table("triangles", lambda r: [int(v) for v in r]), dtype=int)
        be = table("boundary_edges", lambda r: (int(r[0]), int(r[1]), r[2]))
    edges = np.array([(p, q) for p, q, _ in be], dtype=int)
    tags = np.array([t for _, _, t in be])
    return Mesh(nodes, tris, edges, tags, a, b, tuple(cav))
