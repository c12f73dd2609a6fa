"""Discrete surface cell problem as a binary s-t minimum cut.

Labels live on unit lattice cells (1 = the datum's ``zeta`` side, 0 = the
other side). Edges join neighboring cells; an edge belongs to a region when
its midpoint does, and it is charged ``g(floor(midpoint)) * lambda_edge``
whenever its endpoints disagree. Cells outside the region, and the member
cells touching them (the ring), are pinned to the datum.

Weights are scaled by an integer precision factor and rounded, so every cut
value is an exact integer multiple of ``1 / precision``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .geometry import JumpDatum, OrientedCube, RationalDirection
from .integrand import SurfaceIntegrand

DEFAULT_PRECISION = 2**20
BRUTE_FORCE_LIMIT = 20
_INT32_MAX = 2**31 - 1


@dataclass(frozen=True)
class Neighborhood:
    """Lattice stencil with per-direction length weights."""

    name: str
    lambda_axis: float = 1.0
    lambda_diag: float = 0.0

    def offsets(self) -> list[tuple[tuple[int, int], float]]:
        out = [((1, 0), self.lambda_axis), ((0, 1), self.lambda_axis)]
        if self.name == "n8":
            out += [((1, 1), self.lambda_diag), ((1, -1), self.lambda_diag)]
        return out


N4 = Neighborhood("n4", 1.0, 0.0)
# Cauchy-Crofton ratio 1 : 1/sqrt(2), scaled so a flat axis cut costs its length.
N8 = Neighborhood("n8", math.sqrt(2.0) - 1.0, 1.0 - 1.0 / math.sqrt(2.0))


def get_neighborhood(name: str, lambda_axis: float | None = None, lambda_diag: float | None = None) -> Neighborhood:
    name = name.lower()
    if name == "n4":
        base = N4
    elif name == "n8":
        base = N8
    else:
        raise ValueError(f"unknown neighborhood {name!r} (expected n4 or n8)")
    return Neighborhood(
        name,
        base.lambda_axis if lambda_axis is None else float(lambda_axis),
        base.lambda_diag if lambda_diag is None else float(lambda_diag),
    )


@dataclass
class CellSet:
    """Rasterized region: a padded window of cells with member and ring masks."""

    box: object
    origin: np.ndarray
    member: np.ndarray
    ring: np.ndarray

    @property
    def shape(self):
        return self.member.shape

    def grid_cells(self) -> np.ndarray:
        idx = np.meshgrid(*[np.arange(s) for s in self.shape], indexing="ij")
        return np.stack(idx, axis=-1) + self.origin

    def member_cells(self) -> np.ndarray:
        return self.grid_cells()[self.member]

    def ring_cells(self) -> np.ndarray:
        return self.grid_cells()[self.ring]


def rasterize(region, pad: int = 2) -> CellSet:
    """Cells whose centers lie in ``region`` (anything exposing ``box()``)."""
    box = region.box()
    verts = box.float_vertices()
    lo = np.floor(verts.min(axis=0)).astype(np.int64) - pad
    hi = np.ceil(verts.max(axis=0)).astype(np.int64) + pad
    shape = tuple(int(v) for v in hi - lo + 1)
    idx = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    cells = np.stack(idx, axis=-1) + lo
    member = box.contains_half(2 * cells + 1)
    core = ndimage.binary_erosion(member, structure=np.ones((3,) * len(shape), dtype=bool), border_value=0)
    return CellSet(box=box, origin=lo, member=member, ring=member & ~core)


@dataclass
class CutGraph:
    """Free cells as nodes; pinned cells folded into terminal capacities.

    ``source_w[i]`` is the total weight from free node ``i`` to pinned cells
    labeled 1, ``sink_w[i]`` to pinned cells labeled 0. ``constant`` collects
    pinned-pinned edges with opposite labels.
    """

    free_cells: np.ndarray
    datum_labels: np.ndarray
    edges: np.ndarray
    edge_w: np.ndarray
    source_w: np.ndarray
    sink_w: np.ndarray
    constant: int
    precision: float
    n_members: int = 0
    n_ring: int = 0

    @property
    def n_free(self) -> int:
        return len(self.free_cells)

    def cut_weight_int(self, labels) -> int:
        labels = np.asarray(labels, dtype=bool)
        i, j = self.edges.T if len(self.edges) else (np.zeros(0, int), np.zeros(0, int))
        total = int(self.edge_w[labels[i] != labels[j]].sum())
        total += int(self.source_w[~labels].sum()) + int(self.sink_w[labels].sum())
        return total + int(self.constant)

    def cut_weight(self, labels) -> float:
        return self.cut_weight_int(labels) / self.precision

    def datum_weight(self) -> float:
        """Cut weight of the flat-interface competitor (the datum itself)."""
        return self.cut_weight(self.datum_labels)

    def flipped(self) -> CutGraph:
        """Same graph with the roles of the two labels exchanged."""
        return CutGraph(
            free_cells=self.free_cells,
            datum_labels=~self.datum_labels,
            edges=self.edges,
            edge_w=self.edge_w,
            source_w=self.sink_w,
            sink_w=self.source_w,
            constant=self.constant,
            precision=self.precision,
            n_members=self.n_members,
            n_ring=self.n_ring,
        )


@dataclass
class SurfaceCellResult:
    value: float
    normalized: float
    value_int: int
    labels: np.ndarray
    free_cells: np.ndarray
    flow_value: int
    n_nodes: int
    n_edges: int


def _offset_slices(shape, e):
    a = tuple(slice(max(0, -d), s - max(0, d)) for s, d in zip(shape, e))
    b = tuple(slice(max(0, d), s - max(0, -d)) for s, d in zip(shape, e))
    return a, b


def assemble_cut_graph(
    g: SurfaceIntegrand,
    datum: JumpDatum,
    region,
    neighborhood: Neighborhood = N4,
    precision: float = DEFAULT_PRECISION,
) -> CutGraph:
    cellset = rasterize(region)
    if g.field.dim != 2:
        raise ValueError("surface cell problems are implemented for n = 2")
    cells = cellset.grid_cells()
    labels = datum.upper_side_half(2 * cells + 1)
    free = cellset.member & ~cellset.ring
    n_free = int(free.sum())
    index = np.full(free.shape, -1, dtype=np.int64)
    index[free] = np.arange(n_free)
    zeta_norm = datum.zeta_norm

    edges, edge_w = [], []
    source_w = np.zeros(n_free, dtype=np.int64)
    sink_w = np.zeros(n_free, dtype=np.int64)
    constant = 0
    for e, lam in neighborhood.offsets():
        if lam <= 0:
            continue
        sa, sb = _offset_slices(free.shape, e)
        za = cells[sa].reshape(-1, 2)
        mid2 = 2 * za + np.asarray(e) + 1
        inside = cellset.box.contains_half(mid2)
        if not inside.any():
            continue
        coef_cells = np.floor_divide(mid2[inside], 2)
        w = g.cell_weights(coef_cells, zeta_norm) * lam
        w_int = np.rint(w * precision).astype(np.int64)
        if np.any(w_int <= 0):
            raise ValueError("edge weights must be positive after integer scaling")
        ia = index[sa].reshape(-1)[inside]
        ib = index[sb].reshape(-1)[inside]
        la = labels[sa].reshape(-1)[inside]
        lb = labels[sb].reshape(-1)[inside]
        both = (ia >= 0) & (ib >= 0)
        edges.append(np.stack([ia[both], ib[both]], axis=1))
        edge_w.append(w_int[both])
        only_a = (ia >= 0) & (ib < 0)
        only_b = (ia < 0) & (ib >= 0)
        for sel, node, other in ((only_a, ia, lb), (only_b, ib, la)):
            np.add.at(source_w, node[sel & other], w_int[sel & other])
            np.add.at(sink_w, node[sel & ~other], w_int[sel & ~other])
        neither = (ia < 0) & (ib < 0) & (la != lb)
        constant += int(w_int[neither].sum())

    return CutGraph(
        free_cells=cells[free],
        datum_labels=labels[free],
        edges=np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64),
        edge_w=np.concatenate(edge_w) if edge_w else np.zeros(0, dtype=np.int64),
        source_w=source_w,
        sink_w=sink_w,
        constant=constant,
        precision=float(precision),
        n_members=int(cellset.member.sum()),
        n_ring=int(cellset.ring.sum()),
    )


def solve_min_cut(graph: CutGraph, normalizer: float = 1.0) -> SurfaceCellResult:
    """Exact minimum cut; labels are the source-side-minimal optimal cut."""
    k = graph.n_free
    if k == 0:
        v = int(graph.constant)
        return SurfaceCellResult(v / graph.precision, v / graph.precision / normalizer, v,
                                 np.zeros(0, bool), graph.free_cells, 0, 0, 0)
    if min(graph.source_w.sum(), graph.sink_w.sum()) >= _INT32_MAX // 2:
        raise OverflowError("total terminal capacity too large for 32-bit flows; lower the precision factor")
    s, t = k, k + 1
    rows = [graph.edges[:, 0], graph.edges[:, 1]]
    cols = [graph.edges[:, 1], graph.edges[:, 0]]
    data = [graph.edge_w, graph.edge_w]
    src = np.nonzero(graph.source_w)[0]
    snk = np.nonzero(graph.sink_w)[0]
    rows += [np.full(len(src), s), snk]
    cols += [src, np.full(len(snk), t)]
    data += [graph.source_w[src], graph.sink_w[snk]]
    cap = sp.csr_array(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(k + 2, k + 2)
    )
    cap.sum_duplicates()
    if cap.nnz and cap.data.max() >= _INT32_MAX // 2:
        raise OverflowError("edge capacity too large for 32-bit flows; lower the precision factor")
    cap = cap.astype(np.int32)
    res = maximum_flow(cap, s, t)
    flow = int(res.flow_value)
    residual = (cap.astype(np.int64) - res.flow.astype(np.int64)).tocsr()
    residual.data[residual.data < 0] = 0
    residual.eliminate_zeros()
    reach = breadth_first_order(residual, s, directed=True, return_predecessors=False)
    labels = np.zeros(k, dtype=bool)
    labels[reach[reach < k]] = True
    value_int = flow + int(graph.constant)
    if graph.cut_weight_int(labels) != value_int:
        raise RuntimeError("min-cut labeling does not reproduce the flow value")
    value = value_int / graph.precision
    return SurfaceCellResult(value, value / normalizer, value_int, labels, graph.free_cells,
                             flow, k + 2, int(cap.nnz))


def brute_force_min_int(graph: CutGraph) -> int:
    k = graph.n_free
    if k > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} free cells, got {k}")
    if k == 0:
        return int(graph.constant)
    i, j = graph.edges.T
    best = None
    bit = np.arange(k, dtype=np.int64)
    chunk = 1 << min(k, 16)
    for start in range(0, 1 << k, chunk):
        codes = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
        lab = ((codes[:, None] >> bit) & 1).astype(bool)
        cost = (lab[:, i] != lab[:, j]).astype(np.int64) @ graph.edge_w
        cost += (~lab).astype(np.int64) @ graph.source_w + lab.astype(np.int64) @ graph.sink_w
        m = int(cost.min())
        best = m if best is None else min(best, m)
    return best + int(graph.constant)


def brute_force_min(graph: CutGraph) -> float:
    """Minimum cut weight by enumerating every labeling of the free cells."""
    return brute_force_min_int(graph) / graph.precision


def surface_cell_value(
    g: SurfaceIntegrand,
    datum: JumpDatum,
    cube: OrientedCube,
    neighborhood: Neighborhood = N4,
    precision: float = DEFAULT_PRECISION,
    kappa: float | None = None,
) -> SurfaceCellResult:
    """Rasterize, assemble and solve; normalized by ``side^(n-1)`` (and ``kappa``)."""
    if cube.side < 4:
        raise ValueError("cube side must be at least 4")
    graph = assemble_cut_graph(g, datum, cube, neighborhood, precision)
    norm = float(cube.side) ** (cube.dim - 1)
    if kappa is not None:
        norm *= kappa
    return solve_min_cut(graph, normalizer=norm)


def strip_graph(
    neighborhood: Neighborhood,
    nu: RationalDirection,
    strip_length: int = 64,
    half_width: int = 4,
    precision: float = DEFAULT_PRECISION,
) -> tuple[CutGraph, int]:
    """Unit-coefficient strip around the line ``y . nu = 0``, periodic along it.

    Returns the graph and the period length actually used (a multiple of the
    primitive tangent length, at least ``strip_length``).
    """
    a, b = nu.numerators
    d = nu.denominator
    tau = np.array([-b, a], dtype=np.int64)
    k = -(-strip_length // d)
    period_q = k * d * d
    period = k * tau
    # s2 = 2 d (center . nu) for center = z + 1/2
    reach = half_width + 2
    span = int(np.ceil(k * d + 2 * reach + 2))
    xs = np.arange(-span - 1, span + 2)
    Z = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
    s2 = 2 * (Z @ np.array([a, b])) + a + b
    q = Z @ tau
    keep = (np.abs(s2) < 2 * d * reach) & (q >= 0) & (q < period_q)
    Z, s2 = Z[keep], s2[keep]
    lookup = {tuple(z): n for n, z in enumerate(Z.tolist())}
    free = np.abs(s2) < 2 * d * half_width
    up = s2 >= 0
    free_idx = np.full(len(Z), -1, dtype=np.int64)
    free_idx[free] = np.arange(int(free.sum()))
    edges, edge_w = [], []
    source_w = np.zeros(int(free.sum()), dtype=np.int64)
    sink_w = np.zeros_like(source_w)
    for e, lam in neighborhood.offsets():
        if lam <= 0:
            continue
        w = int(np.rint(lam * precision))
        for n, z in enumerate(Z):
            nb = z + np.asarray(e)
            m = int(np.floor_divide(int(nb @ tau), period_q))
            nb = nb - m * period
            other = lookup.get(tuple(nb.tolist()))
            if other is None:
                continue
            fa, fb = free_idx[n], free_idx[other]
            if fa >= 0 and fb >= 0:
                edges.append((fa, fb))
                edge_w.append(w)
            elif fa >= 0 or fb >= 0:
                node, pinned = (fa, other) if fa >= 0 else (fb, n)
                if up[pinned]:
                    source_w[node] += w
                else:
                    sink_w[node] += w
    graph = CutGraph(
        free_cells=Z[free],
        datum_labels=up[free],
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        edge_w=np.asarray(edge_w, dtype=np.int64),
        source_w=source_w,
        sink_w=sink_w,
        constant=0,
        precision=float(precision),
        n_members=len(Z),
        n_ring=int((~free).sum()),
    )
    return graph, k * d


def calibrate_metrication(neighborhood: Neighborhood, nu, strip_length: int = 64, half_width: int = 4,
                          precision: float = DEFAULT_PRECISION) -> float:
    """Cut cost per unit length of a flat interface with normal ``nu`` in a
    homogeneous unit medium (1 for an exact Euclidean metric)."""
    if strip_length < 16:
        raise ValueError("strip_length must be at least 16")
    if not isinstance(nu, RationalDirection):
        nu = RationalDirection.from_vector(nu)
    if nu.dim != 2:
        raise ValueError("calibration is implemented for n = 2")
    graph, length = strip_graph(neighborhood, nu, strip_length, half_width, precision)
    return solve_min_cut(graph).value / length
