"""Negotiated-congestion global routing on a layered gcell grid.

The routing graph is an X x Y x L lattice.  Each layer carries planar edges
only along its preferred direction; adjacent layers are joined by via edges
at every gcell (capacity 1 per gcell when the fabric's via stacks are
single-signal, as in S3DC).

Routing is PathFinder style: nets are routed by A* with edge costs
``1 + history + present_factor * overuse``; after each iteration the nets
crossing overused edges are ripped up and rerouted while the present-factor
grows and overused edges accumulate history cost.  Multi-terminal nets are
decomposed over a rectilinear MST of their terminal gcells, and each new
connection may start from any node of the net's partial tree, so shared
segments cost nothing.

Rerouting proceeds in batches that are prefixes of the deterministic net
order and pairwise region-disjoint.  Nets inside a batch cannot interact,
so routing them concurrently against the iteration snapshot and committing
in order is bit-identical to the sequential schedule; ``parallel=True``
merely executes batch members on a thread pool.
"""

from __future__ import annotations

import heapq
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fabric import DEFAULT_VIA_CAPACITY, FabricSpec
from .netlist import Netlist
from .placement import Placement

logger = logging.getLogger(__name__)


class RoutingError(RuntimeError):
    pass


@dataclass
class RouteParams:
    max_iters: int = 40
    seed: int = 0
    present_factor: float = 1.0
    present_growth: float = 1.5
    history_increment: float = 1.0
    bbox_margin: int = 2
    stagnation_iters: int = 3  # stop after this many expensive iterations without progress
    stagnation_gain: float = 0.02  # >=2% overflow reduction counts as progress
    stagnation_min_nets: int = 128  # smaller reroute batches are cheap; let them run
    full_ripup: bool = False  # rip every net on an overflowed edge, not just the excess
    parallel: bool = False
    workers: int = 4


class RoutingGraph:
    """Gcell lattice with per-edge capacity/demand/history arrays.

    Node ids are ``(layer * Y + y) * X + x`` with 0-based layers, which makes
    ascending-id tie-breaking equal to lexicographic (layer, y, x) order.
    Edge ids pack all planar edges (layer by layer) followed by all via
    edges.
    """

    __slots__ = (
        "x", "y", "layers", "gcell_size", "site_dim_nm", "layer_dirs",
        "fabric", "pbase", "via_base", "num_edges", "capacity", "demand",
        "history",
    )

    def __init__(self, x: int, y: int, layers: int, gcell_size: int,
                 site_dim_nm: float, layer_dirs: tuple[str, ...],
                 layer_capacities: tuple[int, ...], via_capacity: int,
                 fabric: FabricSpec | None = None):
        if x < 1 or y < 1 or layers < 1:
            raise ValueError("grid dimensions must be positive")
        if via_capacity < 1:
            raise ValueError("via capacity must be >= 1")
        self.x = x
        self.y = y
        self.layers = layers
        self.gcell_size = gcell_size
        self.site_dim_nm = site_dim_nm
        self.layer_dirs = layer_dirs
        self.fabric = fabric

        self.pbase = []
        eid = 0
        for li in range(layers):
            self.pbase.append(eid)
            eid += (x - 1) * y if layer_dirs[li] == "h" else x * (y - 1)
        self.via_base = eid
        eid += x * y * max(0, layers - 1)
        self.num_edges = eid

        capacity = []
        for li in range(layers):
            count = (x - 1) * y if layer_dirs[li] == "h" else x * (y - 1)
            capacity.extend([layer_capacities[li]] * count)
        capacity.extend([via_capacity] * (x * y * max(0, layers - 1)))
        self.capacity = capacity
        self.demand = [0] * self.num_edges
        self.history = [0.0] * self.num_edges

    # -- id helpers --------------------------------------------------------

    def node_id(self, gx: int, gy: int, layer0: int) -> int:
        return (layer0 * self.y + gy) * self.x + gx

    def node_coords(self, nid: int) -> tuple[int, int, int]:
        gx = nid % self.x
        gy = (nid // self.x) % self.y
        return gx, gy, nid // (self.x * self.y)

    def planar_edge(self, layer0: int, gx: int, gy: int) -> int:
        """Edge from (gx,gy) toward +x on 'h' layers, +y on 'v' layers."""
        if self.layer_dirs[layer0] == "h":
            return self.pbase[layer0] + gy * (self.x - 1) + gx
        return self.pbase[layer0] + gy * self.x + gx

    def via_edge(self, layer0: int, gx: int, gy: int) -> int:
        """Edge between layer0 and layer0+1 at (gx, gy)."""
        return self.via_base + (layer0 * self.y + gy) * self.x + gx

    def edge_info(self, eid: int) -> tuple[str, int, int, int]:
        """Decode an edge id to (kind, layer0, gx, gy); kind is 'h'/'v'/'via'."""
        if eid >= self.via_base:
            rel = eid - self.via_base
            gx = rel % self.x
            gy = (rel // self.x) % self.y
            return "via", rel // (self.x * self.y), gx, gy
        for li in range(self.layers - 1, -1, -1):
            if eid >= self.pbase[li]:
                rel = eid - self.pbase[li]
                if self.layer_dirs[li] == "h":
                    return "h", li, rel % (self.x - 1), rel // (self.x - 1)
                return "v", li, rel % self.x, rel // self.x
        raise ValueError(f"bad edge id {eid}")

    def edge_endpoints(self, eid: int) -> tuple[int, int]:
        kind, li, gx, gy = self.edge_info(eid)
        a = self.node_id(gx, gy, li)
        if kind == "h":
            return a, self.node_id(gx + 1, gy, li)
        if kind == "v":
            return a, self.node_id(gx, gy + 1, li)
        return a, self.node_id(gx, gy, li + 1)

    @property
    def gcell_um(self) -> float:
        return self.gcell_size * self.site_dim_nm / 1000.0

    def reset(self) -> None:
        self.demand = [0] * self.num_edges
        self.history = [0.0] * self.num_edges


def build_grid(fabric: FabricSpec, die, gcell_size: int,
               via_capacity: int | None = None) -> RoutingGraph:
    """Routing lattice over a die: ``ceil(sites / gcell_size)`` gcells per
    axis, one graph layer per fabric routing layer.  Via capacity defaults
    to 1 per gcell for exclusive via stacks and 4 otherwise."""
    if gcell_size < 1:
        raise ValueError("gcell_size must be >= 1")
    x = -(-die.width // gcell_size)
    y = -(-die.height // gcell_size)
    if via_capacity is None:
        via_capacity = 1 if fabric.via_stack_exclusive else DEFAULT_VIA_CAPACITY
    return RoutingGraph(
        x=x, y=y, layers=fabric.num_layers, gcell_size=gcell_size,
        site_dim_nm=fabric.site_dim_nm,
        layer_dirs=tuple(layer.direction for layer in fabric.layers),
        layer_capacities=tuple(layer.capacity for layer in fabric.layers),
        via_capacity=via_capacity, fabric=fabric,
    )


def apply_obstacles(graph: RoutingGraph, netlist: Netlist, placement: Placement) -> int:
    """Reduce planar edge capacities under intra-cell obstacle metal.

    Each obstacle rectangle removes tracks from the gcell edges it covers in
    proportion to the blocked fraction of the gcell cross-section.  Returns
    the number of edges whose capacity changed.
    """
    g = graph.gcell_size
    changed = 0
    for cell in netlist.cells:
        master = netlist.masters[cell.master]
        if not master.obstacles:
            continue
        cx, cy = placement.assignments[cell.id]
        for layer, (rx0, ry0, rx1, ry1) in master.obstacles:
            li = layer - 1
            if li >= graph.layers:
                continue
            ax0, ay0 = cx + rx0, cy + ry0
            ax1, ay1 = cx + rx1, cy + ry1
            for gy in range(max(0, ay0 // g), min(graph.y, -(-ay1 // g))):
                for gx in range(max(0, ax0 // g), min(graph.x, -(-ax1 // g))):
                    ox = min(ax1, (gx + 1) * g) - max(ax0, gx * g)
                    oy = min(ay1, (gy + 1) * g) - max(ay0, gy * g)
                    if ox <= 0 or oy <= 0:
                        continue
                    # Tracks run along the layer direction; the blocked
                    # fraction is measured across it.
                    frac = (oy / g) if graph.layer_dirs[li] == "h" else (ox / g)
                    if graph.layer_dirs[li] == "h" and gx < graph.x - 1:
                        eid = graph.planar_edge(li, gx, gy)
                    elif graph.layer_dirs[li] == "v" and gy < graph.y - 1:
                        eid = graph.planar_edge(li, gx, gy)
                    else:
                        continue
                    old = graph.capacity[eid]
                    new = max(0, old - int(round(frac * old)))
                    if new != old:
                        graph.capacity[eid] = new
                        changed += 1
    return changed


def terminal_gcells(net, netlist: Netlist, placement: Placement,
                    graph: RoutingGraph, fabric: FabricSpec) -> list[list[int]]:
    """Entry nodes for each terminal of a net.

    A terminal may enter the grid at any of its pin's access points, so S3DC
    pins offer one node per access layer while planar/monolithic pins sit on
    layer 1 only.    Duplicate (gcell, layer) entries collapse.
    """
    g = graph.gcell_size
    out: list[list[int]] = []
    for cid, pin_name in net.terminals:
        if cid not in placement.assignments:
            raise RoutingError(f"net {net.id!r}: cell {cid!r} is not placed")
        ox, oy = placement.assignments[cid]
        pin = netlist.master_of(cid).pin(pin_name)
        entries: dict[int, None] = {}
        for layer, dx, dy in pin.accesses:
            gx = min((ox + dx) // g, graph.x - 1)
            gy = min((oy + dy) // g, graph.y - 1)
            li = min(layer - 1, graph.layers - 1)
            entries.setdefault(graph.node_id(gx, gy, li), None)
        out.append(list(entries))
    return out


@dataclass(frozen=True)
class NetRoute:
    net_id: str
    edges: tuple[int, ...]


@dataclass
class CongestionMap:
    """Per-layer demand/capacity matrices plus via matrices.

    Planar matrices are shaped (Y, X-1) for 'h' layers and (Y-1, X) for 'v'
    layers; via matrices are (L-1, Y, X).
    """

    layer_dirs: tuple[str, ...]
    layer_demand: list[np.ndarray]
    layer_capacity: list[np.ndarray]
    via_demand: np.ndarray
    via_capacity: np.ndarray

    def layer_max_ratio(self, layer0: int) -> float:
        dem = self.layer_demand[layer0]
        cap = self.layer_capacity[layer0]
        if dem.size == 0:
            return 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dem > 0, dem / np.maximum(cap, 1e-300), 0.0)
        return float(ratio.max())

    def layer_aggregate_ratio(self, layer0: int) -> float:
        cap = float(self.layer_capacity[layer0].sum())
        if cap == 0:
            return 0.0 if self.layer_demand[layer0].sum() == 0 else float("inf")
        return float(self.layer_demand[layer0].sum()) / cap

    @property
    def overflow_edge_count(self) -> int:
        count = 0
        for dem, cap in zip(self.layer_demand, self.layer_capacity):
            count += int((dem > cap).sum())
        count += int((self.via_demand > self.via_capacity).sum())
        return count

    @property
    def congested(self) -> bool:
        return any(self.layer_max_ratio(li) > 1.0 for li in range(len(self.layer_dirs)))


def build_congestion_map(graph: RoutingGraph) -> CongestionMap:
    dem = np.asarray(graph.demand, dtype=np.int64)
    cap = np.asarray(graph.capacity, dtype=np.int64)
    layer_demand = []
    layer_capacity = []
    for li in range(graph.layers):
        base = graph.pbase[li]
        if graph.layer_dirs[li] == "h":
            shape = (graph.y, graph.x - 1)
        else:
            shape = (graph.y - 1, graph.x)
        count = shape[0] * shape[1]
        layer_demand.append(dem[base:base + count].reshape(shape))
        layer_capacity.append(cap[base:base + count].reshape(shape))
    nv = graph.x * graph.y * max(0, graph.layers - 1)
    via_shape = (max(0, graph.layers - 1), graph.y, graph.x)
    via_demand = dem[graph.via_base:graph.via_base + nv].reshape(via_shape)
    via_capacity = cap[graph.via_base:graph.via_base + nv].reshape(via_shape)
    return CongestionMap(
        layer_dirs=graph.layer_dirs,
        layer_demand=layer_demand,
        layer_capacity=layer_capacity,
        via_demand=via_demand,
        via_capacity=via_capacity,
    )


@dataclass(frozen=True)
class LayerRatio:
    layer: int  # 1-based
    demand: int
    capacity: int
    aggregate_ratio: float
    max_edge_ratio: float


def demand_resource_ratios(cmap: CongestionMap) -> list[LayerRatio]:
    """Per-layer demand/resource summary, ordered by layer (planar edges).

    A design counts as congested when any layer's max edge ratio exceeds 1.
    """
    rows = []
    for li in range(len(cmap.layer_dirs)):
        rows.append(
            LayerRatio(
                layer=li + 1,
                demand=int(cmap.layer_demand[li].sum()),
                capacity=int(cmap.layer_capacity[li].sum()),
                aggregate_ratio=cmap.layer_aggregate_ratio(li),
                max_edge_ratio=cmap.layer_max_ratio(li),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# The router core


def _prim_order(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """MST construction order over terminal gcells (rectilinear metric).

    Returns (new_terminal, tree_terminal) attachment pairs in the order
    Prim's algorithm adds them, starting from terminal 0.
    """
    t = len(points)
    in_tree = [False] * t
    in_tree[0] = True
    dist = [0] * t
    near = [0] * t
    for i in range(1, t):
        dist[i] = abs(points[i][0] - points[0][0]) + abs(points[i][1] - points[0][1])
    order = []
    for _ in range(t - 1):
        best, best_d = -1, None
        for i in range(t):
            if not in_tree[i] and (best_d is None or (dist[i], i) < (best_d, best)):
                best, best_d = i, dist[i]
        order.append((best, near[best]))
        in_tree[best] = True
        bx, by = points[best]
        for i in range(t):
            if not in_tree[i]:
                d = abs(points[i][0] - bx) + abs(points[i][1] - by)
                if d < dist[i]:
                    dist[i] = d
                    near[i] = best
    return order


class _Scratch:
    """Per-search node state reused across A* calls via generation stamps."""

    __slots__ = ("g", "stamp", "closed_stamp", "parent_node", "parent_edge", "gen")

    def __init__(self, nnodes: int):
        self.g = [0.0] * nnodes
        self.stamp = [0] * nnodes
        self.closed_stamp = [0] * nnodes
        self.parent_node = [-1] * nnodes
        self.parent_edge = [-1] * nnodes
        self.gen = 0


class _ScratchPool:
    """One _Scratch per thread; search state never crosses threads."""

    def __init__(self, nnodes: int):
        self._nnodes = nnodes
        self._local = threading.local()

    def get(self) -> _Scratch:
        scratch = getattr(self._local, "scratch", None)
        if scratch is None:
            scratch = _Scratch(self._nnodes)
            self._local.scratch = scratch
        return scratch


def _astar(graph: RoutingGraph, sources, targets: set[int],
           bounds: tuple[int, int, int, int], pres_fac: float,
           scratch: _Scratch | None = None):
    """Cheapest path from any source to any target inside ``bounds``.

    Edge cost is 1 + history + pres_fac * (overuse if this net were added);
    zero-capacity planar edges are impassable.  Ties break on ascending node
    id, i.e. lexicographic (layer, y, x).  Returns (edges, nodes) or None.
    """
    x_dim, y_dim, layers = graph.x, graph.y, graph.layers
    xy = x_dim * y_dim
    xlo, xhi, ylo, yhi = bounds
    cap = graph.capacity
    dem = graph.demand
    hist = graph.history
    dirs = graph.layer_dirs
    pbase = graph.pbase
    via_base = graph.via_base

    if scratch is None:
        scratch = _Scratch(xy * layers)
    scratch.gen += 1
    gen = scratch.gen
    gs = scratch.g
    stamp = scratch.stamp
    closed = scratch.closed_stamp
    pnode = scratch.parent_node
    pedge = scratch.parent_edge

    # Bounding box of the target set: distance-to-box is admissible for any
    # number of targets and collapses to Manhattan distance for one target.
    txlo = tylo = tzlo = 1 << 60
    txhi = tyhi = tzhi = -1
    for t in targets:
        tx = t % x_dim
        ty = (t // x_dim) % y_dim
        tz = t // xy
        if tx < txlo:
            txlo = tx
        if tx > txhi:
            txhi = tx
        if ty < tylo:
            tylo = ty
        if ty > tyhi:
            tyhi = ty
        if tz < tzlo:
            tzlo = tz
        if tz > tzhi:
            tzhi = tz

    heap: list[tuple[float, int]] = []
    for s in sources:
        sx = s % x_dim
        sy = (s // x_dim) % y_dim
        if not (xlo <= sx <= xhi and ylo <= sy <= yhi):
            continue
        if stamp[s] != gen:
            stamp[s] = gen
            gs[s] = 0.0
            pnode[s] = -1
            sz = s // xy
            h0 = ((txlo - sx if sx < txlo else (sx - txhi if sx > txhi else 0))
                  + (tylo - sy if sy < tylo else (sy - tyhi if sy > tyhi else 0))
                  + (tzlo - sz if sz < tzlo else (sz - tzhi if sz > tzhi else 0)))
            heapq.heappush(heap, (float(h0), s))

    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        _, u = pop(heap)
        if closed[u] == gen:
            continue
        closed[u] = gen
        if u in targets:
            edges = []
            nodes = [u]
            v = u
            while pnode[v] >= 0:
                edges.append(pedge[v])
                v = pnode[v]
                nodes.append(v)
            edges.reverse()
            nodes.reverse()
            return edges, nodes
        gu = gs[u]
        ux = u % x_dim
        uy = (u // x_dim) % y_dim
        uz = u // xy

        # Candidate (neighbor, edge, x, y, z) moves; planar moves respect the
        # layer direction and region bounds, vias are always present.
        cands = []
        if dirs[uz] == "h":
            row = pbase[uz] + uy * (x_dim - 1)
            if ux > xlo:
                cands.append((u - 1, row + ux - 1, ux - 1, uy, uz))
            if ux < xhi:
                cands.append((u + 1, row + ux, ux + 1, uy, uz))
        else:
            col = pbase[uz] + ux
            if uy > ylo:
                cands.append((u - x_dim, col + (uy - 1) * x_dim, ux, uy - 1, uz))
            if uy < yhi:
                cands.append((u + x_dim, col + uy * x_dim, ux, uy + 1, uz))
        via_at = via_base + uy * x_dim + ux
        if uz > 0:
            cands.append((u - xy, via_at + (uz - 1) * xy, ux, uy, uz - 1))
        if uz < layers - 1:
            cands.append((u + xy, via_at + uz * xy, ux, uy, uz + 1))

        for v, eid, vx, vy, vz in cands:
            if closed[v] == gen:
                continue
            c = cap[eid]
            if c <= 0 and eid < via_base:
                continue
            over = dem[eid] + 1 - c
            ng = gu + 1.0 + hist[eid] + (pres_fac * over if over > 0 else 0.0)
            if stamp[v] == gen and gs[v] <= ng:
                continue
            stamp[v] = gen
            gs[v] = ng
            pnode[v] = u
            pedge[v] = eid
            h = ((txlo - vx if vx < txlo else (vx - txhi if vx > txhi else 0))
                 + (tylo - vy if vy < tylo else (vy - tyhi if vy > tyhi else 0))
                 + (tzlo - vz if vz < tzlo else (vz - tzhi if vz > tzhi else 0)))
            push(heap, (ng + h, v))
    return None


@dataclass
class _NetTask:
    net_id: str
    entries: list[list[int]]  # per terminal, candidate entry nodes
    reps: list[tuple[int, int]]  # representative gcell per terminal
    bbox: tuple[int, int, int, int]
    hp: int
    order: list[tuple[int, int]] = field(default_factory=list)  # MST attach pairs


def _region(task: _NetTask, margin: int, graph: RoutingGraph) -> tuple[int, int, int, int]:
    x0, x1, y0, y1 = task.bbox
    return (
        max(0, x0 - margin),
        min(graph.x - 1, x1 + margin),
        max(0, y0 - margin),
        min(graph.y - 1, y1 + margin),
    )


def _route_one(graph: RoutingGraph, task: _NetTask, bounds, pres_fac: float,
               scratch: _Scratch | None = None):
    """Route a whole net inside ``bounds``; returns edge list or None."""
    entry_sets = [set(e) for e in task.entries]
    tree_nodes: set[int] | None = None
    edges: list[int] = []
    for new_t, from_t in task.order:
        targets = entry_sets[new_t]
        if tree_nodes is None:
            sources = task.entries[from_t]
            common = entry_sets[from_t] & targets
            if common:
                tree_nodes = {min(common)}
                continue
        else:
            sources = tree_nodes
            if tree_nodes & targets:
                continue
        found = _astar(graph, sources, targets, bounds, pres_fac, scratch)
        if found is None:
            return None
        path_edges, path_nodes = found
        if tree_nodes is None:
            tree_nodes = set(path_nodes)
        else:
            tree_nodes.update(path_nodes)
        edges.extend(path_edges)
    return edges


def route_terminal_sets(
    graph: RoutingGraph,
    nets: list[tuple[str, list[list[int]]]],
    params: RouteParams | None = None,
) -> tuple[list[NetRoute], CongestionMap]:
    """Route nets given raw terminal entry-node sets.

    ``nets`` holds (net_id, [entry nodes per terminal]); every entry list
    must be non-empty.  Returns routes in input order plus the final
    congestion map.  Zero overflow on return means demand <= capacity on
    every edge.
    """
    params = params or RouteParams()
    x_dim = graph.x
    y_dim = graph.y

    tasks: list[_NetTask] = []
    for net_id, entries in nets:
        if not entries or any(not e for e in entries):
            raise RoutingError(f"net {net_id!r}: empty terminal entry set")
        reps = []
        xs: list[int] = []
        ys: list[int] = []
        for entry in entries:
            ex = entry[0] % x_dim
            ey = (entry[0] // x_dim) % y_dim
            reps.append((ex, ey))
            for node in entry:
                xs.append(node % x_dim)
                ys.append((node // x_dim) % y_dim)
        bbox = (min(xs), max(xs), min(ys), max(ys))
        task = _NetTask(
            net_id=net_id, entries=entries, reps=reps, bbox=bbox,
            hp=(bbox[1] - bbox[0]) + (bbox[3] - bbox[2]),
        )
        if len(entries) > 1:
            task.order = _prim_order(reps)
        tasks.append(task)

    order = sorted(range(len(tasks)), key=lambda i: (-tasks[i].hp, tasks[i].net_id))
    routed_edges: dict[int, list[int]] = {}
    dem = graph.demand
    pres_fac = params.present_factor

    pool = ThreadPoolExecutor(max_workers=params.workers) if params.parallel else None
    scratch = _ScratchPool(graph.x * graph.y * graph.layers)
    best_overflow = None
    stale = 0
    try:
        pending = list(order)
        for iteration in range(params.max_iters + 1):
            if iteration > 0:
                over = [e for e in range(graph.num_edges) if dem[e] > graph.capacity[e]]
                if not over:
                    break
                if best_overflow is None or len(over) < best_overflow * (1.0 - params.stagnation_gain):
                    best_overflow = len(over)
                    stale = 0
                else:
                    best_overflow = min(best_overflow, len(over))
                    stale += 1
                over_set = set(over)
                users: dict[int, list[int]] = {e: [] for e in over}
                for i in order:
                    edges = routed_edges.get(i)
                    if edges is None:
                        continue
                    for e in edges:
                        if e in over_set:
                            users[e].append(i)
                if params.full_ripup:
                    ripped = {i for lst in users.values() for i in lst}
                else:
                    # Per overflowed edge, only the excess (demand - capacity)
                    # users reroute, lowest-priority first.  Earlier-routed
                    # (larger) nets keep their claim; history keeps pressure
                    # on edges that stay contested.
                    ripped = set()
                    for e in over:
                        need = dem[e] - graph.capacity[e]
                        need -= sum(1 for i in users[e] if i in ripped)
                        for i in reversed(users[e]):
                            if need <= 0:
                                break
                            if i not in ripped:
                                ripped.add(i)
                                need -= 1
                pending = [i for i in order if i in ripped]
                if not pending:
                    break
                if stale >= params.stagnation_iters and len(pending) > params.stagnation_min_nets:
                    logger.debug("overflow stagnant for %d iterations, stopping", stale)
                    break
                for e in over:
                    graph.history[e] += params.history_increment * (dem[e] - graph.capacity[e])
                for i in pending:
                    for e in routed_edges.pop(i):
                        dem[e] -= 1
                pres_fac *= params.present_growth
                logger.debug(
                    "reroute iteration %d: %d overflowed edges, %d nets",
                    iteration, len(over), len(pending),
                )
            _route_batchwise(graph, tasks, pending, params, pres_fac, routed_edges,
                             pool, scratch)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    routes = [NetRoute(net_id=t.net_id, edges=tuple(routed_edges.get(i, ())))
              for i, t in enumerate(tasks)]
    cmap = build_congestion_map(graph)
    if cmap.overflow_edge_count:
        logger.warning("routing finished with %d overflowed edges", cmap.overflow_edge_count)
    return routes, cmap


def _route_batchwise(graph, tasks, pending, params, pres_fac, routed_edges, pool,
                     scratch):
    """Route ``pending`` (task indices, already ordered) in prefix batches of
    pairwise region-disjoint nets; commit demand in order."""
    pos = 0
    margin = params.bbox_margin
    while pos < len(pending):
        batch = [pending[pos]]
        regions = [_region(tasks[pending[pos]], margin, graph)]
        pos += 1
        while pos < len(pending):
            cand = _region(tasks[pending[pos]], margin, graph)
            if any(_intersects(cand, reg) for reg in regions):
                break
            batch.append(pending[pos])
            regions.append(cand)
            pos += 1

        if pool is not None and len(batch) > 1:
            results = list(pool.map(
                lambda ir: _route_one(graph, tasks[ir[0]], ir[1], pres_fac, scratch.get()),
                zip(batch, regions),
            ))
        else:
            results = [
                _route_one(graph, tasks[i], reg, pres_fac, scratch.get())
                for i, reg in zip(batch, regions)
            ]

        # Commit in order.  A net that fails its region routes again with a
        # grown region; those commits may touch later batch members' regions,
        # so from that point on the rest of the batch reroutes live.
        dirty = False
        for i, spec in zip(batch, results):
            if not dirty and spec is not None:
                edges = spec
            else:
                edges = None
                if dirty:
                    edges = _route_one(graph, tasks[i], _region(tasks[i], margin, graph),
                                       pres_fac, scratch.get())
                if edges is None:
                    edges = _route_with_growth(graph, tasks[i], margin, pres_fac, scratch.get())
                    dirty = True
            for e in edges:
                graph.demand[e] += 1
            routed_edges[i] = edges


def _route_with_growth(graph, task, margin, pres_fac, scratch):
    m = max(1, margin)
    while True:
        m *= 4
        bounds = _region(task, m, graph)
        edges = _route_one(graph, task, bounds, pres_fac, scratch)
        if edges is not None:
            return edges
        if bounds == (0, graph.x - 1, 0, graph.y - 1):
            raise RoutingError(
                f"net {task.net_id!r}: no route exists (isolated terminal gcell)"
            )


def _intersects(a, b) -> bool:
    return not (a[1] < b[0] or b[1] < a[0] or a[3] < b[2] or b[3] < a[2])


def route(
    netlist: Netlist,
    placement: Placement,
    graph: RoutingGraph,
    params: RouteParams | None = None,
) -> tuple[list[NetRoute], CongestionMap]:
    """Route every multi-terminal net of a placed netlist.

    Dangling (single-terminal) nets are skipped with a warning and appear in
    the result with an empty edge set.  Deterministic for a fixed seed, with
    or without ``params.parallel``.
    """
    if graph.fabric is None:
        raise RoutingError("graph was built without a fabric reference")
    fabric = graph.fabric
    work: list[tuple[str, list[list[int]]]] = []
    skipped: list[str] = []
    for net in netlist.nets:
        if len(net.terminals) < 2:
            skipped.append(net.id)
            continue
        work.append((net.id, terminal_gcells(net, netlist, placement, graph, fabric)))
    if skipped:
        logger.warning("skipping %d dangling net(s): %s", len(skipped), ", ".join(skipped[:5]))

    routes, cmap = route_terminal_sets(graph, work, params)
    by_id = {r.net_id: r for r in routes}
    full = [by_id.get(net.id, NetRoute(net_id=net.id, edges=())) for net in netlist.nets]
    return full, cmap


def congestion_csv(cmap: CongestionMap, layer: int) -> str:
    """Heatmap rows for one 1-based layer: ``layer,x,y,dir,demand,capacity,ratio``.

    Via edges between this layer and the next appear as ``dir=via`` rows.
    """
    li = layer - 1
    lines = ["layer,x,y,dir,demand,capacity,ratio"]
    dem = cmap.layer_demand[li]
    cap = cmap.layer_capacity[li]
    d = cmap.layer_dirs[li]
    for (gy, gx), v in np.ndenumerate(dem):
        c = int(cap[gy, gx])
        ratio = (v / c) if c else (0.0 if v == 0 else float("inf"))
        lines.append(f"{layer},{gx},{gy},{d},{int(v)},{c},{ratio:.6g}")
    if li < cmap.via_demand.shape[0]:
        vd = cmap.via_demand[li]
        vc = cmap.via_capacity[li]
        for (gy, gx), v in np.ndenumerate(vd):
            c = int(vc[gy, gx])
            ratio = (v / c) if c else (0.0 if v == 0 else float("inf"))
            lines.append(f"{layer},{gx},{gy},via,{int(v)},{c},{ratio:.6g}")
    return "\n".join(lines) + "\n"
