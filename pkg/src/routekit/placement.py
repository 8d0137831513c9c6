"""Die sizing and half-perimeter-wirelength placement.

The die is the smallest near-square site grid keeping functional-cell area
at or below the utilization target (default 0.6; the remaining area is
interspersed whitespace).  Cells occupy a uniform slot grid, so any slot
assignment is overlap-free by construction.

Placement itself is simulated annealing over swap/relocate moves with
geometric cooling.  A zero-cost move is accepted with probability 0.5 so
plateaus are still explored deterministically from the seeded RNG.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .fabric import FabricSpec
from .netlist import Netlist
from .rent import PinDensityInput


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class Die:
    width: int  # sites
    height: int  # sites
    site_dim_nm: float
    utilization: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise PlacementError("die must be at least 1x1 sites")
        if not 0 < self.utilization <= 1:
            raise PlacementError("utilization must lie in (0, 1]")

    @property
    def area_sites(self) -> int:
        return self.width * self.height

    @property
    def area_um2(self) -> float:
        dim_um = self.site_dim_nm / 1000.0
        return self.area_sites * dim_um * dim_um


@dataclass
class Placement:
    assignments: dict[str, tuple[int, int]]  # cell id -> site origin (x, y)
    die: Die


def _slot_shape(netlist: Netlist) -> tuple[int, int]:
    if not netlist.cells:
        raise PlacementError("cannot place an empty netlist")
    w = max(netlist.masters[c.master].width for c in netlist.cells)
    h = max(netlist.masters[c.master].height for c in netlist.cells)
    return w, h


def size_die(netlist: Netlist, fabric: FabricSpec, utilization: float = 0.6) -> Die:
    """Smallest near-square die with cell area / die area <= utilization."""
    if not 0 < utilization <= 1:
        raise PlacementError("utilization must lie in (0, 1]")
    if not netlist.cells:
        raise PlacementError("cannot size a die for an empty netlist")
    cell_area = sum(netlist.masters[c.master].area_sites for c in netlist.cells)
    target = cell_area / utilization
    width = math.ceil(math.sqrt(target))
    height = math.ceil(target / width)
    # Grow until the uniform slot grid has a slot for every cell.
    sw, sh = _slot_shape(netlist)
    grow_w = True
    while (width // sw) * (height // sh) < len(netlist.cells):
        if grow_w:
            width += 1
        else:
            height += 1
        grow_w = not grow_w
    return Die(width=width, height=height, site_dim_nm=fabric.site_dim_nm, utilization=utilization)


def _slots(netlist: Netlist, die: Die) -> tuple[int, list[int], list[int]]:
    sw, sh = _slot_shape(netlist)
    cols = die.width // sw
    rows = die.height // sh
    if cols * rows < len(netlist.cells):
        raise PlacementError(
            f"die {die.width}x{die.height} holds only {cols * rows} slots "
            f"for {len(netlist.cells)} cells"
        )
    xs = [(s % cols) * sw for s in range(cols * rows)]
    ys = [(s // cols) * sh for s in range(cols * rows)]
    return cols * rows, xs, ys


def _terminal_offsets(netlist: Netlist) -> list[list[tuple[int, int, int]]]:
    """Per net: (cell index, dx, dy) with the pin's first access offset."""
    index = {c.id: i for i, c in enumerate(netlist.cells)}
    nets = []
    for net in netlist.nets:
        terms = []
        for cid, pin in net.terminals:
            master = netlist.master_of(cid)
            _, dx, dy = master.pin(pin).accesses[0]
            terms.append((index[cid], dx, dy))
        nets.append(terms)
    return nets


def hpwl(netlist: Netlist, placement: Placement) -> int:
    """Total half-perimeter wirelength over all nets, in site units.

    A net's terminal sits at its cell origin plus the pin's first access
    offset; the net contributes its bounding-box half perimeter.
    """
    total = 0
    for net in netlist.nets:
        xs: list[int] = []
        ys: list[int] = []
        for cid, pin in net.terminals:
            if cid not in placement.assignments:
                raise PlacementError(f"net {net.id!r} references unplaced cell {cid!r}")
            ox, oy = placement.assignments[cid]
            _, dx, dy = netlist.master_of(cid).pin(pin).accesses[0]
            xs.append(ox + dx)
            ys.append(oy + dy)
        if xs:
            total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def random_placement(netlist: Netlist, fabric: FabricSpec, die: Die, seed: int = 0) -> Placement:
    """The seeded random slot assignment ``place`` starts from."""
    rng = random.Random(seed)
    nslots, xs, ys = _slots(netlist, die)
    chosen = rng.sample(range(nslots), len(netlist.cells))
    assignments = {c.id: (xs[s], ys[s]) for c, s in zip(netlist.cells, chosen)}
    return Placement(assignments=assignments, die=die)


@dataclass
class AnnealConfig:
    moves_per_temp: int | None = None  # default 100 * num_cells, capped at moves_cap
    moves_cap: int = 40000
    cooling: float = 0.95
    min_accept_rate: float = 0.01
    max_temps: int = 150
    restarts: int = 1


def place(
    netlist: Netlist,
    fabric: FabricSpec,
    die: Die,
    seed: int = 0,
    config: AnnealConfig | None = None,
) -> Placement:
    """Anneal cells into die slots minimizing total HPWL.

    Deterministic for a fixed seed; the returned placement never has higher
    HPWL than the initial random assignment (best-seen state is kept).
    """
    cfg = config or AnnealConfig()
    nslots, slot_x, slot_y = _slots(netlist, die)
    n = len(netlist.cells)
    net_terms = _terminal_offsets(netlist)
    cell_nets: list[list[int]] = [[] for _ in range(n)]
    for j, terms in enumerate(net_terms):
        for c, _, _ in terms:
            if not cell_nets[c] or cell_nets[c][-1] != j:
                cell_nets[c].append(j)

    moves_per_temp = cfg.moves_per_temp
    if moves_per_temp is None:
        moves_per_temp = min(100 * n, cfg.moves_cap)

    rng = random.Random(seed)
    best_slots: list[int] | None = None
    best_cost = math.inf
    for _ in range(max(1, cfg.restarts)):
        slots = rng.sample(range(nslots), n)
        cost = _anneal(
            slots, nslots, slot_x, slot_y, net_terms, cell_nets, rng,
            moves_per_temp, cfg.cooling, cfg.min_accept_rate, cfg.max_temps,
        )
        if cost < best_cost:
            best_cost = cost
            best_slots = slots[:]

    assert best_slots is not None
    assignments = {
        c.id: (slot_x[best_slots[i]], slot_y[best_slots[i]])
        for i, c in enumerate(netlist.cells)
    }
    return Placement(assignments=assignments, die=die)


def _anneal(cell_slot, nslots, slot_x, slot_y, net_terms, cell_nets, rng,
            moves_per_temp, cooling, min_accept, max_temps):
    """One annealing run; leaves ``cell_slot`` at the best-seen assignment
    and returns its cost."""
    n = len(cell_slot)
    slot_cell = [-1] * nslots
    for c, s in enumerate(cell_slot):
        slot_cell[s] = c
    px = [slot_x[s] for s in cell_slot]
    py = [slot_y[s] for s in cell_slot]

    hp = []
    for terms in net_terms:
        xs = [px[c] + dx for c, dx, _ in terms]
        ys = [py[c] + dy for c, _, dy in terms]
        hp.append((max(xs) - min(xs)) + (max(ys) - min(ys)))
    cost = sum(hp)
    best_cost = cost
    best = cell_slot[:]

    rand = rng.random
    randrange = rng.randrange

    def probe(c, s1, c2, s2):
        # HPWL delta and new per-net values with c at s2 (and c2, if any, at s1),
        # computed without touching state.
        nets = cell_nets[c]
        if c2 >= 0:
            nets = list(nets)
            for j in cell_nets[c2]:
                if j not in nets:
                    nets.append(j)
        nx2, ny2 = slot_x[s2], slot_y[s2]
        nx1, ny1 = slot_x[s1], slot_y[s1]
        delta = 0
        new_vals = []
        for j in nets:
            xmin = ymin = 1 << 60
            xmax = ymax = -(1 << 60)
            for cc, dx, dy in net_terms[j]:
                if cc == c:
                    x = nx2 + dx
                    y = ny2 + dy
                elif cc == c2:
                    x = nx1 + dx
                    y = ny1 + dy
                else:
                    x = px[cc] + dx
                    y = py[cc] + dy
                if x < xmin:
                    xmin = x
                if x > xmax:
                    xmax = x
                if y < ymin:
                    ymin = y
                if y > ymax:
                    ymax = y
            v = (xmax - xmin) + (ymax - ymin)
            new_vals.append(v)
            delta += v - hp[j]
        return delta, nets, new_vals

    def commit(c, s1, c2, s2, nets, new_vals):
        cell_slot[c] = s2
        slot_cell[s2] = c
        px[c] = slot_x[s2]
        py[c] = slot_y[s2]
        if c2 >= 0:
            cell_slot[c2] = s1
            slot_cell[s1] = c2
            px[c2] = slot_x[s1]
            py[c2] = slot_y[s1]
        else:
            slot_cell[s1] = -1
        for j, v in zip(nets, new_vals):
            hp[j] = v

    # Calibrate the start temperature from typical move magnitudes.
    deltas = []
    for _ in range(min(200, 20 * n)):
        c = randrange(n)
        s2 = randrange(nslots)
        s1 = cell_slot[c]
        if s1 == s2:
            continue
        d, _, _ = probe(c, s1, slot_cell[s2], s2)
        deltas.append(abs(d))
    t = max(1e-9, 2.0 * sum(deltas) / len(deltas)) if deltas else 1.0

    for _ in range(max_temps):
        accepted = 0
        for _ in range(moves_per_temp):
            c = randrange(n)
            s2 = randrange(nslots)
            s1 = cell_slot[c]
            if s1 == s2:
                continue
            c2 = slot_cell[s2]
            delta, nets, new_vals = probe(c, s1, c2, s2)
            if delta < 0:
                ok = True
            elif delta == 0:
                ok = rand() < 0.5
            else:
                ok = rand() < math.exp(-delta / t)
            if ok:
                commit(c, s1, c2, s2, nets, new_vals)
                cost += delta
                accepted += 1
                if cost < best_cost:
                    best_cost = cost
                    best = cell_slot[:]
        t *= cooling
        if accepted < max(1, int(min_accept * moves_per_temp)):
            break

    cell_slot[:] = best
    return best_cost


def overlap_violations(netlist: Netlist, placement: Placement) -> list[tuple[str, str]]:
    """Pairs of cells whose footprints overlap (empty for legal placements)."""
    rects = []
    for cell in netlist.cells:
        x, y = placement.assignments[cell.id]
        m = netlist.masters[cell.master]
        rects.append((cell.id, x, y, x + m.width, y + m.height))
    bad = []
    for i in range(len(rects)):
        id1, ax0, ay0, ax1, ay1 = rects[i]
        for j in range(i + 1, len(rects)):
            id2, bx0, by0, bx1, by1 = rects[j]
            if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                bad.append((id1, id2))
    return bad


def pin_density_of(placement: Placement, netlist: Netlist, fabric: FabricSpec) -> PinDensityInput:
    """Pin-density inputs for the analytic demand model: connected terminal
    count, die area, and the fabric's pin-access layer count."""
    return PinDensityInput(
        total_pins=netlist.total_terminals,
        die_area_um2=placement.die.area_um2,
        pin_access_layers=fabric.pin_access_layers,
    )
