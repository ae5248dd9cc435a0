"""The coloured digraph obtained by blowing up each vertex of ``T_4`` into a gadget.

A gadget has black nodes ``b0 -> b1 -> b2 -> b3 -> b0`` and blue nodes with
``u0 -> b0, b2`` and ``u1 -> b1, b3``.  Every ``T_4`` vertex has one green
partner, one red parent and two red children.  Red arcs run black -> blue:
``b0, b2`` of a gadget feed ``u0, u1`` of its child 0, ``b1, b3`` those of its
child 1.  A green pair ``(A, B)`` carries the blue 4-cycle
``A.u0 -> B.u0 -> A.u1 -> B.u1 -> A.u0``.

Gadgets are named by reduced words over ``p`` (parent), ``g`` (green), ``0``
and ``1`` (children) read from the base gadget ``o``; a step to the parent
arrives with the origin as child 0.  A colour automorphism maps gadgets to
gadgets and acts inside each one as a rotation ``r`` of the black cycle (the
gadget has no other symmetries), so region maps are enumerated as a gadget
map plus one rotation per gadget.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import BadParams, BudgetExceeded, NoWitness, TruncationExceeded

LOCAL_NAMES = ("b0", "b1", "b2", "b3", "u0", "u1")
BLACK = (0, 1, 2, 3)
BLUE = (4, 5)
DEFAULT_BUDGET = 10 ** 8
MAX_RADIUS = 4


def rotate(local: int, r: int) -> int:
    """Image of a gadget node under rotation ``r`` of its black cycle."""
    if local < 4:
        return (local + r) % 4
    return 4 + (local - 4 + r) % 2


def internal_arcs(anchor: int = 0) -> list[tuple[int, int]]:
    """Arcs inside one gadget.

    ``anchor`` selects which black pair ``u0`` is attached to: 0 gives
    ``u0 -> b0, b2``, 1 gives ``u0 -> b1, b3``.
    """
    arcs = [(i, (i + 1) % 4) for i in range(4)]
    a = anchor % 2
    arcs += [(4, a), (4, a + 2), (5, 1 - a), (5, 3 - a)]
    return arcs


# -- T_4 words ---------------------------------------------------------------

_STEPS = ("p", "g", "0", "1")
_FORBIDDEN = {("g", "g"), ("0", "p"), ("1", "p"), ("p", "0")}


def _valid_steps(word: str) -> list[str]:
    last = word[-1] if len(word) > 1 else None
    return [s for s in _STEPS if last is None or (last, s) not in _FORBIDDEN]


def neighbour(word: str, rel: str) -> str:
    """Gadget reached from ``word`` along ``rel`` (``p``, ``g``, ``0`` or ``1``)."""
    last = word[-1] if len(word) > 1 else None
    if rel == "p" and last in ("0", "1"):
        return word[:-1]
    if rel == "g" and last == "g":
        return word[:-1]
    if rel == "0" and last == "p":
        return word[:-1]
    return word + rel


def gadget_distance(a: str, b: str) -> int:
    """Distance in ``T_4`` between two reduced words."""
    i = 0
    while i < min(len(a), len(b)) and a[i] == b[i]:
        i += 1
    return len(a) + len(b) - 2 * i


def ball_words(center: str, radius: int) -> list[str]:
    """Gadgets within ``radius`` of ``center`` in breadth-first order."""
    seen = {center: 0}
    order = [center]
    queue = deque([center])
    while queue:
        w = queue.popleft()
        if seen[w] == radius:
            continue
        for rel in _STEPS:
            v = neighbour(w, rel)
            if v not in seen:
                seen[v] = seen[w] + 1
                order.append(v)
                queue.append(v)
    return order


class GadgetComplex:
    """Truncation of the blown-up tree to gadgets within ``radius`` of ``o``."""

    def __init__(self, radius: int, anchor: int = 0):
        if radius < 0:
            raise BadParams(f"radius must be non-negative, got {radius}")
        self.radius = radius
        self.anchor = anchor
        self.gadgets: list[str] = ball_words("o", radius)
        self.index = {w: i for i, w in enumerate(self.gadgets)}
        self.arcs: list[tuple[int, int, str]] = []
        inner = internal_arcs(anchor)
        for gi in range(len(self.gadgets)):
            for a, b in inner:
                self.arcs.append((6 * gi + a, 6 * gi + b, "internal"))
        for w in self.gadgets:
            for j in (0, 1):
                c = neighbour(w, str(j))
                if c in self.index:
                    self._red(w, c, j)
            partner = neighbour(w, "g")
            if partner in self.index and len(partner) > len(w):
                self._green(w, partner)
        self.out: dict[int, list[tuple[int, str]]] = {}
        self.inn: dict[int, list[tuple[int, str]]] = {}
        for a, b, col in self.arcs:
            self.out.setdefault(a, []).append((b, col))
            self.inn.setdefault(b, []).append((a, col))

    def _node(self, w: str, local: int) -> int:
        return 6 * self.index[w] + local

    def _red(self, parent: str, child: str, j: int) -> None:
        self.arcs.append((self._node(parent, j), self._node(child, 4), "red"))
        self.arcs.append((self._node(parent, j + 2), self._node(child, 5), "red"))

    def _green(self, a: str, b: str) -> None:
        cyc = [self._node(a, 4), self._node(b, 4), self._node(a, 5), self._node(b, 5)]
        for i in range(4):
            self.arcs.append((cyc[i], cyc[(i + 1) % 4], "green"))

    # -- queries

    @property
    def node_count(self) -> int:
        return 6 * len(self.gadgets)

    def node_name(self, node: int) -> str:
        return f"{self.gadgets[node // 6]}:{LOCAL_NAMES[node % 6]}"

    def node_color(self, node: int) -> str:
        return "black" if node % 6 < 4 else "blue"

    def is_interior(self, w: str, margin: int = 1) -> bool:
        return w in self.index and len(w) - 1 <= self.radius - margin

    def _require(self, w: str) -> None:
        if w not in self.index:
            raise TruncationExceeded(f"gadget {w} outside radius {self.radius}")

    def children(self, w: str) -> list[str]:
        """Gadgets reached from ``w`` by forward red arcs."""
        self._require(w)
        if len(w) - 1 >= self.radius:
            raise TruncationExceeded(f"children of {w} lie outside radius {self.radius}")
        out = []
        for b in BLACK:
            for dst, col in self.out.get(self._node(w, b), ()):
                if col == "red":
                    c = self.gadgets[dst // 6]
                    if c not in out:
                        out.append(c)
        return sorted(out, key=self.index.get)

    def grandchildren(self, w: str) -> list[str]:
        return [gc for c in self.children(w) for gc in self.children(c)]

    def green_partner(self, w: str) -> str:
        self._require(w)
        v = neighbour(w, "g")
        self._require(v)
        return v

    def parent(self, w: str) -> str:
        self._require(w)
        v = neighbour(w, "p")
        self._require(v)
        return v

    def neighbours(self, w: str) -> list[str]:
        return [v for v in (neighbour(w, s) for s in _STEPS) if v in self.index]

    def arc_counts(self) -> dict[str, int]:
        counts = {"internal": 0, "red": 0, "green": 0}
        for _, _, col in self.arcs:
            counts[col] += 1
        return counts

    def quotient_edges(self) -> list[tuple[str, str, str]]:
        """Gadget-level edges with their colour; red edges point parent -> child."""
        seen = set()
        out = []
        for a, b, col in self.arcs:
            if col == "internal":
                continue
            ga, gb = self.gadgets[a // 6], self.gadgets[b // 6]
            key = (ga, gb, col) if col == "red" else (min(ga, gb), max(ga, gb), col)
            if key not in seen:
                seen.add(key)
                out.append(key)
        return out

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "gadgets": list(self.gadgets),
            "nodes": [
                {"id": self.node_name(n), "gadget": self.gadgets[n // 6], "color": self.node_color(n)}
                for n in range(self.node_count)
            ],
            "arcs": [
                {"src": self.node_name(a), "dst": self.node_name(b), "color": col}
                for a, b, col in self.arcs
            ],
        }

    def to_dot(self) -> str:
        lines = ["digraph sigma {", "  node [shape=circle, style=filled, label=\"\"];"]
        for gi, w in enumerate(self.gadgets):
            lines.append(f"  subgraph \"cluster_{w}\" {{")
            lines.append(f"    label=\"{w}\"; style=dashed;")
            for local in range(6):
                n = 6 * gi + local
                fill = "black" if local < 4 else "blue"
                lines.append(f"    \"{self.node_name(n)}\" [fillcolor={fill}, xlabel=\"{LOCAL_NAMES[local]}\"];")
            lines.append("  }")
        colors = {"internal": "black", "red": "red", "green": "green"}
        for a, b, col in self.arcs:
            lines.append(f"  \"{self.node_name(a)}\" -> \"{self.node_name(b)}\" [color={colors[col]}];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_networkx(self):
        import networkx as nx

        G = nx.DiGraph()
        for n in range(self.node_count):
            G.add_node(n, color=self.node_color(n))
        for a, b, col in self.arcs:
            G.add_edge(a, b, color=col)
        return G


def build_sigma(radius: int, anchor: int = 0) -> GadgetComplex:
    return GadgetComplex(radius, anchor)


def expected_gadget_count(radius: int) -> int:
    return 1 + 4 * (3 ** radius - 1) // 2


def quotient_is_tree_ball(C: GadgetComplex) -> bool:
    """Contracting gadgets gives the radius-``R`` ball of ``T_4``."""
    edges = C.quotient_edges()
    if len(edges) != len(C.gadgets) - 1:
        return False
    deg = {w: 0 for w in C.gadgets}
    adj: dict[str, set[str]] = {w: set() for w in C.gadgets}
    for a, b, _ in edges:
        deg[a] += 1
        deg[b] += 1
        adj[a].add(b)
        adj[b].add(a)
    seen = {"o"}
    stack = ["o"]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != len(C.gadgets):
        return False
    for w in C.gadgets:
        want = 4 if len(w) - 1 < C.radius else (1 if C.radius else 0)
        if deg[w] != want:
            return False
    return True


def gadget_symmetries(anchor: int = 0) -> list[tuple[int, ...]]:
    """All colour-preserving permutations of a single gadget, by brute force."""
    arcs = set(internal_arcs(anchor))
    out = []
    for blacks in itertools.permutations(BLACK):
        for blues in itertools.permutations(BLUE):
            perm = blacks + blues
            if {(perm[a], perm[b]) for a, b in arcs} == arcs:
                out.append(perm)
    return out


def labelings_isomorphic(radius: int) -> bool:
    """Whether both anchorings of the blue attachments give isomorphic complexes."""
    import networkx as nx
    from networkx.algorithms.isomorphism import DiGraphMatcher

    G0 = build_sigma(radius, 0).to_networkx()
    G1 = build_sigma(radius, 1).to_networkx()
    if G0.number_of_edges() != G1.number_of_edges():
        return False
    matcher = DiGraphMatcher(
        G0, G1,
        node_match=lambda x, y: x["color"] == y["color"],
        edge_match=lambda x, y: x["color"] == y["color"],
    )
    return matcher.is_isomorphic()


# -- region maps -------------------------------------------------------------


@dataclass
class ColorAutomorphism:
    """Colour-preserving map from a region of gadgets into the complex.

    ``rotation`` is only meaningful on gadgets in ``core``; on the other
    (boundary leaf) gadgets it is the smallest admissible rotation and
    ``multiplicity`` counts the admissible combinations there.
    """

    gadget_map: dict[str, str]
    rotation: dict[str, int]
    multiplicity: int = 1

    def node_map(self, C: GadgetComplex) -> dict[int, int]:
        out = {}
        for w, v in self.gadget_map.items():
            r = self.rotation[w]
            for local in range(6):
                out[C._node(w, local)] = C._node(v, rotate(local, r))
        return out

    def order_on(self, gadgets: Iterable[str]) -> int:
        return perm_order_on(self.gadget_map, gadgets)

    def to_json(self) -> dict:
        return {
            "gadget_map": dict(self.gadget_map),
            "rotation": dict(self.rotation),
            "multiplicity": self.multiplicity,
        }


def perm_order_on(mapping: dict[str, str], subset: Iterable[str]) -> int:
    subset = list(subset)
    if {mapping[w] for w in subset} != set(subset):
        raise ValueError("map does not permute the given gadgets")
    seen = set()
    lengths = []
    for w in subset:
        if w in seen:
            continue
        n, x = 0, w
        while x not in seen:
            seen.add(x)
            x = mapping[x]
            n += 1
        lengths.append(n)
    return math.lcm(*lengths)


def is_color_isomorphism(C: GadgetComplex, region: Iterable[str], node_map: dict[int, int]) -> bool:
    """Node-level check: colours kept, arcs within the region sent to arcs of the same colour.

    Together with equal arc counts on both sides this makes the map an
    isomorphism of the induced subgraphs.
    """
    nodes = {C._node(w, local) for w in region for local in range(6)}
    if set(node_map) != nodes or len(set(node_map.values())) != len(nodes):
        return False
    image = set(node_map.values())
    arcset = {(a, b): col for a, b, col in C.arcs}
    src = [(a, b, col) for a, b, col in C.arcs if a in nodes and b in nodes]
    dst = [1 for a, b, _ in C.arcs if a in image and b in image]
    if len(src) != len(dst):
        return False
    for n in nodes:
        if C.node_color(n) != C.node_color(node_map[n]):
            return False
    return all(arcset.get((node_map[a], node_map[b])) == col for a, b, col in src)


class _Counter:
    def __init__(self, budget: int):
        self.budget = budget
        self.expanded = 0

    def tick(self) -> None:
        self.expanded += 1
        if self.expanded > self.budget:
            raise BudgetExceeded(f"gadget search exceeded {self.budget} expansions")


def _bfs_tree(region: list[str]) -> dict[str, str]:
    members = set(region)
    parent = {}
    for w in region[1:]:
        for v in (neighbour(w, s) for s in _STEPS):
            if v in members and region.index(v) < region.index(w):
                parent[w] = v
                break
    return parent


def enumerate_region_maps(
    C: GadgetComplex,
    region: list[str],
    pins: dict[str, str],
    *,
    anchor_rotations: Iterable[int] = range(4),
    image_region: Iterable[str] | None = None,
    factor_leaves: bool = True,
    counter: _Counter | None = None,
) -> Iterator[ColorAutomorphism]:
    """Colour isomorphisms from ``region`` onto ``image_region`` honouring ``pins``.

    ``region`` must be a subtree of ``T_4`` listed in breadth-first order from
    its first gadget, which must be pinned.  With ``factor_leaves`` the
    rotations of leaf gadgets (one region neighbour) are counted rather than
    enumerated: they are independent of each other and of the gadget map.
    """
    counter = counter or _Counter(DEFAULT_BUDGET)
    for w in region:
        C._require(w)
    target = set(region if image_region is None else image_region)
    for w in target:
        C._require(w)
    if len(target) != len(region):
        return
    parent = _bfs_tree(region)
    members = set(region)
    leaves = set()
    if factor_leaves:
        for w in region[1:]:
            if sum(v in members for v in (neighbour(w, s) for s in _STEPS)) == 1:
                leaves.add(w)
    links = {w: _cross_arcs(C, w, parent[w]) for w in region[1:]}
    root = region[0]
    if root not in pins:
        raise BadParams("the first gadget of the region must be pinned")
    gmap: dict[str, str] = {}
    rot: dict[str, int] = {}
    used: set[str] = set()

    def place(i: int, mult: int) -> Iterator[ColorAutomorphism]:
        if i == len(region):
            yield ColorAutomorphism(dict(gmap), dict(rot), mult)
            return
        w = region[i]
        options = _options(C, w, parent[w], links[w], gmap, rot, counter)
        options = [
            (v, r) for v, r in options
            if v in target and v not in used and pins.get(w, v) == v
        ]
        if not options:
            return
        if w in leaves:
            for v in dict.fromkeys(vv for vv, _ in options):
                rs = [r for vv, r in options if vv == v]
                gmap[w], rot[w] = v, rs[0]
                used.add(v)
                yield from place(i + 1, mult * len(rs))
                used.discard(v)
            return
        for v, r in options:
            gmap[w], rot[w] = v, r
            used.add(v)
            yield from place(i + 1, mult)
            used.discard(v)

    v0 = pins[root]
    if v0 not in target:
        return
    for r in anchor_rotations:
        counter.tick()
        gmap.clear()
        rot.clear()
        used.clear()
        gmap[root], rot[root] = v0, r
        used.add(v0)
        yield from place(1, 1)


def _cross_arcs(C: GadgetComplex, w: str, v: str) -> list[tuple[int, int, str]]:
    """Arcs between gadgets ``w`` and ``v`` as (local in w, local in v, colour) with direction."""
    out = []
    for a, b, col in C.arcs:
        ga, gb = C.gadgets[a // 6], C.gadgets[b // 6]
        if ga == w and gb == v:
            out.append((a % 6, b % 6, col, +1))
        elif ga == v and gb == w:
            out.append((b % 6, a % 6, col, -1))
    return out


def _options(C, w, v, links, gmap, rot, counter) -> list[tuple[str, int]]:
    """Possible (image gadget, rotation) for ``w`` given its placed neighbour ``v``."""
    iv, rv = gmap[v], rot[v]
    lw, lv, col, direction = links[0]
    src = C._node(iv, rotate(lv, rv))
    pool = C.out.get(src, ()) if direction == -1 else C.inn.get(src, ())
    cands = sorted({(dst // 6, dst % 6) for dst, c in pool if c == col})
    out = []
    for gi, local in cands:
        img = C.gadgets[gi]
        if img == iv:
            continue
        for r in range(4):
            counter.tick()
            if rotate(lw, r) != local:
                continue
            if all(_arc_ok(C, img, r, iv, rv, a, b, c, d) for a, b, c, d in links):
                out.append((img, r))
    return out


def _arc_ok(C, img_w, rw, img_v, rv, lw, lv, col, direction) -> bool:
    a = C._node(img_w, rotate(lw, rw))
    b = C._node(img_v, rotate(lv, rv))
    if direction == +1:
        return (b, col) in C.out.get(a, ())
    return (a, col) in C.out.get(b, ())


# -- analyses ---------------------------------------------------------------


@dataclass
class BlueSwapReport:
    gadget: str
    swap_maps: int
    swap_classes: int
    black_cycle_types: list[list[int]]
    grandchildren_orders: list[int]
    children_swapped: bool
    square_swaps_child_blues: bool
    fix_maps: int
    fix_rotations: list[int]
    fix_children_fixed: bool
    identity_present: bool

    @property
    def passed(self) -> bool:
        return (
            self.swap_maps > 0
            and self.black_cycle_types == [[4]]
            and self.grandchildren_orders == [4]
            and self.children_swapped
            and self.square_swaps_child_blues
            and set(self.fix_rotations) <= {0, 2}
            and self.fix_children_fixed
            and self.identity_present
        )

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _black_cycle_type(r: int) -> list[int]:
    return {0: [1, 1, 1, 1], 1: [4], 2: [2, 2], 3: [4]}[r % 4]


def local_blue_swap_analysis(C: GadgetComplex, w: str, *, budget: int = DEFAULT_BUDGET) -> BlueSwapReport:
    """Every colour automorphism of the 2-ball around ``w`` that fixes ``w``."""
    if not C.is_interior(w, 2):
        raise TruncationExceeded(f"B({w}, 2) is not inside radius {C.radius}")
    region = ball_words(w, 2)
    kids = C.children(w)
    grand = C.grandchildren(w)
    counter = _Counter(budget)
    swap_maps = swap_classes = fix_maps = 0
    cycle_types, gc_orders, fix_rots = set(), set(), set()
    children_swapped = square_ok = fix_children = True
    identity = False
    for phi in enumerate_region_maps(C, region, {w: w}, counter=counter):
        r = phi.rotation[w]
        if r % 2:
            swap_maps += phi.multiplicity
            swap_classes += 1
            cycle_types.add(tuple(_black_cycle_type(r)))
            gc_orders.add(phi.order_on(grand))
            children_swapped &= phi.gadget_map[kids[0]] == kids[1]
            # the square rotates each child by an odd amount, swapping its blues
            for c in kids:
                c2 = phi.gadget_map[c]
                square_rot = (phi.rotation[c] + phi.rotation[c2]) % 4
                square_ok &= phi.gadget_map[c2] == c and square_rot % 2 == 1
        else:
            fix_maps += phi.multiplicity
            fix_rots.add(r)
            fix_children &= all(phi.gadget_map[c] == c for c in kids)
            if all(phi.gadget_map[x] == x and phi.rotation[x] == 0 for x in region):
                identity = True
    return BlueSwapReport(
        w, swap_maps, swap_classes, sorted(list(t) for t in cycle_types), sorted(gc_orders),
        children_swapped, square_ok, fix_maps, sorted(fix_rots), fix_children, identity,
    )


def _pair_region(C: GadgetComplex, a: str, b: str, rho: int = 2) -> list[str]:
    region = ball_words(a, rho)
    for w in ball_words(b, rho):
        if w not in region:
            region.append(w)
    # breadth-first from a within the union
    members = set(region)
    order = [a]
    seen = {a}
    queue = deque([a])
    while queue:
        w = queue.popleft()
        for s in _STEPS:
            v = neighbour(w, s)
            if v in members and v not in seen:
                seen.add(v)
                order.append(v)
                queue.append(v)
    return order


@dataclass
class GreenSwapReport:
    pair: tuple[str, str]
    maps: int
    classes: int
    distance_one_orders: list[int]
    distance_one_cycle_types: list[list[int]]

    @property
    def passed(self) -> bool:
        return self.maps > 0 and self.distance_one_orders == [4]

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["pair"] = list(self.pair)
        d["passed"] = self.passed
        return d


def _cycle_type_on(mapping: dict[str, str], subset: list[str]) -> list[int]:
    seen = set()
    out = []
    for w in subset:
        if w in seen:
            continue
        n, x = 0, w
        while x not in seen:
            seen.add(x)
            x = mapping[x]
            n += 1
        out.append(n)
    return sorted(out, reverse=True)


def green_inversion_analysis(C: GadgetComplex, pair: tuple[str, str], *,
                             budget: int = DEFAULT_BUDGET) -> GreenSwapReport:
    """Colour automorphisms of the 2-balls around a green pair that swap the pair."""
    a, b = pair
    if C.green_partner(a) != b:
        raise BadParams(f"{a} and {b} are not a green pair")
    if not (C.is_interior(a, 2) and C.is_interior(b, 2)):
        raise TruncationExceeded(f"2-balls around {a}, {b} leave radius {C.radius}")
    region = _pair_region(C, a, b)
    near = [w for x in (a, b) for w in C.neighbours(x) if w not in (a, b)]
    counter = _Counter(budget)
    maps = classes = 0
    orders, types = set(), set()
    for phi in enumerate_region_maps(C, region, {a: b, b: a}, counter=counter):
        maps += phi.multiplicity
        classes += 1
        orders.add(phi.order_on(near))
        types.add(tuple(_cycle_type_on(phi.gadget_map, near)))
    return GreenSwapReport((a, b), maps, classes, sorted(orders), sorted(list(t) for t in types))


def red_swap_count(C: GadgetComplex, parent: str, child: str, *, budget: int = DEFAULT_BUDGET) -> int:
    """Number of colour maps of the 2-balls around a red edge exchanging its ends."""
    if child not in C.children(parent):
        raise BadParams(f"{child} is not a red child of {parent}")
    # 2-balls when the truncation has room, otherwise the largest that fits
    rho = min(2, C.radius - max(len(parent), len(child)) + 1)
    region = _pair_region(C, parent, child, rho)
    counter = _Counter(budget)
    return sum(
        phi.multiplicity
        for phi in enumerate_region_maps(C, region, {parent: child, child: parent}, counter=counter)
    )


def transitivity_witness(C: GadgetComplex, g1: str, g2: str) -> ColorAutomorphism:
    """Colour isomorphism between equal-radius balls around ``g1`` and ``g2``.

    The radius is the largest one keeping both balls inside the truncation.
    """
    for w in (g1, g2):
        if not C.is_interior(w, 1):
            raise TruncationExceeded(f"{w} is not at distance <= {C.radius - 1} from o")
    rho = C.radius - max(len(g1), len(g2)) + 1
    region = ball_words(g1, rho)
    image = ball_words(g2, rho)
    for phi in enumerate_region_maps(C, region, {g1: g2}, image_region=image, factor_leaves=False):
        if not is_color_isomorphism(C, region, phi.node_map(C)):
            raise NoWitness(f"map {g1} -> {g2} failed node-level verification")
        return phi
    raise NoWitness(f"no colour isomorphism from B({g1},{rho}) to B({g2},{rho})")


# -- torsion -----------------------------------------------------------------


@dataclass
class TorsionReport:
    radius: int
    expanded: int
    exhaustive: bool
    case_a: list[dict] = field(default_factory=list)
    case_b: list[dict] = field(default_factory=list)
    found: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "expanded": self.expanded,
            "exhaustive": self.exhaustive,
            "case_a": self.case_a,
            "case_b": self.case_b,
            "found": self.found,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def _torsion_case_a(args):
    radius, anchor, w, budget = args
    C = build_sigma(radius, anchor)
    region = ball_words(w, 2)
    counter = _Counter(budget)
    maps = classes = 0
    min_order = None
    found = []
    try:
        for phi in enumerate_region_maps(C, region, {w: w}, anchor_rotations=(1, 3), counter=counter):
            maps += phi.multiplicity
            classes += 1
            order = phi.order_on(region)
            min_order = order if min_order is None else min(min_order, order)
            if order <= 2:
                found.append(phi.to_json())
    except BudgetExceeded:
        return None, counter.expanded
    return {"gadget": w, "maps": maps, "classes": classes, "involutions": len(found),
            "min_order": min_order, "found": found}, counter.expanded


def _torsion_case_b(args):
    radius, anchor, a, b, budget = args
    C = build_sigma(radius, anchor)
    region = _pair_region(C, a, b)
    counter = _Counter(budget)
    maps = classes = 0
    min_order = None
    found = []
    try:
        for phi in enumerate_region_maps(C, region, {a: b, b: a}, counter=counter):
            maps += phi.multiplicity
            classes += 1
            order = phi.order_on(region)
            min_order = order if min_order is None else min(min_order, order)
            if order <= 2:
                found.append(phi.to_json())
    except BudgetExceeded:
        return None, counter.expanded
    return {"pair": [a, b], "maps": maps, "classes": classes, "involutions": len(found),
            "min_order": min_order, "found": found}, counter.expanded


def torsion_search(C: GadgetComplex, *, budget: int = DEFAULT_BUDGET, threads: int = 1) -> TorsionReport:
    """Look for gadget-level involutions among maps that fix a gadget and swap its
    blues (case A) or exchange a green pair (case B).

    Each candidate is a colour automorphism of the 2-ball(s) around the fixed
    gadget or edge; an involution candidate is one acting with order at most 2
    on those gadgets.  Translations are not searched for.
    """
    if C.radius < 3:
        raise BadParams("torsion_search needs radius >= 3")
    a_jobs = [(C.radius, C.anchor, w, budget) for w in C.gadgets if C.is_interior(w, 2)]
    b_jobs = []
    for w in C.gadgets:
        v = neighbour(w, "g")
        if len(v) > len(w) and C.is_interior(w, 2) and C.is_interior(v, 2):
            b_jobs.append((C.radius, C.anchor, w, v, budget))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            a_res = list(pool.map(_torsion_case_a, a_jobs))
            b_res = list(pool.map(_torsion_case_b, b_jobs))
    else:
        a_res = [_torsion_case_a(j) for j in a_jobs]
        b_res = [_torsion_case_b(j) for j in b_jobs]
    report = TorsionReport(C.radius, 0, True)
    for res, bucket in ((a_res, report.case_a), (b_res, report.case_b)):
        for item, spent in res:
            report.expanded += spent
            if item is None or report.expanded > budget:
                report.exhaustive = False
                report.expanded = min(report.expanded, budget)
                return report
            report.found.extend(item.pop("found"))
            bucket.append(item)
    return report
