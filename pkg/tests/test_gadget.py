import json

import networkx as nx
import pytest
from networkx.algorithms.isomorphism import DiGraphMatcher

from treeinv.errors import BadParams, TruncationExceeded
from treeinv.gadget import (
    ColorAutomorphism,
    ball_words,
    build_sigma,
    enumerate_region_maps,
    expected_gadget_count,
    gadget_distance,
    gadget_symmetries,
    green_inversion_analysis,
    is_color_isomorphism,
    labelings_isomorphic,
    local_blue_swap_analysis,
    neighbour,
    quotient_is_tree_ball,
    red_swap_count,
    rotate,
    torsion_search,
    transitivity_witness,
)


@pytest.fixture(scope="module")
def sigma3():
    return build_sigma(3)


def region_graph(C, region):
    G = C.to_networkx()
    nodes = [6 * C.index[w] + i for w in region for i in range(6)]
    return G.subgraph(nodes).copy()


def vf2_maps(C, region, pins):
    """Colour isomorphisms of the induced region onto itself honouring gadget pins."""
    H = region_graph(C, region)
    matcher = DiGraphMatcher(
        H, H,
        node_match=lambda a, b: a["color"] == b["color"],
        edge_match=lambda a, b: a["color"] == b["color"],
    )
    out = []
    for m in matcher.isomorphisms_iter():
        if all(m[6 * C.index[w]] // 6 == C.index[v] for w, v in pins.items()):
            out.append(m)
    return out


# -- construction


def test_radius0():
    C = build_sigma(0)
    assert len(C.gadgets) == 1 and C.node_count == 6
    assert C.arc_counts() == {"internal": 8, "red": 0, "green": 0}


def test_radius1():
    C = build_sigma(1)
    assert len(C.gadgets) == 5 and C.node_count == 30
    assert sum(C.node_color(n) == "blue" for n in range(6)) == 2
    assert C.arc_counts() == {"internal": 40, "red": 6, "green": 4}


def test_attachment_arc_counts():
    C = build_sigma(1)
    by_pair = {}
    for a, b, col in C.arcs:
        ga, gb = C.gadgets[a // 6], C.gadgets[b // 6]
        if ga != gb:
            key = (frozenset((ga, gb)), col)
            by_pair[key] = by_pair.get(key, 0) + 1
    assert by_pair[(frozenset(("o", "o0")), "red")] == 2
    assert by_pair[(frozenset(("o", "o1")), "red")] == 2
    assert by_pair[(frozenset(("o", "op")), "red")] == 2
    assert by_pair[(frozenset(("o", "og")), "green")] == 4


def test_internal_structure():
    C = build_sigma(0)
    arcs = {(a, b) for a, b, _ in C.arcs}
    assert {(0, 1), (1, 2), (2, 3), (3, 0)} <= arcs
    assert {(4, 0), (4, 2), (5, 1), (5, 3)} <= arcs


@pytest.mark.parametrize("R", range(5))
def test_gadget_counts(R):
    C = build_sigma(R)
    assert len(C.gadgets) == expected_gadget_count(R)
    assert len(C.gadgets) == 1 + 4 * (3 ** R - 1) // 2


@pytest.mark.parametrize("R", range(4))
def test_quotient_is_t4_ball(R):
    C = build_sigma(R)
    assert quotient_is_tree_ball(C)
    Q = nx.Graph()
    Q.add_nodes_from(C.gadgets)
    Q.add_edges_from((a, b) for a, b, _ in C.quotient_edges())
    T = nx.Graph()
    T.add_node(0)
    frontier, nxt = [0], 1
    for depth in range(R):
        new = []
        for v in frontier:
            for _ in range(4 if depth == 0 else 3):
                T.add_edge(v, nxt)
                new.append(nxt)
                nxt += 1
        frontier = new
    assert nx.is_isomorphic(Q, T)


def test_interior_degrees(sigma3):
    for w in sigma3.gadgets:
        if sigma3.is_interior(w):
            nb = sigma3.neighbours(w)
            assert len(nb) == 4
            kinds = sorted(
                "green" if neighbour(w, "g") == v else "parent" if neighbour(w, "p") == v else "child"
                for v in nb
            )
            assert kinds == ["child", "child", "green", "parent"]


def test_words_reduced(sigma3):
    for w in sigma3.gadgets:
        for a, b in zip(w[1:], w[2:]):
            assert (a, b) not in {("g", "g"), ("0", "p"), ("1", "p"), ("p", "0")}
        assert gadget_distance("o", w) == len(w) - 1
    assert ball_words("o", 1) == ["o", "op", "og", "o0", "o1"]


def test_single_gadget_symmetry_is_cyclic():
    for anchor in (0, 1):
        syms = gadget_symmetries(anchor)
        assert len(syms) == 4
        assert {tuple(rotate(i, r) for i in range(6)) for r in range(4)} == set(syms)


def test_labelings_isomorphic():
    assert labelings_isomorphic(2)
    assert labelings_isomorphic(3)


def test_export(tmp_path):
    C = build_sigma(1)
    data = json.loads(json.dumps(C.to_json()))
    assert len(data["nodes"]) == 30 and len(data["arcs"]) == 50
    assert {n["color"] for n in data["nodes"]} == {"black", "blue"}
    assert data["arcs"][0] == {"src": "o:b0", "dst": "o:b1", "color": "internal"}
    dot = C.to_dot()
    assert dot.startswith("digraph") and dot.count("->") == 50
    assert "color=green" in dot and "color=red" in dot


# -- children


def test_children(sigma3):
    assert sigma3.children("o") == ["o0", "o1"]
    assert sigma3.grandchildren("o") == ["o00", "o01", "o10", "o11"]
    with pytest.raises(TruncationExceeded):
        sigma3.children("o000")
    with pytest.raises(TruncationExceeded):
        sigma3.children("o0000")


def test_child_relation_antisymmetric(sigma3):
    desc = {}
    for w in sigma3.gadgets:
        if len(w) - 1 < sigma3.radius:
            desc[w] = set(sigma3.children(w))
    changed = True
    while changed:
        changed = False
        for w, ds in desc.items():
            extra = set().union(*(desc.get(d, set()) for d in ds)) - ds
            if extra:
                ds |= extra
                changed = True
    for w, ds in desc.items():
        assert w not in ds
    assert "o" in sigma3.children("op")


# -- region maps against VF2


@pytest.mark.parametrize(
    "R, region_center, pins",
    [
        (1, "o", {"o": "o"}),
        (2, "o", {"o": "o"}),
        (2, "og", {"og": "og"}),
    ],
)
def test_region_maps_match_vf2(R, region_center, pins):
    C = build_sigma(R)
    region = ball_words(region_center, 1)
    maps = list(enumerate_region_maps(C, region, pins))
    total = sum(phi.multiplicity for phi in maps)
    assert total == len(vf2_maps(C, region, pins))


def test_green_pair_maps_match_vf2():
    C = build_sigma(2)
    region = ["o", "og", "op", "o0", "o1", "ogp", "og0", "og1"]
    pins = {"o": "og", "og": "o"}
    maps = list(enumerate_region_maps(C, region, pins))
    assert sum(phi.multiplicity for phi in maps) == len(vf2_maps(C, region, pins)) > 0


def test_vf2_maps_respect_gadgets():
    C = build_sigma(1)
    region = ball_words("o", 1)
    for m in vf2_maps(C, region, {}):
        for w in region:
            images = {m[6 * C.index[w] + i] // 6 for i in range(6)}
            assert len(images) == 1


def test_unfactored_maps_are_isomorphisms(sigma3):
    region = ball_words("o", 2)
    n = 0
    for phi in enumerate_region_maps(sigma3, region, {"o": "o"}, anchor_rotations=(1,), factor_leaves=False):
        assert is_color_isomorphism(sigma3, region, phi.node_map(sigma3))
        n += 1
        if n > 200:
            break
    assert n > 0


def test_maps_preserve_edge_colouring(sigma3):
    region = ball_words("o", 2)
    colour = {frozenset((a, b)): col for a, b, col in sigma3.quotient_edges()}
    direction = {(a, b) for a, b, col in sigma3.quotient_edges() if col == "red"}
    for phi in enumerate_region_maps(sigma3, region, {"o": "o"}):
        gm = phi.gadget_map
        for w in region:
            for v in region:
                e = frozenset((w, v))
                if e in colour and len(e) == 2:
                    assert colour[frozenset((gm[w], gm[v]))] == colour[e]
                    if (w, v) in direction:
                        assert (gm[w], gm[v]) in direction


def test_region_needs_pinned_root(sigma3):
    with pytest.raises(BadParams):
        list(enumerate_region_maps(sigma3, ["o", "o0"], {}))


# -- local swaps


def test_blue_swap_on_base(sigma3):
    rep = local_blue_swap_analysis(sigma3, "o")
    assert rep.passed
    assert rep.black_cycle_types == [[4]]
    assert rep.grandchildren_orders == [4]
    assert set(rep.fix_rotations) <= {0, 2}
    assert rep.identity_present


def test_blue_swap_homogeneous(sigma3):
    reports = [local_blue_swap_analysis(sigma3, w).to_json() for w in sigma3.gadgets if sigma3.is_interior(w, 2)]
    assert len(reports) == 5
    for r in reports:
        r.pop("gadget")
    assert all(r == reports[0] for r in reports)


def test_blue_swap_needs_room():
    with pytest.raises(TruncationExceeded):
        local_blue_swap_analysis(build_sigma(3), "o00")


def test_green_swap(sigma3):
    rep = green_inversion_analysis(sigma3, ("o", "og"))
    assert rep.passed and rep.distance_one_orders == [4]
    with pytest.raises(BadParams):
        green_inversion_analysis(sigma3, ("o", "o0"))


def test_green_identity_fixes_everything(sigma3):
    region = ball_words("o", 2)
    ident = [
        phi for phi in enumerate_region_maps(sigma3, region, {"o": "o"}, anchor_rotations=(0,))
        if all(phi.gadget_map[w] == w for w in region)
    ]
    assert ident and all(phi.rotation["o"] == 0 for phi in ident)


@pytest.mark.parametrize("R", [2, 3])
def test_no_red_swap(R):
    C = build_sigma(R)
    for w in C.gadgets:
        if len(w) < R:
            for c in C.children(w):
                assert red_swap_count(C, w, c) == 0
    with pytest.raises(BadParams):
        red_swap_count(C, "o", "og")


# -- transitivity


def test_transitivity_identity(sigma3):
    phi = transitivity_witness(sigma3, "o0", "o0")
    assert all(phi.gadget_map[w] == w and phi.rotation[w] == 0 for w in phi.gadget_map)


def test_transitivity_examples():
    C2 = build_sigma(2)
    phi = transitivity_witness(C2, "o", "og")
    assert phi.gadget_map["o"] == "og"
    C3 = build_sigma(3)
    phi = transitivity_witness(C3, "o", "o0")
    assert phi.gadget_map["o"] == "o0"
    assert is_color_isomorphism(C3, list(phi.gadget_map), phi.node_map(C3))


def test_transitivity_all_pairs(sigma3):
    inner = [w for w in sigma3.gadgets if sigma3.is_interior(w, 1)]
    assert len(inner) == 17
    for a in inner:
        for b in inner:
            assert transitivity_witness(sigma3, a, b).gadget_map[a] == b


def test_transitivity_out_of_range(sigma3):
    with pytest.raises(TruncationExceeded):
        transitivity_witness(sigma3, "o", "o000")


def test_color_automorphism_json(sigma3):
    phi = transitivity_witness(sigma3, "o", "op")
    data = phi.to_json()
    assert data["gadget_map"]["o"] == "op"
    assert ColorAutomorphism(**{k: data[k] for k in ("gadget_map", "rotation")}).gadget_map == data["gadget_map"]


# -- torsion


def test_torsion_search_r3(sigma3):
    rep = torsion_search(sigma3)
    assert rep.exhaustive and rep.found == []
    assert len(rep.case_a) == 5 and len(rep.case_b) == 1
    assert all(c["involutions"] == 0 and c["min_order"] >= 4 for c in rep.case_a + rep.case_b)


def test_torsion_search_params():
    with pytest.raises(BadParams):
        torsion_search(build_sigma(2))
    rep = torsion_search(build_sigma(3), budget=10)
    assert not rep.exhaustive


def test_torsion_threads_identical(sigma3):
    assert torsion_search(sigma3, threads=1).dumps() == torsion_search(sigma3, threads=2).dumps()


def test_inconsistent_pins_give_no_maps():
    # with o fixed, its green partner cannot land on a red child
    C = build_sigma(2)
    region = ball_words("o", 1)
    assert list(enumerate_region_maps(C, region, {"o": "o", "og": "o0"})) == []
