import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treeinv.closure import is_locally_power, passes_local_check
from treeinv.errors import BadParams, HypothesisViolated, NotAnInversion
from treeinv.inversions import (
    address_of_label,
    check_thm3_hypotheses,
    decompose_components,
    good_inversion,
    label_of,
    prop1_surgery,
    thm3_components,
    thm3_surgery,
    truncated_good_inversion,
)
from treeinv.portrait import (
    FinitePortrait,
    compose,
    inverse,
    order_on_ball,
    power,
    random_portrait,
    restrict,
    sphere_cycle_type,
    sphere_orders,
)
from treeinv.tree import Address, edge_ball, sphere


def odometer_oracle(depth):
    """Good inversion built straight from the child-label rule, no bit tricks."""
    labels = {Address("L"): 0, Address("R"): 1}
    for n in range(1, depth + 1):
        for a in sphere(n - 1):
            c0, c1 = a.children()
            labels[c0] = labels[a]
            labels[c1] = labels[a] + 2 ** n
    by_label = {(a.level, lab): a for a, lab in labels.items()}
    mapping = {a: by_label[(a.level, (lab + 1) % 2 ** (a.level + 1))] for a, lab in labels.items()}
    return labels, mapping


# -- labelling


def test_labels_follow_child_rule():
    labels, _ = odometer_oracle(6)
    for a, lab in labels.items():
        assert label_of(a) == lab
        assert address_of_label(a.level, lab) == a
        if a.level:
            assert lab % 2 ** a.level == labels[a.parent()]


def test_level1_labels():
    assert [label_of(s) for s in ["L:0", "R:0", "L:1", "R:1"]] == [0, 1, 2, 3]


# -- good inversion


def test_good_inversion_matches_oracle():
    _, mapping = odometer_oracle(6)
    g = good_inversion(6)
    for a, b in mapping.items():
        assert g(a) == b


def test_good_inversion_examples():
    g0 = good_inversion(0)
    assert g0.edge_action == "swap" and str(g0("L:")) == "R:"
    g1 = good_inversion(1)
    walk = ["L:0"]
    for _ in range(4):
        walk.append(str(g1(walk[-1])))
    assert walk == ["L:0", "R:0", "L:1", "R:1", "L:0"]
    assert sphere_orders(good_inversion(6))[6] == 128


@pytest.mark.parametrize("D", range(9))
def test_good_inversion_single_cycles(D):
    g = good_inversion(D)
    for n in range(D + 1):
        assert sphere_cycle_type(g, n) == (2 ** (n + 1),)


def test_depth_coherent():
    assert good_inversion(7).truncate(4) == good_inversion(4)


@settings(max_examples=200)
@given(st.integers(0, 6), st.integers(-300, 300))
def test_odometer_fixing_law(n, q):
    g = good_inversion(6)
    fixes = power(g, q).is_identity(n) and all(
        power(g, q).level_perm(n)[i] == i for i in range(2 ** (n + 1))
    )
    assert fixes == (q % 2 ** (n + 1) == 0)


# -- truncated good inversion


def test_truncated_examples():
    assert truncated_good_inversion(1, 3).edge_action == "swap"
    assert sphere_orders(truncated_good_inversion(3, 5)) == [2, 4, 8, 8, 16, 32]
    assert sphere_cycle_type(truncated_good_inversion(3, 5), 2) == (8,)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_truncated_cycle_types(N):
    g = truncated_good_inversion(N, N + 3)
    for n in range(N):
        assert sphere_cycle_type(g, n) == (2 ** (n + 1),)
    for n in range(N, N + 4):
        assert sphere_cycle_type(g, n) == (2 ** n, 2 ** n)
    check_thm3_hypotheses(g, N)


def test_truncated_params():
    with pytest.raises(BadParams):
        truncated_good_inversion(0, 3)
    with pytest.raises(BadParams):
        truncated_good_inversion(4, 3)


def test_hypothesis_violation_reports_level():
    with pytest.raises(HypothesisViolated) as err:
        check_thm3_hypotheses(good_inversion(5), 3)
    assert (err.value.level, err.value.order, err.value.expected) == (3, 16, 8)
    with pytest.raises(HypothesisViolated) as err:
        thm3_surgery(truncated_good_inversion(2, 5), 3)
    assert err.value.level == 2


# -- half-tree surgery


def test_prop1_on_good_inversion():
    g = good_inversion(4)
    x = prop1_surgery(g)
    assert order_on_ball(x) == 2
    assert x.edge_action == "swap"
    for u in edge_ball(3):
        r = restrict(x, u, 1).assignment
        assert r in (restrict(g, u, 1).assignment, restrict(inverse(g), u, 1).assignment)


def test_prop1_fixes_involutions():
    # L:b <-> R:b is already an inverting involution
    g = FinitePortrait.from_levels([[1, 0], [2, 3, 0, 1], [4, 5, 6, 7, 0, 1, 2, 3]])
    assert prop1_surgery(g) == g


def test_prop1_needs_inversion():
    with pytest.raises(NotAnInversion):
        prop1_surgery(FinitePortrait.identity(3))


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_prop1_property(D, seed):
    g = random_portrait(D, np.random.default_rng(seed), edge="swap")
    x = prop1_surgery(g)
    assert compose(x, x).is_identity()
    assert x.edge_action == "swap"
    assert passes_local_check(x, g, 1)


# -- components and the order-2^N surgery


def test_components_example():
    comps = decompose_components(2, 3)
    assert comps.size == 4
    roots = [comps.members(j)[0] for j in range(4)]
    assert sorted(roots) == sphere(1)
    assert [label_of(r) for r in roots] == [0, 1, 2, 3]


def test_components_partition():
    comps = decompose_components(3, 6)
    members = [a for j in range(comps.size) for a in comps.members(j)]
    expected = [a for a in edge_ball(6) if a.level >= 2]
    assert sorted(members) == expected
    for j in range(comps.size):
        for a in comps.members(j):
            if a.level > 2:
                assert comps.component_of(a.parent()) == j
    with pytest.raises(BadParams):
        comps.component_of("L:")
    with pytest.raises(BadParams):
        decompose_components(1, 4)


def test_g3_shifts_components():
    g = truncated_good_inversion(3, 5)
    comps = decompose_components(3, 5)
    for a in edge_ball(5):
        if a.level >= 2:
            assert comps.component_of(g(a)) == (comps.component_of(a) + 1) % 8


@pytest.mark.parametrize("N", [2, 3, 4])
def test_thm3_components_agree_with_labels(N):
    g = truncated_good_inversion(N, N + 2)
    assert thm3_components(g, N) == decompose_components(N, N + 2)


def test_thm3_surgery_n1_delegates():
    g = truncated_good_inversion(1, 4)
    x = thm3_surgery(g, 1)
    assert x == prop1_surgery(g)
    assert order_on_ball(x) == 2


def test_thm3_surgery_n3_d8():
    x = thm3_surgery(truncated_good_inversion(3, 8), 3)
    assert order_on_ball(x, 8) == 8


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_thm3_surgery_order_and_agreement(N):
    g = truncated_good_inversion(N, N + 4)
    x = thm3_surgery(g, N)
    assert order_on_ball(x) == 2 ** N
    assert x.edge_action == "swap"
    assert np.array_equal(x.truncate(N).array, g.truncate(N).array)
    assert passes_local_check(x, g, 2)


def test_thm3_surgery_local_powers_n2():
    N, D = 2, 6
    g = truncated_good_inversion(N, D)
    x = thm3_surgery(g, N)
    for u in edge_ball(D - 2):
        r = restrict(x, u, 2).assignment
        assert r in (restrict(g, u, 2).assignment, restrict(power(g, 1 - 2 ** N), u, 2).assignment)


def test_thm3_witness_residues():
    N, D = 3, 6
    g = truncated_good_inversion(N, D)
    x = thm3_surgery(g, N)
    for u in edge_ball(D - 2):
        res = is_locally_power(x, g, u, 2)
        targets = {1 % res.modulus, (1 - 2 ** N) % res.modulus}
        assert targets & set(res.witnesses)
