"""Explicit edge inversions and the two surgery constructions.

The odometer labelling numbers ``S(e, n)`` by ``Z / 2**(n+1)``: the endpoints
get 0 (``L:``) and 1 (``R:``) and the children of a level-``n-1`` vertex with
label ``j`` get ``j`` (bit 0) and ``j + 2**n`` (bit 1).  In index terms the
label is the bit reversal of the ``n + 1`` bit sphere index.  The good
inversion adds 1 to every label, which makes it a single cycle on each sphere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParams, HypothesisViolated, NotAnInversion
from .portrait import FinitePortrait, inverse, power, sphere_orders
from .tree import Address, as_address, level_offset, sphere_size


def _reverse_bits(x: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def label_of(a: Address | str) -> int:
    """Odometer label of an address within its sphere."""
    a = as_address(a)
    return _reverse_bits(a.index, a.level + 1)


def address_of_label(level: int, label: int) -> Address:
    if not 0 <= label < sphere_size(level):
        raise BadParams(f"label {label} out of range on level {level}")
    return Address.from_index(level, _reverse_bits(label, level + 1))


def sphere_labels(level: int) -> np.ndarray:
    """``labels[i]`` is the odometer label of sphere index ``i``."""
    return np.array([_reverse_bits(i, level + 1) for i in range(sphere_size(level))])


def _from_label_maps(depth: int, step) -> FinitePortrait:
    levels = []
    for n in range(depth + 1):
        labels = sphere_labels(n)
        # bit reversal is an involution, so labels doubles as label -> index
        levels.append([int(labels[step(n, int(labels[i]))]) for i in range(sphere_size(n))])
    return FinitePortrait.from_levels(levels)


def good_inversion(depth: int) -> FinitePortrait:
    if depth < 0:
        raise BadParams(f"depth must be non-negative, got {depth}")
    return _from_label_maps(depth, lambda n, lab: (lab + 1) % sphere_size(n))


def truncated_good_inversion(N: int, depth: int) -> FinitePortrait:
    """Inversion that is a full cycle below level ``N`` and has order ``2**N`` there.

    From level ``N`` on, label bit ``N`` splits each sphere into two classes and
    the remaining ``n`` bits run an odometer inside each class, so sphere ``n``
    carries two cycles of length ``2**n``.
    """
    if N < 1:
        raise BadParams(f"N must be at least 1, got {N}")
    if depth < N:
        raise BadParams(f"depth {depth} must be at least N={N}")
    low = (1 << N) - 1

    def step(n: int, lab: int) -> int:
        if n < N:
            return (lab + 1) % sphere_size(n)
        cls = (lab >> N) & 1
        rest = (lab & low) | ((lab >> (N + 1)) << N)
        rest = (rest + 1) % (1 << n)
        return (rest & low) | (cls << N) | ((rest >> N) << (N + 1))

    return _from_label_maps(depth, step)


def _half_tree_mask(depth: int) -> np.ndarray:
    """True on global indices of the ``R`` half-tree."""
    mask = np.zeros(2 ** (depth + 2) - 2, dtype=bool)
    for n in range(depth + 1):
        off = level_offset(n)
        half = sphere_size(n) // 2
        mask[off + half: off + 2 * half] = True
    return mask


def prop1_surgery(g: FinitePortrait) -> FinitePortrait:
    """Glue ``g`` on the ``L`` half-tree to ``g**-1`` on the ``R`` half-tree.

    For any inversion ``g`` the result is an inversion of order 2.
    """
    if g.edge_action != "swap":
        raise NotAnInversion("prop1_surgery needs an automorphism swapping L: and R:")
    mask = _half_tree_mask(g.depth)
    flat = np.where(mask, inverse(g).array, g.array)
    return FinitePortrait(g.depth, flat)


@dataclass(frozen=True)
class ComponentDecomposition:
    """Components ``T_0 .. T_{2**N - 1}`` of ``B(e, depth)`` minus ``B(e, N-2)``.

    ``component[n][i]`` is the component index of sphere index ``i`` on level
    ``n`` (``-1`` below level ``N - 1``).  A vertex belongs to ``T_j`` when its
    level ``N - 1`` ancestor is the ``j``-th vertex of the chosen enumeration.
    """

    N: int
    depth: int
    component: tuple[tuple[int, ...], ...]

    def component_of(self, a: Address | str) -> int:
        a = as_address(a)
        if a.level < self.N - 1:
            raise BadParams(f"{a} lies inside B(e,{self.N - 2})")
        return self.component[a.level][a.index]

    def members(self, j: int) -> list[Address]:
        return [
            Address.from_index(n, i)
            for n in range(self.N - 1, self.depth + 1)
            for i, c in enumerate(self.component[n])
            if c == j
        ]

    @property
    def size(self) -> int:
        return 2 ** self.N


def _components(N: int, depth: int, root_order: list[int]) -> ComponentDecomposition:
    """``root_order[j]`` is the sphere index of ``v_j`` on level ``N - 1``."""
    which = {idx: j for j, idx in enumerate(root_order)}
    comp = []
    for n in range(depth + 1):
        if n < N - 1:
            comp.append(tuple([-1] * sphere_size(n)))
        else:
            shift = n - (N - 1)
            comp.append(tuple(which[i >> shift] for i in range(sphere_size(n))))
    return ComponentDecomposition(N, depth, tuple(comp))


def decompose_components(N: int, depth: int) -> ComponentDecomposition:
    """Components indexed by the odometer label of their level ``N - 1`` root."""
    if N < 2:
        raise BadParams(f"component decomposition needs N >= 2, got {N}")
    if depth < N:
        raise BadParams(f"depth {depth} must be at least N={N}")
    labels = sphere_labels(N - 1)
    order = [int(labels[j]) for j in range(sphere_size(N - 1))]
    return _components(N, depth, order)


def check_thm3_hypotheses(g: FinitePortrait, N: int) -> None:
    """Full cycles below level ``N`` and order ``2**N`` on ``S(e, N)``."""
    if g.depth < N:
        raise BadParams(f"depth {g.depth} must be at least N={N}")
    orders = sphere_orders(g)
    for n in range(N):
        if orders[n] != 2 ** (n + 1):
            raise HypothesisViolated(n, orders[n], 2 ** (n + 1))
    if orders[N] != 2 ** N:
        raise HypothesisViolated(N, orders[N], 2 ** N)


def thm3_surgery(g: FinitePortrait, N: int) -> FinitePortrait:
    """Inversion of order exactly ``2**N`` that is locally a power of ``g``.

    ``g**(1 - 2**N)`` is used on the component ``T_0`` containing ``L:0...0``
    and ``g`` everywhere else.  ``N == 1`` has no inner ball to remove and is
    handled by the half-tree surgery instead.
    """
    if N < 1:
        raise BadParams(f"N must be at least 1, got {N}")
    check_thm3_hypotheses(g, N)
    if N == 1:
        return prop1_surgery(g)
    comps = thm3_components(g, N)
    in_t0 = np.concatenate([np.array(c) == 0 for c in comps.component])
    patch = power(g, 1 - 2 ** N)
    return FinitePortrait(g.depth, np.where(in_t0, patch.array, g.array))


def thm3_components(g: FinitePortrait, N: int) -> ComponentDecomposition:
    """The decomposition :func:`thm3_surgery` uses, enumerated along ``g``'s cycle."""
    # v_j = g^j(v_0) with v_0 the first vertex of S(e, N-1)
    perm = g.level_perm(N - 1)
    order = [0]
    for _ in range(sphere_size(N - 1) - 1):
        order.append(int(perm[order[-1]]))
    return _components(N, g.depth, order)
