"""Finite portraits: automorphisms of ``B(e, D)`` that stabilise ``e`` setwise.

A portrait stores its vertex map explicitly as one integer array over the
global indices of ``B(e, D)`` (level offsets from :mod:`treeinv.tree`).
Construction validates the three invariants, so every instance in circulation
is level-preserving, parent-compatible and bijective on each sphere.
"""
from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, DepthMismatch, InvalidPortrait, TruncationExceeded
from .tree import (
    Address,
    as_address,
    ball_of_vertex,
    ball_size,
    distance,
    edge_ball,
    level_offset,
    sphere_size,
)


def cycle_type(perm: Sequence[int]) -> tuple[int, ...]:
    """Cycle lengths of a permutation of ``range(len(perm))``, largest first."""
    seen = bytearray(len(perm))
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        n = 0
        x = start
        while not seen[x]:
            seen[x] = 1
            x = perm[x]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths, reverse=True))


def perm_order(perm: Sequence[int]) -> int:
    return math.lcm(*cycle_type(perm)) if len(perm) else 1


class FinitePortrait:
    """Level-preserving, parent-compatible bijection of ``B(e, depth)``."""

    __slots__ = ("depth", "_map")

    def __init__(self, depth: int, mapping: Sequence[int] | np.ndarray, *, check: bool = True):
        if depth < 0:
            raise BadParams(f"depth must be non-negative, got {depth}")
        arr = np.array(mapping, dtype=np.int64)
        if arr.shape != (ball_size(depth),):
            raise InvalidPortrait(
                f"map has {arr.size} entries, B(e,{depth}) has {ball_size(depth)}"
            )
        arr.flags.writeable = False
        self.depth = depth
        self._map = arr
        if check:
            self._validate()

    def _validate(self) -> None:
        prev = None
        for n in range(self.depth + 1):
            perm = self.level_perm(n)
            size = sphere_size(n)
            if perm.min() < 0 or perm.max() >= size:
                raise InvalidPortrait(f"map does not preserve sphere {n}")
            if np.unique(perm).size != size:
                raise InvalidPortrait(f"map is not injective on sphere {n}")
            if prev is not None and not np.array_equal(perm >> 1, prev[np.arange(size) >> 1]):
                raise InvalidPortrait(f"map is not parent-compatible at level {n}")
            prev = perm

    @classmethod
    def from_levels(cls, levels: Sequence[Sequence[int]], *, check: bool = True) -> FinitePortrait:
        """Build from per-sphere permutations of local indices."""
        depth = len(levels) - 1
        if depth < 0:
            raise BadParams("need at least one level")
        flat = np.concatenate(
            [np.asarray(p, dtype=np.int64) + level_offset(n) for n, p in enumerate(levels)]
        )
        return cls(depth, flat, check=check)

    @classmethod
    def identity(cls, depth: int) -> FinitePortrait:
        return cls(depth, np.arange(ball_size(depth)), check=False)

    @property
    def array(self) -> np.ndarray:
        return self._map

    def level_perm(self, n: int) -> np.ndarray:
        if not 0 <= n <= self.depth:
            raise TruncationExceeded(f"level {n} outside depth {self.depth}")
        off = level_offset(n)
        return self._map[off:off + sphere_size(n)] - off

    def levels(self) -> list[list[int]]:
        return [self.level_perm(n).tolist() for n in range(self.depth + 1)]

    @property
    def edge_action(self) -> str:
        return "swap" if self._map[0] == 1 else "fix"

    def __call__(self, a: Address | str) -> Address:
        a = as_address(a)
        if a.level > self.depth:
            raise TruncationExceeded(f"{a} lies below depth {self.depth}")
        return Address.from_index(a.level, int(self.level_perm(a.level)[a.index]))

    def truncate(self, depth: int) -> FinitePortrait:
        if depth > self.depth:
            raise TruncationExceeded(f"cannot extend depth {self.depth} to {depth}")
        return FinitePortrait(depth, self._map[:ball_size(depth)], check=False)

    def is_identity(self, depth: int | None = None) -> bool:
        size = ball_size(self.depth if depth is None else depth)
        return bool(np.array_equal(self._map[:size], np.arange(size)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinitePortrait):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self._map, other._map)

    def __hash__(self) -> int:
        return hash((self.depth, self._map.tobytes()))

    def __repr__(self) -> str:
        return f"FinitePortrait(depth={self.depth}, edge={self.edge_action})"

    def __reduce__(self):
        return (_rebuild, (self.depth, self._map.tobytes()))

    def to_json(self) -> dict:
        addrs = edge_ball(self.depth)
        flat = self._map.tolist()
        return {
            "depth": self.depth,
            "map": {str(a): str(addrs[j]) for a, j in zip(addrs, flat)},
        }

    @classmethod
    def from_json(cls, data: Mapping | str) -> FinitePortrait:
        if isinstance(data, str):
            data = json.loads(data)
        try:
            depth = int(data["depth"])
            raw = data["map"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPortrait(f"malformed portrait JSON: {exc}") from None
        if depth < 0:
            raise InvalidPortrait("negative depth")
        size = ball_size(depth)
        if len(raw) != size:
            raise InvalidPortrait(f"map has {len(raw)} entries, expected {size}")
        flat = np.full(size, -1, dtype=np.int64)
        for src, dst in raw.items():
            try:
                a, b = Address.parse(src), Address.parse(dst)
            except ValueError as exc:
                raise InvalidPortrait(str(exc)) from None
            if a.level > depth or b.level > depth:
                raise InvalidPortrait(f"address outside B(e,{depth}): {src} -> {dst}")
            flat[level_offset(a.level) + a.index] = level_offset(b.level) + b.index
        if (flat < 0).any():
            raise InvalidPortrait("map is not total on B(e,D)")
        return cls(depth, flat)


def _rebuild(depth: int, raw: bytes) -> FinitePortrait:
    return FinitePortrait(depth, np.frombuffer(raw, dtype=np.int64), check=False)


@dataclass(frozen=True)
class LocalMap:
    """Restriction of a portrait to a vertex ball ``B(center, radius)``."""

    center: Address
    radius: int
    assignment: Mapping[Address, Address]

    def is_distance_preserving(self) -> bool:
        items = list(self.assignment.items())
        if len({b for _, b in items}) != len(items):
            return False
        return all(
            distance(a1, a2) == distance(b1, b2)
            for i, (a1, b1) in enumerate(items)
            for a2, b2 in items[i + 1:]
        )


def _same_depth(f: FinitePortrait, g: FinitePortrait) -> None:
    if f.depth != g.depth:
        raise DepthMismatch(f"depths differ: {f.depth} vs {g.depth}")


def compose(f: FinitePortrait, g: FinitePortrait) -> FinitePortrait:
    """``f o g``: apply ``g`` first."""
    _same_depth(f, g)
    return FinitePortrait(f.depth, f.array[g.array], check=False)


def inverse(h: FinitePortrait) -> FinitePortrait:
    inv = np.empty_like(h.array)
    inv[h.array] = np.arange(h.array.size)
    return FinitePortrait(h.depth, inv, check=False)


def power(h: FinitePortrait, p: int) -> FinitePortrait:
    if p < 0:
        h, p = inverse(h), -p
    result = np.arange(h.array.size)
    base = h.array
    while p:
        if p & 1:
            result = base[result]
        base = base[base]
        p >>= 1
    return FinitePortrait(h.depth, result, check=False)


def restrict(h: FinitePortrait, u: Address | str, k: int) -> LocalMap:
    u = as_address(u)
    ball = ball_of_vertex(u, k, h.depth)
    return LocalMap(u, k, {a: h(a) for a in sorted(ball)})


def sphere_cycle_type(h: FinitePortrait, n: int) -> tuple[int, ...]:
    return cycle_type(h.level_perm(n).tolist())


def order_on_ball(h: FinitePortrait, n: int | None = None) -> int:
    """Order of the permutation ``h`` induces on ``B(e, n)`` (default: whole depth)."""
    n = h.depth if n is None else n
    lengths = [c for m in range(n + 1) for c in sphere_cycle_type(h, m)]
    return math.lcm(*lengths)


def sphere_orders(h: FinitePortrait) -> list[int]:
    return [math.lcm(*sphere_cycle_type(h, n)) for n in range(h.depth + 1)]


def random_portrait(depth: int, rng: np.random.Generator, *, edge: str | None = None) -> FinitePortrait:
    """Uniform random portrait; ``edge`` forces the action on ``{L:, R:}``."""
    if edge is None:
        swap = int(rng.integers(2))
    else:
        swap = 1 if edge == "swap" else 0
    levels = [[swap, 1 - swap]]
    for n in range(1, depth + 1):
        prev = levels[-1]
        bits = rng.integers(0, 2, size=len(prev))
        cur = [0] * (2 * len(prev))
        for x, y in enumerate(prev):
            s = int(bits[x])
            cur[2 * x] = 2 * y + s
            cur[2 * x + 1] = 2 * y + 1 - s
        levels.append(cur)
    return FinitePortrait.from_levels(levels)
