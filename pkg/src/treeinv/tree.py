"""Addresses, spheres and balls in the 3-regular tree around a root edge.

A vertex is named by the endpoint of the root edge ``e`` whose half-tree
contains it (``L`` for ``v``, ``R`` for ``w``) together with the binary path
from that endpoint.  Inside a sphere ``S(e, n)`` vertices are numbered
``0 .. 2**(n+1) - 1`` with the side as the top bit followed by the path bits,
so the parent of index ``i`` is ``i >> 1`` and its children are ``2i`` and
``2i + 1``.  Every other module works on these integer indices; the
:class:`Address` type is the public, printable form.
"""
from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .errors import BadParams, TruncationExceeded

SIDES = ("L", "R")


def sphere_size(n: int) -> int:
    return 2 ** (n + 1)


def ball_size(depth: int) -> int:
    """Number of vertices of ``B(e, depth)``."""
    return 2 ** (depth + 2) - 2


def level_offset(n: int) -> int:
    """Global index of the first vertex of ``S(e, n)`` in ``B(e, D)``."""
    return 2 ** (n + 1) - 2


@functools.total_ordering
@dataclass(frozen=True)
class Address:
    side: str
    bits: str = ""

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be 'L' or 'R', got {self.side!r}")
        if self.bits.strip("01"):
            raise ValueError(f"bits must be a 0/1 string, got {self.bits!r}")

    @classmethod
    def parse(cls, text: str) -> Address:
        side, sep, bits = text.partition(":")
        if not sep:
            raise ValueError(f"malformed address {text!r}")
        return cls(side, bits)

    @classmethod
    def from_index(cls, level: int, index: int) -> Address:
        if not 0 <= index < sphere_size(level):
            raise ValueError(f"index {index} out of range for level {level}")
        side = SIDES[index >> level]
        bits = format(index & ((1 << level) - 1), f"0{level}b") if level else ""
        return cls(side, bits)

    @property
    def level(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        value = 1 if self.side == "R" else 0
        for b in self.bits:
            value = 2 * value + (b == "1")
        return value

    @property
    def key(self) -> tuple[int, int]:
        """Canonical sort key: level, then side, then path."""
        return (self.level, self.index)

    def __lt__(self, other: Address) -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return f"{self.side}:{self.bits}"

    def parent(self) -> Address:
        if not self.bits:
            raise ValueError(f"{self} is an endpoint of e and has no parent")
        return Address(self.side, self.bits[:-1])

    def children(self) -> tuple[Address, Address]:
        return Address(self.side, self.bits + "0"), Address(self.side, self.bits + "1")

    def neighbors(self) -> list[Address]:
        """All three neighbours; for an endpoint the first is the other endpoint."""
        if self.bits:
            up = self.parent()
        else:
            up = Address("R" if self.side == "L" else "L")
        return [up, *self.children()]


def as_address(a: Address | str) -> Address:
    return a if isinstance(a, Address) else Address.parse(a)


def sphere(n: int) -> list[Address]:
    if n < 0:
        raise BadParams(f"sphere level must be non-negative, got {n}")
    return [Address.from_index(n, i) for i in range(sphere_size(n))]


def edge_ball(depth: int) -> list[Address]:
    """``B(e, depth)`` in canonical order."""
    return [a for n in range(depth + 1) for a in sphere(n)]


def iter_global(depth: int) -> Iterator[tuple[int, int]]:
    for n in range(depth + 1):
        for i in range(sphere_size(n)):
            yield n, i


def distance(a: Address | str, b: Address | str) -> int:
    a, b = as_address(a), as_address(b)
    if a.side != b.side:
        return a.level + b.level + 1
    common = 0
    for x, y in zip(a.bits, b.bits):
        if x != y:
            break
        common += 1
    return a.level + b.level - 2 * common


def ball_of_vertex(u: Address | str, k: int, depth: int) -> frozenset[Address]:
    """Metric ball ``B(u, k)``; raises if it reaches below level ``depth``."""
    u = as_address(u)
    if k < 0:
        raise BadParams(f"radius must be non-negative, got {k}")
    if u.level + k > depth:
        raise TruncationExceeded(
            f"B({u}, {k}) reaches level {u.level + k} > depth {depth}"
        )
    seen = {u: 0}
    queue = deque([u])
    while queue:
        a = queue.popleft()
        d = seen[a]
        if d == k:
            continue
        for b in a.neighbors():
            if b not in seen:
                seen[b] = d + 1
                queue.append(b)
    return frozenset(seen)


def ball_indices(level: int, index: int, k: int) -> list[tuple[int, int]]:
    """``B(u, k)`` as canonical ``(level, index)`` pairs, no truncation check."""
    out: list[tuple[int, int]] = []
    # walk up: j steps above u, then down at most k - j steps avoiding u's branch
    for j in range(min(k, level) + 1):
        n, i = level - j, index >> j
        out.append((n, i))
        if j:
            # the sibling subtree of the previous vertex on the path
            child = index >> (j - 1)
            sib = child ^ 1
            _descend(out, n + 1, sib, k - j - 1)
    if k > level:
        # cross the root edge into the other half-tree
        other = (index >> level) ^ 1
        _descend(out, 0, other, k - level - 1)
    _descend(out, level + 1, 2 * index, k - 1)
    _descend(out, level + 1, 2 * index + 1, k - 1)
    out.sort()
    return out


def _descend(out: list[tuple[int, int]], n: int, i: int, budget: int) -> None:
    if budget < 0:
        return
    for d in range(budget + 1):
        base = i << d
        out.extend((n + d, base + t) for t in range(1 << d))


def max_level(level: int, k: int) -> int:
    """Deepest sphere touched by ``B(u, k)`` for ``u`` on ``S(e, level)``."""
    return level + k


@dataclass(frozen=True)
class BallSpec:
    """Either the edge ball ``B(e, depth)`` or a vertex ball ``B(center, radius)``."""

    depth: int
    center: Address | None = None
    radius: int = 0

    @classmethod
    def edge(cls, depth: int) -> BallSpec:
        return cls(depth)

    @classmethod
    def vertex(cls, center: Address | str, radius: int, depth: int) -> BallSpec:
        return cls(depth, as_address(center), radius)

    @property
    def kind(self) -> str:
        return "edge" if self.center is None else "vertex"

    def vertices(self) -> list[Address]:
        if self.center is None:
            return edge_ball(self.depth)
        return sorted(ball_of_vertex(self.center, self.radius, self.depth))

    def __len__(self) -> int:
        if self.center is None:
            return ball_size(self.depth)
        return len(self.vertices())
