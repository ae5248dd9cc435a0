"""Local compatibility with a cyclic group and searches over its finite shadow.

``h`` is compatible with ``<g>`` at radius ``k`` when, on every vertex ball
``B(u, k)`` inside the truncation, ``h`` agrees with some power of ``g``.  The
searches here enumerate every portrait of ``B(e, D)`` with that property,
which is a superset of the depth-``D`` restrictions of the ``(P_k)``-closure;
an empty result or a lower bound on it therefore carries over to the closure.

Portraits are built sphere by sphere.  Sphere ``n`` is fixed by one swap bit
per vertex of sphere ``n - 1`` (do its children keep or exchange their
positions under the parent's image), decided in canonical order.  Once the
last bit below ``u`` is set, ``B(u, k)`` is fully determined and tested.
"""
from __future__ import annotations

import itertools
import json
import math
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadParams, DepthMismatch, TruncationExceeded
from .portrait import FinitePortrait, order_on_ball, power, sphere_cycle_type
from .tree import Address, as_address, ball_indices, level_offset, sphere_size

DEFAULT_BUDGET = 10 ** 8
SPLIT_LEVEL = 2


@dataclass(frozen=True)
class LocalTestResult:
    center: Address
    radius: int
    witnesses: tuple[int, ...]
    modulus: int

    @property
    def passed(self) -> bool:
        return bool(self.witnesses)

    def to_json(self) -> dict:
        return {
            "center": str(self.center),
            "k": self.radius,
            "modulus": self.modulus,
            "witnesses": list(self.witnesses),
            "passed": self.passed,
        }


def _check_pair(h: FinitePortrait, g: FinitePortrait) -> None:
    if h.depth != g.depth:
        raise DepthMismatch(f"depths differ: {h.depth} vs {g.depth}")


def ball_period(g: FinitePortrait, u: Address | str, k: int) -> int:
    """Order of ``g`` on the smallest edge ball containing ``B(u, k)``."""
    u = as_address(u)
    return order_on_ball(g, u.level + k)


def is_locally_power(h: FinitePortrait, g: FinitePortrait, u: Address | str, k: int) -> LocalTestResult:
    """All residues ``p`` with ``h = g**p`` on ``B(u, k)``."""
    _check_pair(h, g)
    u = as_address(u)
    if u.level + k > h.depth:
        raise TruncationExceeded(f"B({u}, {k}) leaves B(e,{h.depth})")
    ball = [level_offset(n) + i for n, i in ball_indices(u.level, u.index, k)]
    period = ball_period(g, u, k)
    target = h.array[ball]
    gmap = g.array
    cur = np.array(ball)
    witnesses = []
    for p in range(period):
        if (cur == target).all():
            witnesses.append(p)
        cur = gmap[cur]
    return LocalTestResult(u, k, tuple(witnesses), period)


def interior_vertices(depth: int, k: int) -> list[Address]:
    """Vertices whose ``k``-ball lies inside ``B(e, depth)``."""
    return [Address.from_index(n, i) for n in range(depth - k + 1) for i in range(sphere_size(n))]


def pk_local_check(h: FinitePortrait, g: FinitePortrait, k: int) -> list[LocalTestResult]:
    _check_pair(h, g)
    return [is_locally_power(h, g, u, k) for u in interior_vertices(h.depth, k)]


def passes_local_check(h: FinitePortrait, g: FinitePortrait, k: int) -> bool:
    return all(r.passed for r in pk_local_check(h, g, k))


# -- predicates -------------------------------------------------------------
#
# ``prune(n, levels)`` sees the complete spheres 0..n of a partial portrait;
# ``prune_vertex(n, x, levels)`` runs right after the children of vertex ``x``
# on sphere ``n - 1`` were placed, when sphere ``n`` is known at indices below
# ``2x + 2``.  Both may only return True when no completion can be accepted.


class Predicate:
    name = "any"

    def prune(self, n: int, levels: Sequence[Sequence[int]]) -> bool:
        return False

    def prune_vertex(self, n: int, x: int, levels: Sequence[Sequence[int]]) -> bool:
        return False

    def lookahead(self, n: int, levels: Sequence[Sequence[int]], domains) -> bool:
        """Called when sphere ``n`` is complete and ``n < D``.

        ``domains`` lists ``(x0, patterns)``: the swap bits of vertices
        ``x0, x0 + 1, ...`` of sphere ``n`` must form one of ``patterns`` for
        the ball test above them to pass.
        """
        return False

    def accept(self, h: FinitePortrait) -> bool:
        return True


class _Callable(Predicate):
    def __init__(self, fn: Callable[[FinitePortrait], bool]):
        self.fn = fn
        self.name = getattr(fn, "__name__", "callable")

    def accept(self, h):
        return bool(self.fn(h))


class InvertsEdge(Predicate):
    name = "inverts-e"

    def prune(self, n, levels):
        return n == 0 and levels[0][0] == 0

    def accept(self, h):
        return h.edge_action == "swap"


class FixesEdge(Predicate):
    """Identity on ``S(e, 0)``."""

    name = "fixes-e"

    def prune(self, n, levels):
        return n == 0 and levels[0][0] == 1

    def accept(self, h):
        return h.edge_action == "fix"


class Involution(Predicate):
    """``h**2`` trivial on ``B(e, D)`` while ``h`` moves something in ``B(e, D-1)``.

    Swaps confined to the last sphere are excluded: no ``k``-ball inside the
    truncation sees the level below them, so they cannot be certified.
    """

    name = "involution"

    def prune(self, n, levels):
        perm = levels[n]
        return any(perm[perm[x]] != x for x in range(len(perm)))

    def prune_vertex(self, n, x, levels):
        if n == 0:
            return False
        perm = levels[n]
        for c in (2 * x, 2 * x + 1):
            d = perm[c]
            if d >> 1 <= x and perm[d] != c:
                return True
        return False

    def accept(self, h):
        return h.depth >= 1 and not h.is_identity(h.depth - 1) and power(h, 2).is_identity()


class OrderDivides(Predicate):
    """``h**order`` trivial on ``B(e, D)``; optionally ``h`` must invert ``e``."""

    def __init__(self, order: int, inverting: bool = True):
        self.order = order
        self.inverting = inverting
        self.name = f"order-divides-{order}" + ("-inverting" if inverting else "")

    def prune(self, n, levels):
        if self.inverting and n == 0 and levels[0][0] == 0:
            return True
        return any(self.order % c for c in sphere_cycle_type_list(levels[n]))

    def prune_vertex(self, n, x, levels):
        if n == 0:
            return False
        perm = levels[n]
        for c in (2 * x, 2 * x + 1):
            # follow the orbit of c through the placed part of the sphere
            length, d = 1, perm[c]
            while d != c and d >> 1 <= x:
                length += 1
                if length > self.order:
                    return True
                d = perm[d]
            if d == c and self.order % length:
                return True
        return False

    def lookahead(self, n, levels, domains):
        # a cycle of length `order` on sphere n lifts to cycles of length `order`
        # iff the swap bits along it have even parity
        if not domains:
            return False
        perm = levels[n]
        cycle_of = [-1] * len(perm)
        full = []
        for s in range(len(perm)):
            if cycle_of[s] >= 0:
                continue
            members, x = [], s
            while cycle_of[x] < 0:
                cycle_of[x] = s
                members.append(x)
                x = perm[x]
            if len(members) == self.order:
                full.append(s)
        if not full:
            return False
        parity = {c: 0 for c in full}
        free = set()
        for x0, patterns in domains:
            width = len(patterns[0])
            for c in {cycle_of[x0 + i] for i in range(width)} & parity.keys():
                pos = [i for i in range(width) if cycle_of[x0 + i] == c]
                contrib = {sum(p[i] for i in pos) & 1 for p in patterns}
                if len(contrib) > 1:
                    free.add(c)
                else:
                    parity[c] ^= contrib.pop()
        return any(parity[c] for c in full if c not in free)

    def accept(self, h):
        if self.inverting and h.edge_action != "swap":
            return False
        return self.order % order_on_ball(h) == 0


class InvertsNotGood(Predicate):
    """Inversions that fail the single-cycle pattern on some sphere ``n <= upto``."""

    def __init__(self, upto: int):
        self.upto = upto
        self.name = f"inverts-not-single-cycle-upto-{upto}"

    def prune(self, n, levels):
        return n == 0 and levels[0][0] == 0

    def accept(self, h):
        if h.edge_action != "swap":
            return False
        return any(
            sphere_cycle_type(h, n) != (2 ** (n + 1),)
            for n in range(min(self.upto, h.depth) + 1)
        )


def sphere_cycle_type_list(perm: Sequence[int]) -> list[int]:
    seen = [False] * len(perm)
    out = []
    for s in range(len(perm)):
        if not seen[s]:
            c, x = 0, s
            while not seen[x]:
                seen[x] = True
                x = perm[x]
                c += 1
            out.append(c)
    return out


def as_predicate(pred) -> Predicate:
    if pred is None:
        return Predicate()
    if isinstance(pred, Predicate):
        return pred
    if callable(pred):
        return _Callable(pred)
    raise BadParams(f"not a predicate: {pred!r}")


# -- search ------------------------------------------------------------------


@dataclass
class SearchReport:
    depth: int
    k: int
    expanded: int
    exhaustive: bool
    found: list[FinitePortrait] = field(default_factory=list)
    completed: int = 0
    predicate: str = "any"

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "k": self.k,
            "predicate": self.predicate,
            "expanded": self.expanded,
            "exhaustive": self.exhaustive,
            "completed": self.completed,
            "found": [h.to_json() for h in self.found],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


class _Stop(Exception):
    pass


class _BudgetHit(Exception):
    pass


@dataclass
class _TaskResult:
    expanded: int
    complete: bool
    found: list
    completed: int


class _Searcher:
    """Depth-first extension of partial portraits, one swap bit at a time."""

    def __init__(self, g_levels, k, depth, predicate, budget, first_only):
        self.k = k
        self.depth = depth
        self.predicate = predicate
        self.budget = budget
        self.first_only = first_only
        self.expanded = 0
        self.completed = 0
        self.found: list[list[list[int]]] = []
        self.levels = [[0] * sphere_size(n) for n in range(depth + 1)]
        self._prepare_balls(g_levels)

    def _prepare_balls(self, g_levels) -> None:
        # allowed[n][u]: image tuples of B(u, k) under the powers of g, for u on level n
        k, depth = self.k, self.depth
        gperm = [list(p) for p in g_levels[: depth + 1]]
        orders = [math.lcm(*sphere_cycle_type_list(p)) for p in gperm]
        self.balls = []
        self.allowed = []
        for n in range(depth - k + 1):
            period = math.lcm(*orders[: n + k + 1])
            row_balls, row_allowed = [], []
            for u in range(sphere_size(n)):
                ball = ball_indices(n, u, k)
                cur = [i for _, i in ball]
                seen = set()
                for _ in range(period):
                    seen.add(tuple(cur))
                    cur = [gperm[m][c] for (m, _), c in zip(ball, cur)]
                row_balls.append(ball)
                row_allowed.append(seen)
            self.balls.append(row_balls)
            self.allowed.append(row_allowed)

    # positions: (n, x) sets the swap bit of vertex x on level n-1 (n = 0: the edge)
    def _next(self, n: int, x: int) -> tuple[int, int]:
        width = 1 if n == 0 else sphere_size(n - 1)
        return (n, x + 1) if x + 1 < width else (n + 1, 0)

    def _assign(self, n: int, x: int, s: int) -> None:
        if n == 0:
            self.levels[0][0], self.levels[0][1] = s, 1 - s
        else:
            y = self.levels[n - 1][x]
            cur = self.levels[n]
            cur[2 * x] = 2 * y + s
            cur[2 * x + 1] = 2 * y + 1 - s

    def _ok(self, n: int, x: int) -> bool:
        k = self.k
        if n >= k and n >= 1:
            block = 1 << (k - 1)
            if (x + 1) % block == 0:
                u = x >> (k - 1)
                lv = self.levels
                sig = tuple(lv[m][i] for m, i in self.balls[n - k][u])
                if sig not in self.allowed[n - k][u]:
                    return False
        if self.predicate.prune_vertex(n, x, self.levels):
            return False
        width = 1 if n == 0 else sphere_size(n - 1)
        if x + 1 == width:
            if self.predicate.prune(n, self.levels):
                return False
            if n < self.depth:
                domains = self._domains(n + 1)
                if any(not pats for _, pats in domains):
                    return False
                if self.predicate.lookahead(n, self.levels, domains):
                    return False
        return True

    def _domains(self, n: int) -> list[tuple[int, list[tuple[int, ...]]]]:
        """Swap-bit patterns on sphere ``n - 1`` that pass the balls closing at ``n``."""
        k = self.k
        if n < k:
            return []
        block = 1 << (k - 1)
        out = []
        patterns = list(itertools.product((0, 1), repeat=block))
        for u in range(sphere_size(n - k)):
            x0 = u * block
            ok = []
            for pat in patterns:
                for i, s in enumerate(pat):
                    self._assign(n, x0 + i, s)
                sig = tuple(self.levels[m][i] for m, i in self.balls[n - k][u])
                if sig in self.allowed[n - k][u]:
                    ok.append(pat)
            out.append((x0, ok))
        return out

    def _leaf(self) -> None:
        self.completed += 1
        h = FinitePortrait.from_levels(self.levels, check=False)
        if self.predicate.accept(h):
            self.found.append([list(p) for p in self.levels])
            if self.first_only:
                raise _Stop

    def _extend(self, n: int, x: int, split: int | None, prefix: list[int], tasks: list) -> None:
        if n > self.depth:
            self._leaf()
            return
        if split is not None and len(prefix) == split:
            tasks.append(list(prefix))
            return
        nxt = self._next(n, x)
        for s in (0, 1):
            self.expanded += 1
            if self.expanded > self.budget:
                raise _BudgetHit
            self._assign(n, x, s)
            if not self._ok(n, x):
                continue
            prefix.append(s)
            self._extend(*nxt, split, prefix, tasks)
            prefix.pop()

    def _position_after(self, count: int) -> tuple[int, int]:
        pos = (0, 0)
        for _ in range(count):
            pos = self._next(*pos)
        return pos

    def run_prefix(self, prefix: list[int]) -> _TaskResult:
        pos = (0, 0)
        for s in prefix:
            self._assign(*pos, s)
            pos = self._next(*pos)
        try:
            self._extend(*pos, None, list(prefix), [])
        except _BudgetHit:
            return _TaskResult(self.expanded, False, self.found, self.completed)
        except _Stop:
            pass
        return _TaskResult(self.expanded, True, self.found, self.completed)


def _split_bits(depth: int) -> int:
    top = min(SPLIT_LEVEL, depth)
    return 1 + sum(sphere_size(n - 1) for n in range(1, top + 1))


def _run_task(args) -> _TaskResult:
    g_levels, k, depth, predicate, budget, first_only, prefix = args
    s = _Searcher(g_levels, k, depth, predicate, budget, first_only)
    return s.run_prefix(prefix)


def _picklable(obj) -> bool:
    try:
        pickle.dumps(obj)
    except Exception:
        return False
    return True


def _search(g: FinitePortrait, k: int, depth: int, predicate: Predicate, budget: int,
            first_only: bool, threads: int) -> SearchReport:
    if k < 1:
        raise BadParams(f"radius k must be at least 1, got {k}")
    if depth < k + 1:
        raise BadParams(f"depth {depth} must be at least k + 1 = {k + 1}")
    if g.depth < depth:
        raise TruncationExceeded(f"g is only known to depth {g.depth}")
    g_levels = g.truncate(depth).levels()
    report = SearchReport(depth, k, 0, False, predicate=predicate.name)

    # enumerate surviving prefixes up to the split point, then the subtrees below
    driver = _Searcher(g_levels, k, depth, predicate, budget, first_only)
    tasks: list[list[int]] = []
    try:
        driver._extend(0, 0, _split_bits(depth), [], tasks)
    except _BudgetHit:
        report.expanded = budget
        return report
    except _Stop:
        pass
    total = driver.expanded
    found = list(driver.found)
    completed = driver.completed
    if first_only and found:
        tasks = []
    cap = budget - total
    jobs = [(g_levels, k, depth, predicate, cap, first_only, t) for t in tasks]

    if threads > 1 and len(jobs) > 1 and _picklable(predicate):
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = pool.map(_run_task, jobs)
            results = list(results)
    else:
        results = _lazy(jobs, first_only)

    exhaustive = True
    for res in results:
        if not res.complete or total + res.expanded > budget:
            exhaustive = False
            total = budget
            break
        total += res.expanded
        completed += res.completed
        found.extend(res.found)
        if first_only and res.found:
            break
    report.expanded = total
    report.exhaustive = exhaustive
    report.completed = completed
    report.found = [FinitePortrait.from_levels(lv, check=False) for lv in found]
    return report


def _lazy(jobs, first_only):
    for job in jobs:
        res = _run_task(job)
        yield res
        if not res.complete or (first_only and res.found):
            return


def enumerate_compatible(g: FinitePortrait, k: int, depth: int, predicate=None, *,
                         budget: int = DEFAULT_BUDGET, threads: int = 1) -> SearchReport:
    """Every portrait of ``B(e, depth)`` locally a power of ``g`` that satisfies ``predicate``.

    ``predicate`` is a :class:`Predicate` or a plain callable on portraits.
    The report is identical for every ``threads`` value.
    """
    pred = as_predicate(predicate)
    return _search(g, k, depth, pred, budget, first_only=False, threads=threads)


def search_involutions(g: FinitePortrait, k: int, depth: int, *, budget: int = DEFAULT_BUDGET,
                       threads: int = 1) -> SearchReport:
    return enumerate_compatible(g, k, depth, Involution(), budget=budget, threads=threads)


@dataclass
class MinOrderResult:
    depth: int
    k: int
    order: int | None
    witness: FinitePortrait | None
    exhaustive: bool
    expanded: int
    excluded: list[int]

    @property
    def saturated(self) -> bool:
        """Every compatible inversion is a full cycle on the deepest sphere.

        Then the truncation cannot exhibit a finite-order inversion: its order
        grows with the depth.
        """
        return self.order == 2 ** (self.depth + 1)

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "k": self.k,
            "expanded": self.expanded,
            "exhaustive": self.exhaustive,
            "min_order": self.order,
            "excluded_orders": self.excluded,
            "saturated": self.saturated,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def min_inversion_order(g: FinitePortrait, k: int, depth: int, *, budget: int = DEFAULT_BUDGET,
                        threads: int = 1) -> MinOrderResult:
    """Smallest order on ``B(e, depth)`` of a compatible inversion.

    Orders of level-preserving maps of the binary tree are powers of 2, so the
    search asks, for ``2**0, 2**1, ...`` in turn, whether some compatible
    inversion has ``h**(2**j)`` trivial; the first yes is the minimum and
    every smaller power was ruled out exhaustively.
    """
    if g.edge_action != "swap":
        raise BadParams("min_inversion_order expects g to invert e")
    spent = 0
    excluded = []
    for j in range(depth + 2):
        target = 2 ** j
        rep = _search(g, k, depth, OrderDivides(target), budget - spent, first_only=True,
                      threads=threads)
        spent += rep.expanded
        if rep.found:
            return MinOrderResult(depth, k, target, rep.found[0], True, spent, excluded)
        if not rep.exhaustive:
            return MinOrderResult(depth, k, None, None, False, spent, excluded)
        excluded.append(target)
    # no compatible inversion at all
    return MinOrderResult(depth, k, None, None, True, spent, excluded)
