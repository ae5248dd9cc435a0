"""``treeinv`` command line.

Exit codes: 0 verified, 1 counterexample found, 2 budget exceeded, 3 bad usage.
Reports are JSON; ``TREEINV_BUDGET`` and ``TREEINV_OUTDIR`` override the
default budget and the directory reports are written to.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import closure, gadget, inversions
from .errors import BudgetExceeded, TreeInvError
from .portrait import order_on_ball, random_portrait, sphere_cycle_type

EXIT_OK, EXIT_COUNTER, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3
MAX_DEPTH = 14
MAX_RADIUS = gadget.MAX_RADIUS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    depth: int | None = None
    k: int | None = None
    N: int | None = None
    radius: int | None = None
    budget: int = closure.DEFAULT_BUDGET
    out: Path | None = None
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.depth is not None and not 0 <= self.depth <= MAX_DEPTH:
            raise UsageError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if self.radius is not None and not 0 <= self.radius <= MAX_RADIUS:
            raise UsageError(f"radius must be in [0, {MAX_RADIUS}], got {self.radius}")
        if self.k is not None and self.k < 1:
            raise UsageError(f"k must be at least 1, got {self.k}")
        if self.N is not None and self.N < 1:
            raise UsageError(f"N must be at least 1, got {self.N}")
        if self.budget < 1:
            raise UsageError("budget must be positive")
        if self.threads < 1:
            raise UsageError("threads must be positive")


def _default_budget() -> int:
    raw = os.environ.get("TREEINV_BUDGET")
    if raw is None:
        return closure.DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"TREEINV_BUDGET is not an integer: {raw!r}") from None


def _out_path(cfg: RunConfig, default_name: str) -> Path | None:
    if cfg.out is not None:
        return cfg.out
    outdir = os.environ.get("TREEINV_OUTDIR")
    return Path(outdir) / default_name if outdir else None


def _write(path: Path | None, payload: dict) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1) + "\n")


# -- build-inversion ----------------------------------------------------------


def cycle_type_lines(h) -> list[str]:
    return [
        f"{n}: " + ",".join(map(str, sphere_cycle_type(h, n)))
        for n in range(h.depth + 1)
    ]


def run_build_inversion(cfg: RunConfig, args) -> int:
    if cfg.N is not None:
        h = inversions.truncated_good_inversion(cfg.N, cfg.depth)
    else:
        h = inversions.good_inversion(cfg.depth)
    for line in cycle_type_lines(h):
        print(line)
    _write(_out_path(cfg, "inversion.json"), h.to_json())
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "cycle_type"])
            for n in range(h.depth + 1):
                w.writerow([n, " ".join(map(str, sphere_cycle_type(h, n)))])
    return EXIT_OK


# -- verify ---------------------------------------------------------------------


def verify_thm2(depth: int, k: int = 2, *, budget: int = closure.DEFAULT_BUDGET,
                threads: int = 1) -> tuple[int, dict]:
    """No compatible involution of the good inversion's closure on ``B(e, depth)``."""
    g = inversions.good_inversion(depth)
    rep = closure.search_involutions(g, k, depth, budget=budget, threads=threads)
    payload = {"claim": "thm2", **rep.to_json()}
    if rep.found:
        return EXIT_COUNTER, payload
    return (EXIT_OK if rep.exhaustive else EXIT_BUDGET), payload


def verify_thm3(N: int, depth: int, k: int = 2, *, budget: int = closure.DEFAULT_BUDGET,
                threads: int = 1) -> tuple[int, dict]:
    """Minimal compatible inversion order of ``g_N`` is ``2**N``, attained by surgery."""
    g = inversions.truncated_good_inversion(N, depth)
    res = closure.min_inversion_order(g, k, depth, budget=budget, threads=threads)
    h = inversions.thm3_surgery(g, N)
    surgery = {
        "order_on_ball": order_on_ball(h),
        "edge_action": h.edge_action,
        "passes_local_check": closure.passes_local_check(h, g, k),
    }
    payload = {"claim": "thm3", "N": N, "expected_order": 2 ** N, **res.to_json(), "surgery": surgery}
    if not res.exhaustive:
        return EXIT_BUDGET, payload
    ok = (
        res.order == 2 ** N
        and surgery["order_on_ball"] == 2 ** N
        and surgery["edge_action"] == "swap"
        and surgery["passes_local_check"]
    )
    return (EXIT_OK if ok else EXIT_COUNTER), payload


def _prop1_record(g, k: int) -> dict:
    h = inversions.prop1_surgery(g)
    return {
        "order_on_ball": order_on_ball(h),
        "edge_action": h.edge_action,
        "passes_local_check": closure.passes_local_check(h, g, k),
        "witness": h.to_json(),
    }


def verify_prop1(depth: int, k: int = 1, *, samples: int = 0, seed: int = 0) -> tuple[int, dict]:
    """Half-tree surgery yields a compatible inversion of order 2.

    Runs on the good inversion and on ``samples`` random inversions drawn with
    ``seed``.
    """
    if depth < k + 1:
        raise UsageError(f"depth must be at least k + 1 = {k + 1}")
    rng = np.random.default_rng(seed)
    records = [_prop1_record(inversions.good_inversion(depth), k)]
    for _ in range(samples):
        records.append(_prop1_record(random_portrait(depth, rng, edge="swap"), k))
    ok = all(
        r["order_on_ball"] == 2 and r["edge_action"] == "swap" and r["passes_local_check"]
        for r in records
    )
    for r in records[1:]:
        del r["witness"]
    payload = {"claim": "prop1", "depth": depth, "k": k, "samples": samples, "seed": seed,
               "good": records[0], "random": records[1:]}
    return (EXIT_OK if ok else EXIT_COUNTER), payload


def verify_corollary(depth: int, k: int = 2, *, budget: int = closure.DEFAULT_BUDGET,
                     threads: int = 1) -> tuple[int, dict]:
    """Compatible inversions of the good inversion are single cycles on spheres ``n <= depth - k``."""
    g = inversions.good_inversion(depth)
    upto = depth - k
    rep = closure.enumerate_compatible(g, k, depth, closure.InvertsNotGood(upto),
                                       budget=budget, threads=threads)
    payload = {"claim": "corollary-good-inv", "levels_checked": upto, **rep.to_json()}
    if rep.found:
        return EXIT_COUNTER, payload
    return (EXIT_OK if rep.exhaustive else EXIT_BUDGET), payload


def run_verify(cfg: RunConfig, args) -> int:
    claim = args.claim
    if claim == "thm2":
        code, payload = verify_thm2(cfg.depth, cfg.k or 2, budget=cfg.budget, threads=cfg.threads)
        print(f"involutions: {len(payload['found'])} exhaustive: {payload['exhaustive']}")
    elif claim == "thm3":
        if cfg.N is None:
            raise UsageError("verify thm3 needs --n")
        code, payload = verify_thm3(cfg.N, cfg.depth, cfg.k or 2, budget=cfg.budget,
                                    threads=cfg.threads)
        print(f"min order: {payload['min_order']} expected: {payload['expected_order']} "
              f"surgery order: {payload['surgery']['order_on_ball']}")
    elif claim == "prop1":
        code, payload = verify_prop1(cfg.depth, cfg.k or 1, samples=args.samples, seed=cfg.seed)
        print(f"order: {payload['good']['order_on_ball']} edge: {payload['good']['edge_action']} "
              f"local check: {payload['good']['passes_local_check']}")
    else:
        code, payload = verify_corollary(cfg.depth, cfg.k or 2, budget=cfg.budget,
                                         threads=cfg.threads)
        print(f"non-single-cycle inversions: {len(payload['found'])} "
              f"exhaustive: {payload['exhaustive']}")
    _write(_out_path(cfg, f"verify-{claim}.json"), payload)
    return code


# -- gadget ---------------------------------------------------------------------


def gadget_local(C: gadget.GadgetComplex) -> tuple[int, dict]:
    blue = [gadget.local_blue_swap_analysis(C, w) for w in C.gadgets if C.is_interior(w, 2)]
    green = []
    red = []
    for w in C.gadgets:
        v = gadget.neighbour(w, "g")
        if len(v) > len(w) and C.is_interior(w, 2) and C.is_interior(v, 2):
            green.append(gadget.green_inversion_analysis(C, (w, v)))
        if len(w) < C.radius:
            for c in C.children(w):
                if C.is_interior(c, 1):
                    red.append({"pair": [w, c], "swaps": gadget.red_swap_count(C, w, c)})
    ok = (
        bool(blue) and all(r.passed for r in blue)
        and all(r.passed for r in green)
        and all(r["swaps"] == 0 for r in red)
    )
    payload = {
        "radius": C.radius,
        "blue_swap": [r.to_json() for r in blue],
        "green_swap": [r.to_json() for r in green],
        "red_swap": red,
        "passed": ok,
    }
    return (EXIT_OK if ok else EXIT_COUNTER), payload


def gadget_transitive(C: gadget.GadgetComplex) -> tuple[int, dict]:
    inner = [w for w in C.gadgets if C.is_interior(w, 1)]
    pairs = []
    ok = True
    for a in inner:
        for b in inner:
            try:
                phi = gadget.transitivity_witness(C, a, b)
                pairs.append({"from": a, "to": b, "radius": C.radius - max(len(a), len(b)) + 1,
                              "rotation": phi.rotation[a]})
            except gadget.NoWitness as exc:
                ok = False
                pairs.append({"from": a, "to": b, "error": str(exc)})
    payload = {"radius": C.radius, "gadgets": inner, "pairs": pairs, "passed": ok}
    return (EXIT_OK if ok else EXIT_COUNTER), payload


def run_gadget(cfg: RunConfig, args) -> int:
    C = gadget.build_sigma(cfg.radius, args.anchor)
    action = args.action
    if action == "build":
        counts = C.arc_counts()
        print(f"gadgets: {len(C.gadgets)} nodes: {C.node_count} arcs: {len(C.arcs)} "
              f"(internal {counts['internal']}, red {counts['red']}, green {counts['green']})")
        if args.dot:
            Path(args.dot).write_text(C.to_dot())
        _write(_out_path(cfg, "sigma.json"), C.to_json())
        return EXIT_OK
    if action == "verify-local":
        code, payload = gadget_local(C)
        for r in payload["blue_swap"]:
            types = "{" + ",".join(str(t[0]) if len(t) == 1 else str(t) for t in r["black_cycle_types"]) + "}"
            print(f"{r['gadget']}: black cycle type {types} grandchildren order "
                  f"{r['grandchildren_orders']}")
        for r in payload["green_swap"]:
            print(f"{'-'.join(r['pair'])}: distance-1 orders {r['distance_one_orders']}")
        print(f"red swaps: {sum(r['swaps'] for r in payload['red_swap'])}")
    elif action == "verify-transitive":
        code, payload = gadget_transitive(C)
        print(f"pairs: {len(payload['pairs'])} passed: {payload['passed']}")
    else:
        rep = gadget.torsion_search(C, budget=cfg.budget, threads=cfg.threads)
        payload = rep.to_json()
        print(f"involution candidates: {len(rep.found)} exhaustive: {rep.exhaustive}")
        if rep.found:
            code = EXIT_COUNTER
        else:
            code = EXIT_OK if rep.exhaustive else EXIT_BUDGET
    _write(_out_path(cfg, f"gadget-{action}.json"), payload)
    return code


# -- parsing ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treeinv", description="Edge inversions and local closures of regular trees.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-inversion", help="write a good or truncated inversion")
    kind = b.add_mutually_exclusive_group(required=True)
    kind.add_argument("--good", action="store_true")
    kind.add_argument("--truncated", type=int, metavar="N")
    b.add_argument("--depth", type=int, required=True)
    b.add_argument("--out", type=Path)
    b.add_argument("--csv", type=Path, help="cycle-type table")

    v = sub.add_parser("verify", help="check one of the closure statements")
    v.add_argument("claim", choices=["thm2", "thm3", "prop1", "corollary-good-inv"])
    v.add_argument("--n", type=int, dest="N")
    v.add_argument("--depth", type=int, required=True)
    v.add_argument("--k", type=int)
    v.add_argument("--budget", type=int)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--samples", type=int, default=0, help="random inversions for prop1")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", type=Path)

    g = sub.add_parser("gadget", help="the coloured gadget complex")
    g.add_argument("action", choices=["build", "verify-local", "verify-transitive", "torsion-search"])
    g.add_argument("--radius", type=int, default=3)
    g.add_argument("--anchor", type=int, choices=[0, 1], default=0)
    g.add_argument("--dot", type=Path)
    g.add_argument("--budget", type=int)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--out", type=Path)
    return p


def _config(args) -> RunConfig:
    budget = args.budget if getattr(args, "budget", None) is not None else _default_budget()
    cfg = RunConfig(
        command=args.command,
        depth=getattr(args, "depth", None),
        k=getattr(args, "k", None),
        N=getattr(args, "N", None) if args.command == "verify" else getattr(args, "truncated", None),
        radius=getattr(args, "radius", None),
        budget=budget,
        out=getattr(args, "out", None),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", 1),
    )
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "build-inversion":
            return run_build_inversion(cfg, args)
        if args.command == "verify":
            return run_verify(cfg, args)
        return run_gadget(cfg, args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, TreeInvError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
