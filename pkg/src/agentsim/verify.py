"""Run the simulator against a direct execution and collect every check."""

from __future__ import annotations

import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import algolib
from .agent import Algorithm, ModelError, Verdict, execute, verify_simulation
from .oracle import BoundaryNotFound, PhaseReport, centralized_dfs, check_phase_resultants, lastinout_claim_check
from .port_graph import PortGraph, generate_random_2ec
from .simulator import SIM_GAMMA, StorageLayout, is_legal, overhead_bound, run_simulator


@dataclass
class VerifyResult:
    verdict: Optional[Verdict]
    report: Optional[PhaseReport]
    requested_rounds: int
    simulated_rounds: int
    terminated_at: Optional[int]
    gaps: list[int]
    bound: int
    phase_moves: Counter = field(default_factory=Counter)
    error: Optional[str] = None
    stalled: bool = False
    claim_ok: bool = True

    @property
    def max_gap(self) -> int:
        return max(self.gaps, default=0)

    @property
    def bound_ok(self) -> bool:
        return self.max_gap <= self.bound

    @property
    def ok(self) -> bool:
        return (
            self.error is None
            and not self.stalled
            and self.verdict is not None
            and self.verdict.ok
            and self.report is not None
            and self.report.ok
            and self.claim_ok
        )

    def reason(self) -> str:
        if self.error:
            return self.error
        if self.stalled:
            return f"simulator stalled after {self.simulated_rounds} of {self.requested_rounds} simulated rounds"
        if self.verdict is not None and not self.verdict.ok:
            t, why = self.verdict.first_divergence
            return f"divergence at simulated round {t}: {why}"
        if self.report is not None and not self.report.ok:
            return "phase check failed: " + self.report.first_failure.line()
        if not self.claim_ok:
            return "lastin/lastout claim violated"
        return "ok"


def verify_instance(
    g: PortGraph,
    a_star: Algorithm,
    start: int,
    rounds: int,
    mutations: Iterable[str] = (),
    check_phases: bool = True,
) -> VerifyResult:
    """Simulate ``rounds`` rounds of ``a_star`` from ``start`` and compare with direct execution."""
    a_star = a_star.at(start)
    bound = overhead_bound(g)
    oracle = execute(g, a_star, rounds)
    sim_target = oracle.total_rounds
    result = VerifyResult(None, None, sim_target, 0, oracle.total_rounds if oracle.terminated else None, [], bound)
    try:
        sim = run_simulator(g, a_star, sim_target, start, mutations=mutations)
    except (ModelError, RuntimeError, ValueError, IndexError, KeyError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    legal_rounds = [r for r, c in zip(sim.rounds, sim.configs) if is_legal(c)]
    result.simulated_rounds = len(legal_rounds) - 1
    result.gaps = [b - a for a, b in zip(legal_rounds, legal_rounds[1:])]
    result.phase_moves = Counter(tag for tag in sim.tags if tag)
    if result.simulated_rounds < sim_target:
        result.stalled = True
    result.verdict = verify_simulation(sim, oracle, SIM_GAMMA, is_legal)
    if check_phases:
        try:
            result.report = check_phase_resultants(g, sim, a_star.phi)
        except BoundaryNotFound as exc:
            result.error = f"BoundaryNotFound: {exc}"
            return result
        result.claim_ok = all(lastinout_claim_check(o) for o in result.report.outcomes)
    else:
        result.report = PhaseReport()
    return result


def storage_width_bits(g: PortGraph, a_star: Algorithm) -> int:
    return StorageLayout(g.max_degree, a_star.storage_width or 0).total_bits


def storage_width_cap(g: PortGraph, a_star: Algorithm) -> int:
    """``lambda* + 12 * (ceil(log2(Delta + 1)) + 1)``."""
    return (a_star.storage_width or 0) + 12 * StorageLayout(g.max_degree, 0).port_width


# --- fuzz campaign --------------------------------------------------------


def fuzz_case(seed: int, n_range: tuple[int, int] = (3, 20)):
    """Graph, algorithm and start node derived from one seed."""
    rng = random.Random(seed)
    n = rng.randint(*n_range)
    ears = rng.randint(0, 3) if n >= 6 else rng.randint(0, 1) if n >= 4 else 0
    g = generate_random_2ec(n, ears, seed=rng.getrandbits(32))
    width = rng.randint(1, 3)
    a_star = algolib.random_table(rng.getrandbits(32), width, g.max_degree)
    start = rng.randrange(n)
    return g, a_star, start


def _fuzz_one(args):
    seed, n_range, rounds, mutations = args
    try:
        g, a_star, start = fuzz_case(seed, n_range)
    except Exception as exc:  # generator failure is itself a finding
        return {"seed": seed, "ok": False, "reason": f"case generation failed: {exc}"}
    res = verify_instance(g, a_star, start, rounds, mutations)
    dfs_ok = True
    for s in range(g.n):
        for t in g.ports[s]:
            if not lastinout_claim_check(centralized_dfs(g, s, t)):
                dfs_ok = False
    ok = res.ok and res.bound_ok and dfs_ok
    reason = res.reason()
    if res.ok and not res.bound_ok:
        reason = f"overhead {res.max_gap} exceeds bound {res.bound}"
    elif res.ok and not dfs_ok:
        reason = "lastin/lastout claim violated for some (s, t)"
    return {
        "seed": seed,
        "n": g.n,
        "edges": g.num_edges,
        "start": start,
        "algo": a_star.name,
        "simulated_rounds": res.simulated_rounds,
        "terminated_at": res.terminated_at,
        "max_gap": res.max_gap,
        "bound": res.bound,
        "ok": ok,
        "reason": "ok" if ok else reason,
    }


def fuzz(
    seeds: Iterable[int],
    n_range: tuple[int, int] = (3, 20),
    rounds: int = 30,
    workers: int = 1,
    mutations: Iterable[str] = (),
) -> dict:
    """Verify one random instance per seed; the summary is sorted by seed."""
    mutations = tuple(sorted(mutations))
    jobs = [(s, n_range, rounds, mutations) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fuzz_one, jobs, chunksize=8))
    else:
        results = [_fuzz_one(j) for j in jobs]
    results.sort(key=lambda r: r["seed"])
    failures = [r for r in results if not r["ok"]]
    return {
        "cases": len(results),
        "failures": len(failures),
        "failed_seeds": [r["seed"] for r in failures],
        "failure_reasons": {str(r["seed"]): r["reason"] for r in failures},
        "max_gap_ratio": max((r["max_gap"] / r["bound"] for r in results if "bound" in r), default=0.0),
        "terminated": sum(1 for r in results if r.get("terminated_at") is not None),
    }
