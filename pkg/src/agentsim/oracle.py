"""Reference computations used to check the simulator.

Nothing here calls the simulator's phase procedures; agreement between the
two is only meaningful because the logic is written twice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .agent import Configuration, Trace, TransitionFunction
from .port_graph import NotANeighbor, PortGraph


class BoundaryNotFound(RuntimeError):
    """The trace ends before a phase boundary the check needs."""


@dataclass
class DfsOutcome:
    s: int
    t: int
    trajectory: list[int]
    v_dfs: set[int]
    v_itc: set[int]
    itc_order: list[int]
    # (entry port, outgoing port) per trajectory index; None where undefined
    lastinout: list[tuple[Optional[int], Optional[int]]]
    parent: dict[int, int] = field(default_factory=dict)


def centralized_dfs(g: PortGraph, s: int, t: int) -> DfsOutcome:
    """Search-head DFS from ``s`` whose first move is to ``t``.

    Ports are probed in ascending order, skipping the port to the tree parent;
    a probe into an already searched node returns at once.  The search stops
    when the head reaches ``s`` again.
    """
    if t not in g.ports[s]:
        raise NotANeighbor(f"node {t} is not a neighbor of node {s}")
    trajectory = [s, t]
    parent = {t: s}
    searched = {s, t}
    # each frame: node, remaining ports to probe
    stack = [(t, iter([p for p, w in enumerate(g.ports[t]) if w != s]))]
    while stack:
        node, pending = stack[-1]
        probe = next(pending, None)
        if probe is None:
            stack.pop()
            back = parent[node]
            trajectory.append(back)
            if back == s:
                break
            continue
        w = g.ports[node][probe]
        trajectory.append(w)
        if w == s:
            break
        if w in searched:
            trajectory.append(node)
            continue
        searched.add(w)
        parent[w] = node
        stack.append((w, iter([p for p, x in enumerate(g.ports[w]) if x != node])))

    s_prime = trajectory[-2]
    path = [s_prime]
    while path[-1] != s:
        path.append(parent[path[-1]])
    path.reverse()

    lastinout = []
    last = len(trajectory) - 1
    for k, u in enumerate(trajectory):
        entry = g.inverse_port(u, trajectory[k - 1]) if k > 0 else None
        out = g.inverse_port(u, trajectory[k + 1]) if k < last else None
        lastinout.append((entry, out))
    return DfsOutcome(s, t, trajectory, set(trajectory), set(path), path, lastinout, parent)


def brute_bridges(g: PortGraph) -> set[tuple[int, int]]:
    """Edges ``(u, v)`` such that ``v`` is unreachable from ``u`` once the edge is deleted.

    Each edge is removed in turn followed by a fresh breadth-first scan;
    quadratic on purpose.
    """
    bridges = set()
    for e in g.edges():
        u, v = e
        seen = {u}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for y in g.ports[x]:
                if (min(x, y), max(x, y)) == e or y in seen:
                    continue
                seen.add(y)
                queue.append(y)
        if v not in seen:
            bridges.add(e)
    return bridges


def brute_two_edge_connected(g: PortGraph) -> bool:
    if g.n == 0:
        return True
    return not brute_bridges(g) and g.is_connected()


def lastinout_claim_check(outcome: DfsOutcome) -> bool:
    """Repeated visits of the same node never record the same (entry, exit) pair."""
    seen: dict[tuple, int] = {}
    for k, (u, pair) in enumerate(zip(outcome.trajectory, outcome.lastinout)):
        key = (u, pair)
        if key in seen:
            return False
        seen[key] = k
    return True


# --- phase resultant checks ----------------------------------------------


@dataclass
class Check:
    round: int
    phase: str
    condition: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f" {self.detail}" if self.detail else ""
        return f"{self.round} {self.phase} {self.condition} {status}{tail}"


@dataclass
class PhaseReport:
    checks: list[Check] = field(default_factory=list)
    outcomes: list[DfsOutcome] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Optional[Check]:
        return next((c for c in self.checks if not c.passed), None)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _legal_node(st) -> bool:
    return st.dfsstat == 0 and st.sim == 0 and st.smemupd == 0


def _legal_config(c: Configuration) -> bool:
    for i, st in enumerate(c.storages):
        if not _legal_node(st) or st.sloc != (1 if i == c.location else 0):
            return False
    return True


def check_phase_resultants(g: PortGraph, sim_trace: Trace, phi_star: TransitionFunction) -> PhaseReport:
    """Evaluate each phase's resultant conditions for every simulated round in ``sim_trace``.

    The trace must be recorded in full mode.  Phase boundaries are found from
    storage predicates at ``s``: re-entry with ``dfsstat_s=1`` (DFS done),
    re-entry with ``(dfsstat, sim, smemupd)_s=(0,1,0)`` (clean-up done),
    re-entry with ``smemupd_s=1`` (transfer done), and the next legal
    configuration (move-and-reset done).
    """
    if not sim_trace.is_full:
        raise ValueError("phase checks need a full trace")
    configs = sim_trace.configs
    legal_idx = [k for k, c in enumerate(configs) if _legal_config(c)]
    if not legal_idx or legal_idx[0] != 0:
        raise BoundaryNotFound("trace does not start at a legal configuration")
    if legal_idx[-1] != len(configs) - 1:
        raise BoundaryNotFound(
            f"trace ends at round {len(configs) - 1} in the middle of simulated round {len(legal_idx) - 1}"
        )
    report = PhaseReport()
    locs = [c.location for c in configs]
    for t, (a, b) in enumerate(zip(legal_idx, legal_idx[1:])):
        _check_round(g, configs, locs, a, b, t, phi_star, report)
    return report


def _check_round(g, configs, locs, a, b, t, phi_star, report):
    def add(phase, cond, passed, detail=""):
        report.checks.append(Check(t, phase, cond, bool(passed), "" if passed else detail))

    start = configs[a]
    s = start.location
    st_s = start.storages[s]
    deg = g.degree(s)
    out, svars, smem = phi_star(deg, st_s.spin, st_s.svars, st_s.smem)
    expected_s = (out, svars, smem)

    def s_values(c):
        x = c.storages[s]
        return (x.spout, x.svars, x.smem)

    after = configs[a + 1]
    add("LocalComp", "outputs", s_values(after) == expected_s, f"{s_values(after)} != {expected_s}")
    others_ok = all(after.storages[i] == start.storages[i] for i in range(g.n) if i != s)
    add("LocalComp", "others_unchanged", others_ok, "a node other than s changed")
    if out == -1:
        add("LocalComp", "terminal_legal", b == a + 1 and _legal_config(after) and after.location == s,
            "terminating round did not end legal at s")
        return

    t_node = g.port(s, out)
    outcome = centralized_dfs(g, s, t_node)
    report.outcomes.append(outcome)
    itc = outcome.v_itc

    def find(lo, pred):
        for k in range(lo + 1, b + 1):
            if configs[k].location == s and pred(configs[k].storages[s]):
                return k
        return None

    # DFS
    r_dfs = find(a, lambda x: x.dfsstat == 1 and x.sim == 0)
    if r_dfs is None:
        add("DFS", "boundary", False, "agent never re-entered s with dfsstat=1")
        return
    c = configs[r_dfs]
    add("DFS", "trajectory", locs[a:r_dfs + 1] == outcome.trajectory, "walk differs from reference search")
    bad = [u for u in range(g.n) if (c.storages[u].sim, c.storages[u].smemupd) != (0, 0)]
    add("DFS", "sim_smemupd_zero", not bad, f"nodes {bad}")
    want = {u: (1 if u in itc else 2 if u in outcome.v_dfs else 0) for u in range(g.n)}
    bad = [u for u in range(g.n) if c.storages[u].dfsstat != want[u]]
    add("DFS", "dfsstat_labels", not bad, f"nodes {bad}")
    add("DFS", "s_unchanged", s_values(c) == expected_s, f"{s_values(c)} != {expected_s}")

    # CleanUp
    r_cu = find(r_dfs, lambda x: (x.dfsstat, x.sim, x.smemupd) == (0, 1, 0))
    if r_cu is None:
        add("CleanUp", "boundary", False, "agent never re-entered s with (dfsstat,sim,smemupd)=(0,1,0)")
        return
    c = configs[r_cu]
    add("CleanUp", "trajectory", locs[r_dfs:r_cu + 1] == outcome.trajectory, "walk differs from reference search")
    bad = [u for u in itc if (c.storages[u].dfsstat, c.storages[u].sim, c.storages[u].smemupd) != (0, 1, 0)]
    add("CleanUp", "itc_marked", not bad, f"nodes {bad}")
    bad = []
    for u in itc:
        x = c.storages[u]
        try:
            pred = g.port(u, x.par)
            succ = g.port(u, x.cld)
            closes = g.port(pred, c.storages[pred].cld) == u
        except Exception:
            bad.append(u)
            continue
        if pred not in itc or succ not in itc or not closes:
            bad.append(u)
    add("CleanUp", "itc_oriented", not bad, f"nodes {bad}")
    bad = [u for u in range(g.n) if u not in itc and not _legal_node(c.storages[u])]
    add("CleanUp", "others_legal", not bad, f"nodes {bad}")
    add("CleanUp", "s_unchanged", s_values(c) == expected_s, f"{s_values(c)} != {expected_s}")

    # TransMem
    r_tm = find(r_cu, lambda x: x.smemupd == 1)
    if r_tm is None:
        add("TransMem", "boundary", False, "agent never re-entered s with smemupd=1")
        return
    c = configs[r_tm]
    bad = [u for u in itc if (c.storages[u].dfsstat, c.storages[u].sim, c.storages[u].smemupd) != (0, 1, 1)]
    add("TransMem", "smemupd_set", not bad, f"nodes {bad}")
    bad = [u for u in itc if c.storages[u].smem != smem]
    add("TransMem", "smem_copied", not bad, f"nodes {bad}")
    bad = [u for u in range(g.n) if u not in itc and not _legal_node(c.storages[u])]
    add("TransMem", "others_legal", not bad, f"nodes {bad}")
    add("TransMem", "s_unchanged", s_values(c) == expected_s, f"{s_values(c)} != {expected_s}")

    # MoveReset
    c = configs[b]
    add("MoveReset", "legal_at_t", _legal_config(c) and c.location == t_node,
        f"location {c.location}, expected {t_node}")
    add("MoveReset", "spin_t", c.storages[t_node].spin == g.inverse_port(t_node, s),
        f"spin_t={c.storages[t_node].spin}")
    add("MoveReset", "smem_t", c.storages[t_node].smem == smem, f"smem_t={c.storages[t_node].smem}")
