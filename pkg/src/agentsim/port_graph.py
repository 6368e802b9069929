"""Anonymous port-numbered graphs.

A graph is stored as one ordered neighbor list per node: ``ports[i][p]`` is the
node reached from ``i`` through local port ``p``.  Node ids are dense integers
``0..n-1``; agents never see them, only degrees and port numbers.

All randomness in the generators flows from a single integer seed through
:class:`random.Random` (Mersenne Twister), so corpora are reproducible across
runs and platforms.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Malformed port lists."""


class SelfLoop(GraphError):
    pass


class DuplicatePort(GraphError):
    pass


class AsymmetricEdge(GraphError):
    pass


class OutOfRangePort(GraphError):
    pass


class NotANeighbor(GraphError):
    pass


@dataclass(frozen=True)
class PortGraph:
    ports: tuple[tuple[int, ...], ...]
    _inverse: tuple[dict[int, int], ...] = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.ports)

    def degree(self, i: int) -> int:
        return len(self.ports[i])

    @property
    def max_degree(self) -> int:
        return max((len(p) for p in self.ports), default=0)

    def port(self, i: int, p: int) -> int:
        """Neighbor of ``i`` behind port ``p``."""
        if not 0 <= p < len(self.ports[i]):
            raise OutOfRangePort(f"node {i} has no port {p} (degree {len(self.ports[i])})")
        return self.ports[i][p]

    def inverse_port(self, i: int, j: int) -> int:
        """Port of ``i`` leading to neighbor ``j``."""
        try:
            return self._inverse[i][j]
        except KeyError:
            raise NotANeighbor(f"node {j} is not a neighbor of node {i}") from None

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return sorted((i, j) for i, nbrs in enumerate(self.ports) for j in nbrs if i < j)

    @property
    def num_edges(self) -> int:
        return sum(len(p) for p in self.ports) // 2

    def is_connected(self) -> bool:
        return _connected(self.n, self.ports)

    def relabel_ports(self, rng: random.Random) -> "PortGraph":
        """Same topology with every node's port order shuffled by ``rng``."""
        lists = []
        for nbrs in self.ports:
            nbrs = list(nbrs)
            rng.shuffle(nbrs)
            lists.append(nbrs)
        return build_graph(lists)


def build_graph(port_lists: Sequence[Iterable[int]]) -> PortGraph:
    """Validate per-node neighbor lists and return a :class:`PortGraph`."""
    ports = tuple(tuple(int(j) for j in nbrs) for nbrs in port_lists)
    n = len(ports)
    inverse = []
    for i, nbrs in enumerate(ports):
        inv: dict[int, int] = {}
        for p, j in enumerate(nbrs):
            if not 0 <= j < n:
                raise GraphError(f"node {i} port {p}: neighbor {j} outside [0, {n - 1}]")
            if j == i:
                raise SelfLoop(f"node {i} port {p}: self-loop")
            if j in inv:
                raise DuplicatePort(f"node {i} port {p}: neighbor {j} already behind port {inv[j]}")
            inv[j] = p
        inverse.append(inv)
    for i, nbrs in enumerate(ports):
        for p, j in enumerate(nbrs):
            if i not in inverse[j]:
                raise AsymmetricEdge(f"node {i} port {p} leads to {j}, but {j} has no port back to {i}")
    return PortGraph(ports, tuple(inverse))


def _connected(n: int, ports, skip: tuple[int, int] | None = None) -> bool:
    if n == 0:
        return True
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in ports[u]:
            if skip is not None and {u, v} == set(skip):
                continue
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def find_bridges(g: PortGraph) -> list[tuple[int, int]]:
    """Bridges via an iterative DFS lowpoint pass (no recursion)."""
    n = g.n
    disc = [-1] * n
    low = [0] * n
    bridges = []
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # frame: (node, parent, next port index)
        stack = [[root, -1, 0]]
        while stack:
            frame = stack[-1]
            u, parent, idx = frame
            nbrs = g.ports[u]
            if idx < len(nbrs):
                frame[2] += 1
                v = nbrs[idx]
                if v == parent:
                    continue
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append([v, u, 0])
                else:
                    low[u] = min(low[u], disc[v])
            else:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.append((min(u, parent), max(u, parent)))
    return sorted(bridges)


def is_two_edge_connected(g: PortGraph) -> bool:
    return g.is_connected() and not find_bridges(g)


# --- generators -----------------------------------------------------------


def generate_cycle(n: int, scheme: str = "oriented", seed: int = 0) -> PortGraph:
    """Cycle ``C_n``.

    ``oriented``: port 0 leads to ``(i+1) mod n`` and port 1 to ``(i-1) mod n``.
    ``scrambled``: each node's two ports are swapped or not by a seeded coin.
    """
    if n < 3:
        raise GraphError(f"a simple cycle needs n >= 3, got {n}")
    lists = [[(i + 1) % n, (i - 1) % n] for i in range(n)]
    if scheme == "scrambled":
        rng = random.Random(seed)
        for nbrs in lists:
            if rng.random() < 0.5:
                nbrs.reverse()
    elif scheme != "oriented":
        raise GraphError(f"unknown port scheme {scheme!r}")
    return build_graph(lists)


def complete_graph(n: int) -> PortGraph:
    """``K_n`` with canonical ports (neighbors in increasing id order)."""
    return build_graph([[j for j in range(n) if j != i] for i in range(n)])


def petersen_graph() -> PortGraph:
    adj: list[list[int]] = [[] for _ in range(10)]

    def add(u, v):
        adj[u].append(v)
        adj[v].append(u)

    for i in range(5):
        add(i, (i + 1) % 5)
        add(i, i + 5)
        add(5 + i, 5 + (i + 2) % 5)
    return build_graph(adj)


def bowtie_with_bridge() -> PortGraph:
    """Two triangles {0,1,2} and {3,4,5} joined by the bridge (2, 3)."""
    return build_graph([[1, 2], [0, 2], [0, 1, 3], [2, 4, 5], [3, 5], [3, 4]])


def _from_edges(n: int, edges: Iterable[tuple[int, int]]) -> PortGraph:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return build_graph(adj)


def generate_random_2ec(n: int, extra_ears: int = 0, seed: int = 0, shuffle_ports: bool = True) -> PortGraph:
    """Random 2-edge-connected simple graph built by an open ear decomposition.

    A random cycle on a subset of the nodes is grown by open ears (paths with
    at least one new node between two distinct attached nodes) until every node
    is used; ``extra_ears`` chords between non-adjacent attached nodes follow.
    Ports are numbered in attachment order, then shuffled when
    ``shuffle_ports`` is set.
    """
    if n < 3:
        raise GraphError(f"need n >= 3, got {n}")
    if extra_ears < 0:
        raise GraphError("extra_ears must be non-negative")
    capacity = n * (n - 1) // 2 - n
    if extra_ears > capacity:
        raise GraphError(f"{extra_ears} extra ears exceed simple-graph capacity {capacity} for n={n}")
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    k = rng.randint(3, n)
    # every open ear costs one edge beyond its new nodes; keep room for the chords
    ear_budget = capacity - extra_ears
    if ear_budget == 0:
        k = n
    edges: list[tuple[int, int]] = [(order[i], order[(i + 1) % k]) for i in range(k)]
    present = {frozenset(e) for e in edges}
    attached = order[:k]
    pending = order[k:]
    while pending:
        a, b = rng.sample(attached, 2)
        length = rng.randint(1, min(len(pending), max(1, n // 3)))
        ear_budget -= 1
        if ear_budget == 0:
            length = len(pending)
        inner, pending = pending[:length], pending[length:]
        path = [a, *inner, b]
        for u, v in zip(path, path[1:]):
            edges.append((u, v))
            present.add(frozenset((u, v)))
        attached.extend(inner)
    for _ in range(extra_ears):
        free = [(u, v) for u in range(n) for v in range(u + 1, n) if frozenset((u, v)) not in present]
        if not free:
            raise GraphError("no room for another ear")
        u, v = free[rng.randrange(len(free))]
        edges.append((u, v))
        present.add(frozenset((u, v)))
    g = _from_edges(n, edges)
    if shuffle_ports:
        g = g.relabel_ports(rng)
    return g


def random_simple_graph(n: int, edge_prob: float, seed: int = 0) -> PortGraph:
    """Erdos-Renyi style graph with seeded port order; may be bridged or disconnected."""
    rng = random.Random(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < edge_prob]
    return _from_edges(n, edges).relabel_ports(rng)


# --- text and DOT formats -------------------------------------------------


def format_graph(g: PortGraph) -> str:
    lines = [str(g.n)]
    lines.extend(" ".join(str(j) for j in nbrs) for nbrs in g.ports)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> PortGraph:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        rows.append(line)
    # drop comment-only/blank lines before the count, keep blank lines after it (isolated nodes)
    while rows and not rows[0]:
        rows.pop(0)
    if not rows:
        raise GraphError("empty graph file")
    try:
        n = int(rows[0])
    except ValueError:
        raise GraphError(f"first line must be the node count, got {rows[0]!r}") from None
    body = rows[1:]
    while len(body) > n and not body[-1]:
        body.pop()
    if len(body) != n:
        raise GraphError(f"expected {n} port lines, found {len(body)}")
    try:
        lists = [[int(tok) for tok in line.split()] for line in body]
    except ValueError as exc:
        raise GraphError(f"bad neighbor id: {exc}") from None
    return build_graph(lists)


def read_graph(path: str | Path) -> PortGraph:
    return parse_graph(Path(path).read_text())


def write_graph(g: PortGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(g))


def to_dot(g: PortGraph, highlight: Iterable[tuple[int, int]] = (), name: str = "G") -> str:
    """DOT text; edges in ``highlight`` are drawn bold red. Port labels sit at edge ends."""
    marked = {frozenset(e) for e in highlight}
    out = [f"graph {name} {{", "  node [shape=circle];"]
    for i in range(g.n):
        out.append(f"  {i};")
    for u, v in g.edges():
        attrs = [f'taillabel="{g.inverse_port(u, v)}"', f'headlabel="{g.inverse_port(v, u)}"']
        if frozenset((u, v)) in marked:
            attrs += ["color=red", "penwidth=3"]
        out.append(f"  {u} -- {v} [{', '.join(attrs)}];")
    out.append("}")
    return "\n".join(out) + "\n"
