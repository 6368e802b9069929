"""Execution semantics for a single mobile agent on a port-numbered graph.

A transition function has the shape
``phi(degree, entry_port, storage, mem) -> (out_port, storage', mem')`` and is
never given the node id.  ``out_port == -1`` terminates the agent in place.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .port_graph import PortGraph

TransitionFunction = Callable[[int, int, Any, int], tuple[int, Any, int]]


class ModelError(Exception):
    """An algorithm or configuration violates the agent model."""


class InvalidConfiguration(ModelError):
    pass


class PhiRangeError(ModelError):
    pass


class StorageWidthError(ModelError):
    pass


class EmptyLegalSubsequence(ModelError):
    pass


@dataclass(frozen=True)
class Algorithm:
    """The tuple ``(m, M, M', l, phi)`` plus bookkeeping.

    ``memory_bits`` is 1 for a one-bit agent and 0 for an oblivious one.
    ``storage_width`` bounds integer storage payloads (``None`` = unbounded).
    """

    init_mem: int
    init_storage: Any
    init_storage_start: Any
    init_location: int
    phi: TransitionFunction
    storage_width: Optional[int] = None
    memory_bits: int = 1
    name: str = "algorithm"

    def at(self, start: int) -> "Algorithm":
        return dataclasses.replace(self, init_location=start)


OneBitAlgorithm = Algorithm


@dataclass(frozen=True)
class Configuration:
    storages: tuple
    mem: int
    entry_port: int
    location: int

    def is_valid(self, g: PortGraph) -> bool:
        return 0 <= self.location < g.n and -1 <= self.entry_port < g.degree(self.location)


@dataclass
class Trace:
    """Recorded configurations of one execution.

    ``rounds[k]`` is the round index of ``configs[k]``; in full mode these are
    ``0, 1, 2, ...``.  ``tags[k]`` and ``moves[k]`` describe the round executed
    from ``configs[k]`` (``None`` for the final entry).  After termination the
    last configuration repeats forever; it is stored once.
    """

    configs: list[Configuration] = field(default_factory=list)
    rounds: list[int] = field(default_factory=list)
    tags: list[Optional[str]] = field(default_factory=list)
    moves: list[Optional[int]] = field(default_factory=list)
    terminated: bool = False
    total_rounds: int = 0

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def is_full(self) -> bool:
        return self.rounds == list(range(len(self.rounds)))

    def locations(self) -> list[int]:
        return [c.location for c in self.configs]


@dataclass(frozen=True)
class GammaMapping:
    gamma_M: Callable[[Any], Any]
    gamma_A: Callable[[Any], tuple[int, int]]


@dataclass
class Verdict:
    ok: bool
    t_sequence: list[int]
    first_divergence: Optional[tuple[int, str]] = None
    compared: int = 0


def initial_configuration(g: PortGraph, a: Algorithm) -> Configuration:
    if not 0 <= a.init_location < g.n:
        raise InvalidConfiguration(f"start node {a.init_location} outside [0, {g.n - 1}]")
    storages = tuple(
        a.init_storage_start if i == a.init_location else a.init_storage for i in range(g.n)
    )
    return Configuration(storages, a.init_mem, -1, a.init_location)


def step(g: PortGraph, c: Configuration, phi: TransitionFunction) -> tuple[Configuration, int]:
    """One round of the follow relation.

    Returns the next configuration and the outgoing port; ``-1`` means the agent
    terminated, in which case only its memory and the local storage change.
    """
    loc = c.location
    if not 0 <= loc < g.n:
        raise InvalidConfiguration(f"agent location {loc} outside [0, {g.n - 1}]")
    deg = len(g.ports[loc])
    if not -1 <= c.entry_port < deg:
        raise InvalidConfiguration(f"entry port {c.entry_port} invalid at node {loc} (degree {deg})")
    out, storage, mem = phi(deg, c.entry_port, c.storages[loc], c.mem)
    if not -1 <= out < deg:
        raise PhiRangeError(f"transition returned port {out} at a node of degree {deg}")
    storages = c.storages[:loc] + (storage,) + c.storages[loc + 1:]
    if out == -1:
        return Configuration(storages, mem, c.entry_port, loc), -1
    nxt = g.ports[loc][out]
    return Configuration(storages, mem, g._inverse[nxt][loc], nxt), out


def _check_output(a: Algorithm, c: Configuration, written: int) -> None:
    if a.memory_bits == 0 and c.mem != 0:
        raise ModelError(f"oblivious algorithm {a.name!r} wrote memory value {c.mem}")
    if c.mem not in (0, 1):
        raise ModelError(f"memory value {c.mem} is not a bit")
    if a.storage_width is not None:
        payload = c.storages[written]
        if not isinstance(payload, int) or payload < 0 or payload.bit_length() > a.storage_width:
            raise StorageWidthError(f"storage {payload!r} exceeds {a.storage_width} bits")


def execute(
    g: PortGraph,
    a: Algorithm,
    max_rounds: int,
    *,
    tagger: Optional[Callable[[int, int, Any], str]] = None,
    keep: Optional[Callable[[Configuration], bool]] = None,
    until: Optional[Callable[[Configuration], bool]] = None,
) -> Trace:
    """Run ``a`` on ``g`` from its initial configuration.

    Stops on termination, after ``max_rounds`` rounds, or once ``until``
    holds for a configuration past round 0.  ``keep`` selects which
    configurations are stored (checkpoint mode); the final one always is.
    ``tagger(degree, entry_port, storage)`` labels rounds for reporting only.
    """
    c = initial_configuration(g, a)
    trace = Trace()

    def record(r, conf, tag, move):
        trace.configs.append(conf)
        trace.rounds.append(r)
        trace.tags.append(tag)
        trace.moves.append(move)

    r = 0
    while True:
        done = r >= max_rounds or (r > 0 and until is not None and until(c))
        if done:
            record(r, c, None, None)
            break
        tag = tagger(len(g.ports[c.location]), c.entry_port, c.storages[c.location]) if tagger else None
        nxt, out = step(g, c, a.phi)
        _check_output(a, nxt, c.location)
        if keep is None or keep(c):
            record(r, c, tag, out)
        r += 1
        c = nxt
        if out == -1:
            trace.terminated = True
            record(r, c, None, None)
            break
    trace.total_rounds = r
    return trace


def follows(g: PortGraph, phi: TransitionFunction, c0: Configuration, c1: Configuration) -> bool:
    """Check the three follow conditions for a pair, independently of :func:`step`.

    A terminating round (agent stays, entry port kept) is also accepted.
    """
    l0, l1 = c0.location, c1.location
    deg = g.degree(l0)
    out, storage, mem = phi(deg, c0.entry_port, c0.storages[l0], c0.mem)
    if c1.storages[l0] != storage or c1.mem != mem:
        return False
    if any(c1.storages[i] != c0.storages[i] for i in range(g.n) if i != l0):
        return False
    if out == -1:
        return l1 == l0 and c1.entry_port == c0.entry_port
    if l1 not in g.ports[l0] or g.ports[l0].index(l1) != out:
        return False
    return g.ports[l1].index(l0) == c1.entry_port


# --- gamma interpretation and simulation checking -------------------------


def gamma_apply(c: Configuration, gm: Optional[GammaMapping]) -> tuple:
    """Interpret ``c`` as a configuration view ``(storages, (mem, entry_port), location)``.

    With ``gm=None`` the configuration is read directly (identity interpretation).
    """
    if gm is None:
        return (c.storages, (c.mem, c.entry_port), c.location)
    return (
        tuple(gm.gamma_M(st) for st in c.storages),
        tuple(gm.gamma_A(c.storages[c.location])),
        c.location,
    )


def _describe_mismatch(got: tuple, want: tuple) -> str:
    if got[2] != want[2]:
        return f"location {got[2]} != {want[2]}"
    if got[1] != want[1]:
        return f"(mem, entry_port) {got[1]} != {want[1]}"
    for i, (a, b) in enumerate(zip(got[0], want[0])):
        if a != b:
            return f"storage at node {i}: {a!r} != {b!r}"
    return "views differ"


def verify_simulation(
    sim_trace: Trace,
    oracle_trace: Trace,
    gm: Optional[GammaMapping],
    legal: Optional[Callable[[Configuration], bool]] = None,
) -> Verdict:
    """Compare legal simulator configurations against the oracle round by round.

    ``legal`` picks the configurations interpreted as simulated rounds; it
    defaults to "every configuration" for the identity interpretation.  A
    terminated oracle trace repeats its last configuration indefinitely.
    """
    if legal is None:
        legal = lambda c: True  # noqa: E731
    picks = [(r, c) for r, c in zip(sim_trace.rounds, sim_trace.configs) if legal(c)]
    if not picks:
        raise EmptyLegalSubsequence("simulator trace holds no legal configuration")
    t_seq = [r for r, _ in picks]
    if t_seq[0] != 0:
        return Verdict(False, t_seq, (0, f"first legal configuration at round {t_seq[0]}, not 0"), 0)
    oracle = oracle_trace.configs
    if not oracle_trace.is_full:
        raise ValueError("oracle trace must be recorded in full mode")
    limit = len(picks) if oracle_trace.terminated else min(len(picks), len(oracle))
    for t in range(limit):
        want = gamma_apply(oracle[min(t, len(oracle) - 1)], None)
        got = gamma_apply(picks[t][1], gm)
        if got != want:
            return Verdict(False, t_seq, (t, _describe_mismatch(got, want)), t)
    return Verdict(True, t_seq, None, limit)


# --- trace text format ----------------------------------------------------

TRACE_MAGIC = "agentsim-trace"
TRACE_VERSION = 1


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class StorageCodec:
    name: str
    dumps: Callable[[Any], str]
    loads: Callable[[str], Any]


INT_CODEC = StorageCodec("int", lambda v: format(v, "x"), lambda s: int(s, 16))


def dump_trace(trace: Trace, codec: StorageCodec) -> str:
    """One header line, the initial storages, then one record per stored round."""
    out = [f"{TRACE_MAGIC} {TRACE_VERSION} codec={codec.name} terminated={int(trace.terminated)} total={trace.total_rounds}"]
    prev = None
    for k, c in enumerate(trace.configs):
        if prev is None:
            out.append("init " + " ".join(codec.dumps(st) for st in c.storages))
            changed = ""
        else:
            diffs = [f"{i}={codec.dumps(st)}" for i, st in enumerate(c.storages) if st != prev.storages[i]]
            changed = " " + " ".join(diffs) if diffs else ""
        tag = trace.tags[k] or "-"
        move = "-" if trace.moves[k] is None else str(trace.moves[k])
        out.append(f"r {trace.rounds[k]} {c.location} {c.entry_port} {c.mem} {tag} {move} |{changed}")
        prev = c
    return "\n".join(out) + "\n"


def load_trace(text: str, codec: StorageCodec) -> Trace:
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("empty trace")
    head = lines[0].split()
    if len(head) < 2 or head[0] != TRACE_MAGIC:
        raise TraceFormatError("missing trace header")
    if head[1] != str(TRACE_VERSION):
        raise TraceFormatError(f"unsupported trace version {head[1]}")
    meta = dict(tok.split("=", 1) for tok in head[2:])
    if meta.get("codec") != codec.name:
        raise TraceFormatError(f"trace codec {meta.get('codec')!r} does not match {codec.name!r}")
    trace = Trace(terminated=meta.get("terminated") == "1", total_rounds=int(meta.get("total", 0)))
    storages: Optional[list] = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            if line.startswith("init "):
                storages = [codec.loads(tok) for tok in line.split()[1:]]
                continue
            left, _, right = line.partition("|")
            _, rnd, loc, entry, mem, tag, move = left.split()
            if storages is None:
                raise TraceFormatError("record before init line")
            for tok in right.split():
                i, val = tok.split("=", 1)
                storages[int(i)] = codec.loads(val)
        except (ValueError, IndexError) as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        trace.configs.append(Configuration(tuple(storages), int(mem), int(entry), int(loc)))
        trace.rounds.append(int(rnd))
        trace.tags.append(None if tag == "-" else tag)
        trace.moves.append(None if move == "-" else int(move))
    return trace
