"""Oblivious simulation of a one-bit agent on a 2-edge-connected graph.

The simulator agent carries no memory.  Everything it needs lives in a
per-node :class:`SimNodeStorage`; the phase it is in is recomputed at every
node from that storage and the entry port alone.

One simulated round runs five phases:

* LocalComp: evaluate the simulated transition at ``s`` (the node with ``sloc=1``).
* DFS: search from ``s`` with ``(s, t)`` as the first edge until ``s`` is re-entered;
  the tree path from ``s`` to the last node before ``s`` closes a cycle through
  ``(s, t)``, the information transfer cycle (ITC).
* CleanUp: replay the same search, erasing DFS state everywhere except the
  ITC, which is marked ``sim=1`` and oriented by ``par`` / ``cld``.
* TransMem: walk the ITC in the direction selected by the simulated memory
  bit; every node infers the bit from the port it was entered by.
* MoveReset: hand ``sloc`` to ``t`` and walk the ITC once more to clear it.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from functools import partial
from typing import Any, Iterable, Optional

from .agent import (
    Algorithm,
    Configuration,
    GammaMapping,
    PhiRangeError,
    StorageCodec,
    TransitionFunction,
    execute,
)
from .port_graph import PortGraph


class UnreachableState(RuntimeError):
    """No dispatch branch applies; the storage was corrupted."""


class UndecodableStorage(ValueError):
    pass


LOCAL_COMP = "LocalComp"
DFS = "DFS"
CLEAN_UP = "CleanUp"
TRANS_MEM = "TransMem"
MOVE_RESET = "MoveReset"
LOCAL_COMP_DFS = "LocalComp+DFS"
PHASES = (LOCAL_COMP, DFS, CLEAN_UP, TRANS_MEM, MOVE_RESET)

# Canned faults used to check that verification catches broken simulators.
MUT_NO_PARENT_SKIP = "dfs-no-parent-skip"
MUT_NO_LAST_GUARD = "cleanup-no-guard"
MUT_INVERT_SMEM = "transmem-invert"
MUTATIONS = (MUT_NO_PARENT_SKIP, MUT_NO_LAST_GUARD, MUT_INVERT_SMEM)


@dataclass(slots=True)
class SimNodeStorage:
    sloc: int = 0
    smem: int = 0
    smemupd: int = 0
    spin: int = -1
    spout: int = -1
    svars: Any = 0
    dfsstat: int = 0
    par: int = 0
    cld: int = 0
    sim: int = 0
    lastin: int = -1
    lastout: int = -1

    def copy(self) -> "SimNodeStorage":
        return copy.copy(self)

    @property
    def legal(self) -> bool:
        return self.dfsstat == 0 and self.sim == 0 and self.smemupd == 0


FIELDS = ("sloc", "smem", "smemupd", "spin", "spout", "svars", "dfsstat", "par", "cld", "sim", "lastin", "lastout")


def initial_storage(a_star: Algorithm, is_start: bool) -> SimNodeStorage:
    """Initial values of the bookkeeping fields; values left arbitrary by the model are pinned to -1 / 0."""
    if is_start:
        return SimNodeStorage(sloc=1, smem=a_star.init_mem, svars=a_star.init_storage_start)
    return SimNodeStorage(svars=a_star.init_storage)


# --- phase procedures -----------------------------------------------------
# Each takes the current storage, returns (out_port, new storage) and never
# mutates its argument.


def local_comp(degree: int, st: SimNodeStorage, phi_star: TransitionFunction) -> SimNodeStorage:
    out, svars, smem = phi_star(degree, st.spin, st.svars, st.smem)
    if not -1 <= out < degree:
        raise PhiRangeError(f"simulated transition returned port {out} at a node of degree {degree}")
    st = st.copy()
    st.spout, st.svars, st.smem = out, svars, smem
    return st


def dfs_step(degree: int, p_in: int, st: SimNodeStorage, mutations: frozenset = frozenset()) -> tuple[int, SimNodeStorage]:
    skip = MUT_NO_PARENT_SKIP not in mutations
    st = st.copy()
    st.lastin = p_in
    if st.sloc == 1:
        st.dfsstat, st.cld, st.lastout = 1, st.spout, st.spout
    elif st.dfsstat == 0:
        # visiting by forward
        st.dfsstat, st.par = 1, p_in
        if skip and st.par == 0:
            st.cld, st.lastout = 1, 1
        else:
            st.cld, st.lastout = 0, 0
    elif st.dfsstat == 1 and p_in == st.cld:
        # visiting by backtrack
        if skip and st.par == p_in + 1:
            st.cld = p_in + 2
        else:
            st.cld = p_in + 1
        if st.cld < degree:
            st.lastout = st.cld
        else:
            st.lastout, st.dfsstat = st.par, 2
    else:
        # invoking backtrack
        st.lastout = p_in
    return st.lastout, st


def clean_up(degree: int, p_in: int, st: SimNodeStorage, mutations: frozenset = frozenset()) -> tuple[int, SimNodeStorage]:
    guard = MUT_NO_LAST_GUARD not in mutations
    st = st.copy()
    if st.sim == 0:
        if st.dfsstat == 1 and st.sloc == 1:
            st.par, st.dfsstat, st.sim = p_in, 0, 1
            return st.cld, st
        st.sim = 1
        st.cld = 1 if st.par == 0 else 0
        if st.dfsstat == 1 and (not guard or (st.lastin, st.lastout) == (p_in, st.cld)):
            st.dfsstat = 0
        return st.cld, st
    if p_in == st.cld:
        # visiting by backtrack
        if st.par == p_in + 1:
            st.cld = st.cld + 2
        else:
            st.cld = st.cld + 1
        if st.dfsstat == 1:
            if not guard or (st.lastin, st.lastout) == (p_in, st.cld):
                st.dfsstat = 0
            return st.cld, st
        if st.cld < degree:
            return st.cld, st
        if not guard or (st.lastin, st.lastout) == (p_in, st.par):
            st.dfsstat, st.sim = 0, 0
        return st.par, st
    # invoking backtrack
    if not guard or (st.lastin, st.lastout) == (p_in, p_in):
        if st.dfsstat == 1:
            st.dfsstat = 0
        else:
            st.dfsstat, st.sim = 0, 0
    return p_in, st


def trans_mem(p_in: int, st: SimNodeStorage, mutations: frozenset = frozenset()) -> tuple[int, SimNodeStorage]:
    st = st.copy()
    st.smemupd = 1
    if st.sloc == 1:
        send_zero = st.smem == 0
        if MUT_INVERT_SMEM in mutations:
            send_zero = not send_zero
        return (st.cld if send_zero else st.par), st
    # receive the transferred value
    if p_in == st.par:
        st.smem = 0
        return st.cld, st
    st.smem = 1
    return st.par, st


def move_reset(p_in: int, st: SimNodeStorage) -> tuple[int, SimNodeStorage]:
    st = st.copy()
    if st.sloc == 1:
        # leave from s
        st.sloc = 0
        return st.spout, st
    if p_in == st.par:
        # reach t
        st.sloc, st.spin, st.sim, st.smemupd = 1, p_in, 0, 0
        return st.par, st
    st.sim, st.smemupd = 0, 0
    return st.par, st


def phase_of(degree: int, p_in: int, st: SimNodeStorage) -> str:
    """Name of the procedure the dispatcher runs for this storage and entry port."""
    if st.smemupd == 1:
        return MOVE_RESET
    if st.dfsstat > 0:
        if st.sim == 1 or p_in == st.par or st.sloc == 1:
            return CLEAN_UP
        return DFS
    if st.sim == 1:
        return TRANS_MEM
    if st.sloc == 1:
        return LOCAL_COMP_DFS
    return DFS


def simulator_transition(
    degree: int,
    p_in: int,
    st: SimNodeStorage,
    phi_star: TransitionFunction,
    mutations: frozenset = frozenset(),
) -> tuple[int, SimNodeStorage]:
    """Dispatch one round of the oblivious simulator."""
    if not isinstance(st, SimNodeStorage):
        raise UndecodableStorage(f"expected SimNodeStorage, got {type(st).__name__}")
    if st.dfsstat not in (0, 1, 2) or st.sim not in (0, 1) or st.smemupd not in (0, 1) or st.sloc not in (0, 1):
        raise UnreachableState(f"no dispatch branch for {st}")
    if st.smemupd == 1:
        return move_reset(p_in, st)
    if st.dfsstat > 0:
        if st.sim == 1 or p_in == st.par or st.sloc == 1:
            return clean_up(degree, p_in, st, mutations)
        return dfs_step(degree, p_in, st, mutations)
    if st.sim == 1:
        return trans_mem(p_in, st, mutations)
    if st.sloc == 1:
        st = local_comp(degree, st, phi_star)
        if st.spout == -1:
            # simulated agent terminated: stay, keep the configuration legal
            return -1, st
    return dfs_step(degree, p_in, st, mutations)


def _oblivious_phi(phi_star, mutations, degree, p_in, st, mem):
    out, st = simulator_transition(degree, p_in, st, phi_star, mutations)
    return out, st, 0


def simulator_algorithm(a_star: Algorithm, start: Optional[int] = None, mutations: Iterable[str] = ()) -> Algorithm:
    """The oblivious simulator of ``a_star`` as an executable zero-memory algorithm."""
    mutations = frozenset(mutations)
    unknown = mutations - set(MUTATIONS)
    if unknown:
        raise ValueError(f"unknown mutations {sorted(unknown)}")
    start = a_star.init_location if start is None else start
    return Algorithm(
        init_mem=0,
        init_storage=initial_storage(a_star, False),
        init_storage_start=initial_storage(a_star, True),
        init_location=start,
        phi=partial(_oblivious_phi, a_star.phi, mutations),
        storage_width=None,
        memory_bits=0,
        name=f"sim[{a_star.name}]" + (f"+{'+'.join(sorted(mutations))}" if mutations else ""),
    )


SIM_GAMMA = GammaMapping(gamma_M=lambda st: st.svars, gamma_A=lambda st: (st.smem, st.spin))


def is_legal(c: Configuration, decode=None) -> bool:
    """Every node has ``(dfsstat, sim, smemupd) = (0, 0, 0)`` and ``sloc`` marks exactly the agent's node."""
    storages = c.storages if decode is None else [decode(x) for x in c.storages]
    loc = c.location
    here = storages[loc]
    if not isinstance(here, SimNodeStorage):
        raise UndecodableStorage(f"expected SimNodeStorage, got {type(here).__name__}")
    if here.sloc != 1 or here.dfsstat or here.sim or here.smemupd:
        return False
    for i, st in enumerate(storages):
        if st.dfsstat or st.sim or st.smemupd:
            return False
        if i != loc and st.sloc:
            return False
    return True


def run_simulator(
    g: PortGraph,
    a_star: Algorithm,
    sim_rounds: int,
    start: Optional[int] = None,
    *,
    mutations: Iterable[str] = (),
    max_rounds: Optional[int] = None,
    checkpoint: bool = False,
):
    """Execute the simulator until ``sim_rounds`` simulated rounds are done.

    Returns the trace.  ``max_rounds`` caps simulator rounds (default: a
    generous multiple of the per-round overhead bound).  In checkpoint mode
    only legal configurations are stored.
    """
    alg = simulator_algorithm(a_star, start, mutations)
    if max_rounds is None:
        max_rounds = 2 * sim_rounds * overhead_bound(g) + 16
    count = [0]

    def until(c):
        if is_legal(c):
            count[0] += 1
        return count[0] >= sim_rounds

    if sim_rounds <= 0:
        until = lambda c: True  # noqa: E731
    return execute(
        g,
        alg,
        max_rounds,
        tagger=phase_of,
        keep=is_legal if checkpoint else None,
        until=until,
    )


def overhead_bound(g: PortGraph) -> int:
    """Per-simulated-round cap on simulator rounds: 8|E| + 2n + 2.

    DFS and CleanUp each replay one search whose trajectory crosses every tree
    edge at most twice and every other edge at most four times; TransMem walks
    the ITC once and MoveReset takes one step plus one more ITC walk.
    """
    return 8 * g.num_edges + 2 * g.n + 2


# --- fixed-width encoding -------------------------------------------------


def _ceil_log2(x: int) -> int:
    return (x - 1).bit_length() if x > 1 else 0


@dataclass(frozen=True)
class StorageLayout:
    """Bit layout of a :class:`SimNodeStorage` for degree bound ``max_degree``."""

    max_degree: int
    svars_width: int

    @property
    def port_width(self) -> int:
        return _ceil_log2(self.max_degree + 1) + 1

    @property
    def widths(self) -> dict[str, int]:
        w = self.port_width
        return {
            "sloc": 1, "smem": 1, "smemupd": 1, "spin": w, "spout": w, "svars": self.svars_width,
            "dfsstat": 2, "par": w, "cld": w, "sim": 1, "lastin": w, "lastout": w,
        }

    @property
    def total_bits(self) -> int:
        return sum(self.widths.values())

    def encode(self, st: SimNodeStorage) -> int:
        word = 0
        shift = 0
        for name, width in self.widths.items():
            value = getattr(st, name)
            if name in ("spin", "spout", "par", "cld", "lastin", "lastout"):
                value += 1
            if not 0 <= value < (1 << width):
                raise ValueError(f"{name}={getattr(st, name)} does not fit in {width} bits")
            word |= value << shift
            shift += width
        return word

    def decode(self, word: int) -> SimNodeStorage:
        if word < 0 or word.bit_length() > self.total_bits:
            raise UndecodableStorage(f"word of {word.bit_length()} bits exceeds layout of {self.total_bits}")
        values = {}
        for name, width in self.widths.items():
            value = word & ((1 << width) - 1)
            word >>= width
            if name in ("spin", "spout", "par", "cld", "lastin", "lastout"):
                value -= 1
            values[name] = value
        if values["dfsstat"] > 2:
            raise UndecodableStorage(f"dfsstat={values['dfsstat']}")
        return SimNodeStorage(**values)


def _dump_sim(st: SimNodeStorage) -> str:
    return ",".join(format(st.svars, "x") if f == "svars" else str(getattr(st, f)) for f in FIELDS)


def _load_sim(text: str) -> SimNodeStorage:
    parts = text.split(",")
    if len(parts) != len(FIELDS):
        raise ValueError(f"expected {len(FIELDS)} fields, got {len(parts)}")
    values = {f: (int(v, 16) if f == "svars" else int(v)) for f, v in zip(FIELDS, parts)}
    return SimNodeStorage(**values)


SIM_CODEC = StorageCodec("sim", _dump_sim, _load_sim)
