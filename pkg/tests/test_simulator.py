import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from agentsim.agent import Algorithm, PhiRangeError, dump_trace, execute, gamma_apply, load_trace, verify_simulation
from agentsim.algolib import TransitionTable, flip_flop_messenger, random_table
from agentsim.port_graph import complete_graph, generate_cycle
from agentsim.simulator import (
    CLEAN_UP,
    DFS,
    LOCAL_COMP_DFS,
    MOVE_RESET,
    MUTATIONS,
    SIM_CODEC,
    SIM_GAMMA,
    TRANS_MEM,
    SimNodeStorage,
    StorageLayout,
    UndecodableStorage,
    UnreachableState,
    clean_up,
    dfs_step,
    initial_storage,
    is_legal,
    local_comp,
    move_reset,
    overhead_bound,
    phase_of,
    run_simulator,
    simulator_algorithm,
    simulator_transition,
    trans_mem,
)
from agentsim.agent import initial_configuration


def const_mem_one(degree, entry, storage, mem):
    return 0, storage, 1


def sim_c3(a_star, sim_rounds):
    return run_simulator(generate_cycle(3), a_star, sim_rounds, 0)


def test_initial_storage_matches_table_values():
    a = Algorithm(1, 0, 1, 0, const_mem_one, storage_width=1)
    s = initial_storage(a, True)
    assert (s.sloc, s.svars, s.smem) == (1, 1, 1)
    u = initial_storage(a, False)
    assert (u.sloc, u.svars, u.dfsstat, u.sim, u.smemupd, u.cld) == (0, 0, 0, 0, 0, 0)


def test_initial_configuration_is_legal_for_every_start():
    g = complete_graph(5)
    for v in range(5):
        c = initial_configuration(g, simulator_algorithm(flip_flop_messenger(), v))
        assert is_legal(c)
        moved = list(c.storages)
        w = (v + 1) % 5
        moved[v] = dataclasses.replace(moved[v], sloc=0)
        moved[w] = dataclasses.replace(moved[w], sloc=1)
        assert not is_legal(dataclasses.replace(c, storages=tuple(moved)))
        busy = list(c.storages)
        busy[w] = dataclasses.replace(busy[w], dfsstat=2)
        assert not is_legal(dataclasses.replace(c, storages=tuple(busy)))


def test_initial_gamma_view():
    g = generate_cycle(4)
    a = Algorithm(1, 0, 1, 2, const_mem_one, storage_width=1)
    c = initial_configuration(g, simulator_algorithm(a))
    assert gamma_apply(c, SIM_GAMMA) == ((0, 0, 1, 0), (1, -1), 2)
    assert gamma_apply(dataclasses.replace(c, mem=1), SIM_GAMMA) == gamma_apply(c, SIM_GAMMA)


def test_dispatch_branches():
    legal_s = SimNodeStorage(sloc=1, spin=-1)
    assert phase_of(2, -1, legal_s) == LOCAL_COMP_DFS
    out, st_ = simulator_transition(2, -1, legal_s, lambda d, p, s, m: (1, s, m))
    assert out == 1 and st_.dfsstat == 1 and st_.spout == 1
    upd = SimNodeStorage(smemupd=1, dfsstat=2, sim=1, par=1)
    assert phase_of(2, 0, upd) == MOVE_RESET
    assert simulator_transition(2, 0, upd, None) == move_reset(0, upd)
    back = SimNodeStorage(dfsstat=1, par=1)
    assert phase_of(3, 1, back) == CLEAN_UP
    assert phase_of(3, 2, back) == DFS
    assert phase_of(3, 0, SimNodeStorage(sim=1)) == TRANS_MEM


def test_unreachable_fields_are_rejected():
    with pytest.raises(UnreachableState):
        simulator_transition(2, 0, SimNodeStorage(dfsstat=3), None)
    with pytest.raises(UndecodableStorage):
        simulator_transition(2, 0, 7, None)


def test_local_comp_evaluates_the_simulated_table():
    table = TransitionTable.from_callback(lambda d, p, s, m: ((p + 1) % d, s, m), 1, 2)
    st_ = local_comp(2, SimNodeStorage(sloc=1, spin=-1, svars=1), table)
    assert st_.spout == table(2, -1, 1, 0)[0] == 0
    with pytest.raises(PhiRangeError):
        local_comp(2, SimNodeStorage(sloc=1), lambda d, p, s, m: (5, s, m))


def test_local_comp_termination_ends_legal_and_matches_oracle():
    g = generate_cycle(5)
    a = Algorithm(0, 0, 0, 1, lambda d, p, s, m: (-1, 1, 1) if s == 1 else (0, 1, 0), storage_width=1)
    oracle = execute(g, a, 50)
    assert oracle.terminated
    sim = run_simulator(g, a, 50, 1)
    assert sim.terminated and is_legal(sim.configs[-1])
    assert gamma_apply(sim.configs[-1], SIM_GAMMA) == gamma_apply(oracle.configs[-1], None)


def test_dfs_step_on_triangle():
    out, s = dfs_step(2, -1, SimNodeStorage(sloc=1, spout=0))
    assert (out, s.dfsstat, s.cld) == (0, 1, 0)
    out, u = dfs_step(2, 1, SimNodeStorage())
    assert (u.par, u.cld, out) == (1, 0, 0)
    assert generate_cycle(3).port(1, out) == 2
    out, w = dfs_step(3, 2, SimNodeStorage(dfsstat=1, par=0, cld=2))
    assert (out, w.dfsstat, w.cld) == (0, 2, 3)


def test_dfs_forward_skips_parent_port_zero():
    out, u = dfs_step(3, 0, SimNodeStorage())
    assert (u.par, u.cld, out) == (0, 1, 1)
    out, u = dfs_step(3, 0, SimNodeStorage(), frozenset({"dfs-no-parent-skip"}))
    assert out == 0


def test_clean_up_on_triangle_run():
    tr = sim_c3(flip_flop_messenger(), 1)
    k = next(i for i, (c, tag) in enumerate(zip(tr.configs, tr.tags)) if tag == CLEAN_UP and c.location == 0)
    c = tr.configs[k]
    assert c.entry_port == 1
    before = c.storages[0]
    assert (before.dfsstat, before.sloc) == (1, 1)
    out, after = clean_up(2, c.entry_port, before)
    assert (after.par, after.dfsstat, after.sim) == (1, 0, 1)
    assert out == after.cld == 0


def test_clean_up_single_visit_and_last_visit():
    out, u = clean_up(3, 1, SimNodeStorage(dfsstat=1, par=1, lastin=1, lastout=0))
    assert (u.dfsstat, u.sim, out) == (0, 1, 0)
    out, u = clean_up(2, 1, SimNodeStorage(dfsstat=2, sim=1, par=0, cld=1, lastin=1, lastout=0))
    assert (u.dfsstat, u.sim, out) == (0, 0, 0)


def test_trans_mem_branches():
    out, s = trans_mem(-1, SimNodeStorage(sloc=1, smem=0, cld=1, par=0))
    assert (s.smemupd, out) == (1, 1)
    out, s = trans_mem(-1, SimNodeStorage(sloc=1, smem=1, cld=1, par=0))
    assert out == 0
    out, u = trans_mem(1, SimNodeStorage(sim=1, smem=1, par=1, cld=0))
    assert (u.smem, u.smemupd, out) == (0, 1, 0)
    out, u = trans_mem(0, SimNodeStorage(sim=1, smem=0, par=1, cld=0))
    assert (u.smem, u.smemupd, out) == (1, 1, 1)


def test_trans_mem_spreads_one_around_triangle():
    a = Algorithm(0, 0, 0, 0, const_mem_one, storage_width=1)
    tr = sim_c3(a, 1)
    k = next(i for i, c in enumerate(tr.configs) if c.location == 0 and c.storages[0].smemupd == 1)
    assert [st_.smem for st_ in tr.configs[k].storages] == [1, 1, 1]
    assert [tr.tags[i] for i in range(k - 3, k)] == [TRANS_MEM] * 3


def test_move_reset_branches():
    out, s = move_reset(1, SimNodeStorage(sloc=1, smemupd=1, spout=1))
    assert (s.sloc, out) == (0, 1)
    out, t = move_reset(1, SimNodeStorage(smemupd=1, sim=1, par=1))
    assert (t.sloc, t.spin, t.sim, t.smemupd, out) == (1, 1, 0, 0, 1)


def test_flip_flop_triangle_fifty_rounds():
    g = generate_cycle(3)
    a = flip_flop_messenger()
    sim = run_simulator(g, a, 50, 0)
    v = verify_simulation(sim, execute(g, a, 50), SIM_GAMMA, is_legal)
    assert v.ok and len(v.t_sequence) >= 51


def test_first_simulated_round_matches_oracle_step():
    g = generate_cycle(3)
    a = flip_flop_messenger()
    sim = run_simulator(g, a, 1, 0)
    assert is_legal(sim.configs[-1])
    assert gamma_apply(sim.configs[-1], SIM_GAMMA) == gamma_apply(execute(g, a, 1).configs[1], None)


def test_corrupted_svars_is_caught():
    g = generate_cycle(5, "scrambled", 1)
    a = flip_flop_messenger()
    sim = run_simulator(g, a, 10, 0)
    legal = [i for i, c in enumerate(sim.configs) if is_legal(c)]
    k = legal[4]
    c = sim.configs[k]
    bad = list(c.storages)
    bad[2] = dataclasses.replace(bad[2], svars=bad[2].svars ^ 1)
    sim.configs[k] = dataclasses.replace(c, storages=tuple(bad))
    v = verify_simulation(sim, execute(g, a, 10), SIM_GAMMA, is_legal)
    assert not v.ok and v.first_divergence[0] == 4


def test_unknown_mutation_rejected():
    with pytest.raises(ValueError):
        simulator_algorithm(flip_flop_messenger(), 0, ["nope"])
    assert len(MUTATIONS) == 3


def test_storage_layout_arithmetic():
    lay = StorageLayout(max_degree=3, svars_width=2)
    assert lay.port_width == 3
    assert lay.total_bits == 2 + 6 + 6 * 3


@given(
    st.integers(2, 40),
    st.integers(0, 6),
    st.data(),
)
@settings(max_examples=200, deadline=None)
def test_layout_encode_decode_round_trip(delta, width, data):
    port = st.integers(-1, delta + 1)
    bit = st.integers(0, 1)
    s = SimNodeStorage(
        sloc=data.draw(bit), smem=data.draw(bit), smemupd=data.draw(bit), spin=data.draw(st.integers(-1, delta - 1)),
        spout=data.draw(st.integers(-1, delta - 1)), svars=data.draw(st.integers(0, (1 << width) - 1)),
        dfsstat=data.draw(st.integers(0, 2)), par=data.draw(port), cld=data.draw(port), sim=data.draw(bit),
        lastin=data.draw(port), lastout=data.draw(port),
    )
    lay = StorageLayout(delta, width)
    word = lay.encode(s)
    assert word.bit_length() <= lay.total_bits
    assert lay.decode(word) == s


def test_layout_rejects_oversized_words():
    lay = StorageLayout(2, 1)
    with pytest.raises(UndecodableStorage):
        lay.decode(1 << lay.total_bits)
    with pytest.raises(ValueError):
        lay.encode(SimNodeStorage(svars=2))


def test_simulator_trace_round_trip():
    g = complete_graph(4)
    sim = run_simulator(g, random_table(4, 2, 3), 8, 2)
    back = load_trace(dump_trace(sim, SIM_CODEC), SIM_CODEC)
    assert back.configs == sim.configs and back.tags == sim.tags


def test_checkpoint_mode_keeps_legal_configurations():
    g = generate_cycle(6)
    a = flip_flop_messenger()
    full = run_simulator(g, a, 5, 0)
    cp = run_simulator(g, a, 5, 0, checkpoint=True)
    assert cp.configs == [c for c in full.configs if is_legal(c)]


def test_cycle_overhead_grows_linearly():
    gaps = []
    for n in range(4, 13):
        tr = run_simulator(generate_cycle(n), flip_flop_messenger(), 3, 0)
        legal = [r for r, c in zip(tr.rounds, tr.configs) if is_legal(c)]
        gap = max(b - a for a, b in zip(legal, legal[1:]))
        assert gap <= overhead_bound(generate_cycle(n))
        gaps.append(gap)
    diffs = {b - a for a, b in zip(gaps, gaps[1:])}
    assert len(diffs) == 1 and diffs.pop() > 0
