"""Mobile agents on anonymous port-numbered graphs, with an oblivious simulator
of one-bit-memory agents and the checks that validate it."""

from .agent import (
    Algorithm,
    Configuration,
    GammaMapping,
    OneBitAlgorithm,
    Trace,
    Verdict,
    dump_trace,
    execute,
    follows,
    gamma_apply,
    initial_configuration,
    load_trace,
    step,
    verify_simulation,
)
from .algolib import (
    TransitionTable,
    flip_flop_messenger,
    load_table,
    one_bit_explorer,
    random_table,
    save_table,
)
from .oracle import brute_bridges, centralized_dfs, check_phase_resultants, lastinout_claim_check
from .port_graph import (
    PortGraph,
    build_graph,
    complete_graph,
    find_bridges,
    generate_cycle,
    generate_random_2ec,
    is_two_edge_connected,
    petersen_graph,
    read_graph,
    to_dot,
    write_graph,
)
from .simulator import SIM_GAMMA, SimNodeStorage, StorageLayout, is_legal, overhead_bound, run_simulator, simulator_algorithm
from .verify import VerifyResult, fuzz, verify_instance

__all__ = [name for name in dir() if not name.startswith("_")]
