"""One-bit agent algorithms to simulate, plus a finite transition-table format."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .agent import Algorithm, TransitionFunction

TABLE_MAGIC = "agentsim-table"
TABLE_VERSION = 1
MAX_TABLE_WIDTH = 8


class TableError(ValueError):
    pass


class ParseError(TableError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class VersionMismatch(TableError):
    pass


class MissingRow(KeyError):
    pass


@dataclass
class TransitionTable:
    """Finite transition function keyed by ``(degree, entry_port, storage, mem)``.

    ``default`` decides what happens on an unkeyed input: ``"error"`` raises
    :class:`MissingRow`, ``"stay"`` terminates keeping storage and memory.
    """

    storage_width: int
    max_degree: int
    rows: dict[tuple[int, int, int, int], tuple[int, int, int]] = field(default_factory=dict)
    default: str = "error"

    def __call__(self, degree: int, entry_port: int, storage: int, mem: int) -> tuple[int, int, int]:
        try:
            return self.rows[(degree, entry_port, storage, mem)]
        except KeyError:
            if self.default == "stay":
                return -1, storage, mem
            raise MissingRow((degree, entry_port, storage, mem)) from None

    def domain(self):
        for deg in range(1, self.max_degree + 1):
            for p in range(-1, deg):
                for st in range(1 << self.storage_width):
                    for m in (0, 1):
                        yield (deg, p, st, m)

    def is_total(self) -> bool:
        return all(key in self.rows for key in self.domain())

    def validate(self) -> None:
        for (deg, p, st, m), (out, st2, m2) in self.rows.items():
            if not -1 <= out < deg:
                raise TableError(f"row {(deg, p, st, m)}: out port {out} outside [-1, {deg - 1}]")
            if st2 >> self.storage_width or st >> self.storage_width:
                raise TableError(f"row {(deg, p, st, m)}: storage wider than {self.storage_width} bits")
            if m2 not in (0, 1) or m not in (0, 1):
                raise TableError(f"row {(deg, p, st, m)}: memory must be a bit")

    @classmethod
    def from_callback(cls, phi: TransitionFunction, storage_width: int, max_degree: int) -> "TransitionTable":
        table = cls(storage_width, max_degree)
        for key in table.domain():
            table.rows[key] = tuple(phi(*key))
        return table


# --- built-in algorithms ---------------------------------------------------


def _flip_flop(degree, entry_port, storage, mem):
    if mem == 0:
        return 0, storage, storage
    return 1, storage ^ 1, storage


def flip_flop_messenger(init_mem: int = 0, init_storage: int = 0, init_storage_start: int = 1) -> Algorithm:
    """Bit-ferrying walker with one storage bit per node.

    With memory 0 the agent leaves by port 0 and picks up the node's bit; with
    memory 1 it leaves by port 1, flips the node's bit and picks up the old
    value.  Needs degree >= 2 everywhere and never terminates.
    """
    return Algorithm(init_mem, init_storage, init_storage_start, 0, _flip_flop, storage_width=1, name="flip_flop")


# explorer storage: bit 0 visited, 8 bits parent port (+1), 8 bits probe port
_PORT_MASK = 0xFF


def _pack(visited, par, cld):
    return visited | ((par + 1) << 1) | (cld << 9)


def _unpack(st):
    return st & 1, ((st >> 1) & _PORT_MASK) - 1, (st >> 9) & _PORT_MASK


def _next_port(p, par, degree):
    p += 1
    if p == par:
        p += 1
    return p


def _explorer(degree, entry_port, storage, mem):
    visited, par, cld = _unpack(storage)
    if not visited:
        par = entry_port
        cld = _next_port(-1, par, degree)
        if cld < degree:
            return cld, _pack(1, par, cld), 0
        return par, _pack(1, par, degree), 1
    if mem == 0:
        # probed an already explored node: go back
        return entry_port, storage, 1
    cld = _next_port(cld, par, degree)
    if cld < degree:
        return cld, _pack(1, par, cld), 0
    if par == -1:
        # root exhausted: sweep its ports again
        cld = _next_port(-1, par, degree)
        return cld, _pack(1, par, cld), 0
    return par, _pack(1, par, degree), 1


def one_bit_explorer() -> Algorithm:
    """Depth-first explorer keeping parent and probe ports in node storage.

    The memory bit says whether the agent is probing forward (0) or returning
    (1).  Degrees up to 254 are supported; after the root has probed every
    port it starts over, so the walk never terminates.
    """
    return Algorithm(0, 0, 0, 0, _explorer, storage_width=17, name="explorer")


def random_table(seed: int, storage_width: int = 2, max_degree: int = 4) -> Algorithm:
    """Uniformly random total table; each row terminates with probability 1/16."""
    if not 0 <= storage_width <= MAX_TABLE_WIDTH:
        raise TableError(f"table storage width must be in [0, {MAX_TABLE_WIDTH}]")
    rng = random.Random(seed)
    table = TransitionTable(storage_width, max_degree)
    top = 1 << storage_width
    for key in table.domain():
        deg = key[0]
        out = -1 if rng.randrange(16) == 0 else rng.randrange(deg)
        table.rows[key] = (out, rng.randrange(top), rng.randrange(2))
    m, M, M_start = rng.randrange(2), rng.randrange(top), rng.randrange(top)
    return Algorithm(m, M, M_start, 0, table, storage_width=storage_width, name=f"random:{seed}:{storage_width}:{max_degree}")


BUILTINS = {"flip_flop": flip_flop_messenger, "explorer": one_bit_explorer}


def resolve(algo_arg: str, max_degree: Optional[int] = None) -> Algorithm:
    """Algorithm from a CLI argument: a builtin name, ``random:SEED[:WIDTH[:MAXDEG]]``, or a table file."""
    if algo_arg in BUILTINS:
        return BUILTINS[algo_arg]()
    if algo_arg.startswith("random:"):
        parts = algo_arg.split(":")[1:]
        seed = int(parts[0])
        width = int(parts[1]) if len(parts) > 1 else 2
        deg = int(parts[2]) if len(parts) > 2 else (max_degree or 4)
        return random_table(seed, width, deg)
    return load_table(algo_arg)


# --- table files -----------------------------------------------------------


def format_table(a: Algorithm) -> str:
    table = a.phi
    if not isinstance(table, TransitionTable):
        raise TableError("only table-backed algorithms can be saved")
    digits = max(1, (table.storage_width + 3) // 4)
    head = (
        f"{TABLE_MAGIC} v{TABLE_VERSION} width={table.storage_width} max_degree={table.max_degree} "
        f"default={table.default} init_mem={a.init_mem} init_storage={a.init_storage:x} "
        f"init_storage_start={a.init_storage_start:x} name={a.name}"
    )
    lines = [head]
    for (deg, p, st, m), (out, st2, m2) in sorted(table.rows.items()):
        lines.append(f"{deg} {p} {st:0{digits}x} {m} -> {out} {st2:0{digits}x} {m2}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> Algorithm:
    lines = text.splitlines()
    header = None
    rows = {}
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            toks = line.split()
            if toks[0] != TABLE_MAGIC or len(toks) < 2 or not toks[1].startswith("v"):
                raise ParseError(lineno, "missing table header")
            if toks[1] != f"v{TABLE_VERSION}":
                raise VersionMismatch(f"table version {toks[1]}, expected v{TABLE_VERSION}")
            try:
                meta = dict(tok.split("=", 1) for tok in toks[2:])
            except ValueError:
                raise ParseError(lineno, "malformed header field") from None
            header = lineno
            continue
        toks = line.split()
        if len(toks) != 8 or toks[4] != "->":
            raise ParseError(lineno, f"expected 'deg port storage mem -> out storage mem', got {line!r}")
        try:
            key = (int(toks[0]), int(toks[1]), int(toks[2], 16), int(toks[3]))
            val = (int(toks[5]), int(toks[6], 16), int(toks[7]))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        if key in rows:
            raise ParseError(lineno, f"duplicate row {key}")
        rows[key] = val
    if header is None:
        raise ParseError(len(lines), "missing table header")
    try:
        table = TransitionTable(int(meta["width"]), int(meta["max_degree"]), rows, meta.get("default", "error"))
        alg = Algorithm(
            int(meta.get("init_mem", "0")),
            int(meta.get("init_storage", "0"), 16),
            int(meta.get("init_storage_start", "0"), 16),
            0,
            table,
            storage_width=table.storage_width,
            name=meta.get("name", "table"),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(header, f"bad header: {exc}") from None
    if table.default == "error" and not table.is_total():
        missing = next(k for k in table.domain() if k not in rows)
        raise ParseError(len(lines), f"table truncated: no row for {missing}")
    try:
        table.validate()
    except TableError as exc:
        raise ParseError(header, str(exc)) from None
    return alg


def save_table(a: Algorithm, path: str | Path) -> None:
    Path(path).write_text(format_table(a))


def load_table(path: str | Path) -> Algorithm:
    return parse_table(Path(path).read_text())
