"""Runtime syntax of the multicore transition system: pure data, no stepping.

Everything here is an immutable value; states can be freely shared, hashed
and used as set/dict keys.  Equality of configurations compares per-core
event logs (the global history field keeps the emission interleaving for
display, but two configurations that differ only in how independent cores'
events interleave are the same state).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Union

from ..errors import MalformedCacheIdError


class Status(Enum):
    MO = "Mo"
    SH = "Sh"
    IN = "In"

    def __repr__(self) -> str:
        return self.value

    def __str__(self) -> str:
        return self.value


Address = int
CoreId = str


@dataclass(frozen=True, order=True)
class CacheId:
    core: CoreId
    level: int

    def __str__(self) -> str:
        return f"{self.core}.L{self.level}"


# --- runtime statements executed by cores -------------------------------

@dataclass(frozen=True)
class Read:
    addr: Address

    def __str__(self) -> str:
        return f"R {self.addr}"


@dataclass(frozen=True)
class ReadBl:
    addr: Address

    def __str__(self) -> str:
        return f"Rb {self.addr}"


@dataclass(frozen=True)
class Write:
    addr: Address

    def __str__(self) -> str:
        return f"W {self.addr}"


@dataclass(frozen=True)
class WriteBl:
    addr: Address

    def __str__(self) -> str:
        return f"Wb {self.addr}"


RuntimeStmt = Union[Read, ReadBl, Write, WriteBl]

#: blocking markers only ever appear at the head of a task
BLOCKED_FORMS = (ReadBl, WriteBl)


# --- data instructions executed by caches -------------------------------

@dataclass(frozen=True)
class Fetch:
    addr: Address

    def __str__(self) -> str:
        return f"Fetch({self.addr})"


@dataclass(frozen=True)
class FetchB:
    """Blocked fetch: wait until the block can actually be installed."""

    addr: Address

    def __str__(self) -> str:
        return f"FetchB({self.addr})"


@dataclass(frozen=True)
class FetchW:
    """Fetch of ``addr`` waiting for ``pending`` to stop being modified."""

    addr: Address
    pending: Address

    def __post_init__(self) -> None:
        if self.addr == self.pending:
            raise ValueError("FetchW requires two distinct addresses")

    def __str__(self) -> str:
        return f"FetchW({self.addr},{self.pending})"


@dataclass(frozen=True)
class Flush:
    addr: Address

    def __str__(self) -> str:
        return f"Flush({self.addr})"


DataInstr = Union[Fetch, FetchB, FetchW, Flush]

_INSTR_ORDER = {Fetch: 0, FetchB: 1, FetchW: 2, Flush: 3}


def _instr_key(instr: DataInstr) -> tuple:
    return (_INSTR_ORDER[type(instr)], instr.addr,
            instr.pending if isinstance(instr, FetchW) else -1)


@dataclass(frozen=True)
class DstMultiset:
    """Multiset of pending data instructions, stored sorted for determinism."""

    instrs: tuple[DataInstr, ...] = ()

    @staticmethod
    def of(items: Iterable[DataInstr]) -> "DstMultiset":
        return DstMultiset(tuple(sorted(items, key=_instr_key)))

    def with_added(self, *items: DataInstr) -> "DstMultiset":
        return DstMultiset.of(self.instrs + tuple(items))

    def with_removed(self, item: DataInstr) -> "DstMultiset":
        """Remove one occurrence of ``item``; error if absent."""
        out = list(self.instrs)
        out.remove(item)  # raises ValueError if not present
        return DstMultiset(tuple(out))

    def count(self, item: DataInstr) -> int:
        return self.instrs.count(item)

    def __contains__(self, item: DataInstr) -> bool:
        return item in self.instrs

    def __iter__(self):
        return iter(self.instrs)

    def __len__(self) -> int:
        return len(self.instrs)

    def __str__(self) -> str:
        return "{" + ", ".join(str(i) for i in self.instrs) + "}"


# --- memories ------------------------------------------------------------

@dataclass(frozen=True)
class MemoryMap:
    """Finite map Address -> Status; absence of a key encodes "not resident".

    ``capacity`` bounds how many blocks fit (for main memory it equals the
    address-space size).  The map itself does not enforce the placement
    policy; ``slot_violations`` reports collisions so property tests can
    check the direct-mapped invariant over reachable states.
    """

    entries: tuple[tuple[Address, Status], ...]
    capacity: int

    @staticmethod
    def of(mapping: Mapping[Address, Status], capacity: int) -> "MemoryMap":
        return MemoryMap(tuple(sorted(mapping.items())), capacity)

    def get(self, addr: Address) -> Optional[Status]:
        for a, s in self.entries:
            if a == addr:
                return s
        return None

    def as_dict(self) -> dict[Address, Status]:
        return dict(self.entries)

    def resident(self) -> tuple[Address, ...]:
        return tuple(a for a, _ in self.entries)

    def __contains__(self, addr: Address) -> bool:
        return self.get(addr) is not None

    def with_set(self, addr: Address, status: Status) -> "MemoryMap":
        d = self.as_dict()
        d[addr] = status
        return MemoryMap.of(d, self.capacity)

    def without(self, addr: Address) -> "MemoryMap":
        d = self.as_dict()
        d.pop(addr, None)
        return MemoryMap.of(d, self.capacity)

    def slot_violations(self) -> list[str]:
        problems = []
        if len(self.entries) > self.capacity:
            problems.append(
                f"{len(self.entries)} resident blocks exceed capacity {self.capacity}")
        slots: dict[int, list[Address]] = {}
        for a, _ in self.entries:
            slots.setdefault(a % self.capacity, []).append(a)
        for slot, addrs in sorted(slots.items()):
            if len(addrs) > 1:
                problems.append(f"slot {slot} shared by addresses {addrs}")
        return problems

    def __str__(self) -> str:
        return "{" + ", ".join(f"{a}:{s}" for a, s in self.entries) + "}"


# --- events ---------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    kind: str  # "R" or "W"
    core: CoreId
    addr: Address

    def __post_init__(self) -> None:
        if self.kind not in ("R", "W"):
            raise ValueError(f"event kind must be R or W, got {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.kind}({self.core},{self.addr})"


EventLog = tuple[Event, ...]


# --- composite states ------------------------------------------------------

@dataclass(frozen=True)
class CoreState:
    id: CoreId
    task: tuple[RuntimeStmt, ...]
    log: EventLog = ()

    def __str__(self) -> str:
        task = "[" + ", ".join(str(s) for s in self.task) + "]"
        log = "[" + ", ".join(str(e) for e in self.log) + "]"
        return f"{self.id} {task} : {log}"


@dataclass(frozen=True)
class CacheState:
    id: CacheId
    memory: MemoryMap
    dst: DstMultiset = DstMultiset()

    def __str__(self) -> str:
        return f"{self.id} {self.memory} {self.dst}"


@dataclass(frozen=True, eq=False)
class Configuration:
    """Full state: cores, caches, main memory and the event history.

    ``history`` is the global append order; equality and hashing ignore its
    interleaving and compare the per-core logs instead (no rule ever reads
    the global order, so states differing only there behave identically).
    """

    cores: tuple[CoreState, ...]
    caches: tuple[CacheState, ...]
    main: MemoryMap
    history: EventLog = ()

    @staticmethod
    def of(cores: Iterable[CoreState], caches: Iterable[CacheState],
           main: MemoryMap, history: EventLog = ()) -> "Configuration":
        return Configuration(
            tuple(sorted(cores, key=lambda c: c.id)),
            tuple(sorted(caches, key=lambda c: (c.id.core, c.id.level))),
            main, history)

    def canonical_key(self) -> tuple:
        return (self.cores, self.caches, self.main)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())

    # lookup helpers -------------------------------------------------------

    def core(self, core_id: CoreId) -> CoreState:
        for c in self.cores:
            if c.id == core_id:
                return c
        raise KeyError(core_id)

    def cache(self, cid: CacheId) -> CacheState:
        for c in self.caches:
            if c.id == cid:
                return c
        raise KeyError(str(cid))

    def levels(self) -> int:
        return max((c.id.level for c in self.caches), default=0)

    def replace(self, cores: Mapping[CoreId, CoreState] = {},
                caches: Mapping[CacheId, CacheState] = {},
                main: Optional[MemoryMap] = None,
                history: Optional[EventLog] = None) -> "Configuration":
        """Rebuild with the given components swapped out (frame rule)."""
        new_cores = tuple(cores.get(c.id, c) for c in self.cores)
        new_caches = tuple(caches.get(c.id, c) for c in self.caches)
        return Configuration(new_cores, new_caches,
                             self.main if main is None else main,
                             self.history if history is None else history)

    def render(self) -> str:
        """Canonical one-line text form, deterministic for a given state."""
        cores = " | ".join(str(c) for c in self.cores)
        caches = " | ".join(str(c) for c in self.caches)
        hist = "[" + ", ".join(str(e) for e in self.history) + "]"
        return f"<{cores} || {caches} || M {self.main}> : {hist}"


# --- auxiliary functions ----------------------------------------------------

def cache_position(cid: CacheId, levels: int) -> tuple[CoreId, int, bool, bool]:
    """Return (core id, level, is_first, is_last) for a cache identifier."""
    if not 1 <= cid.level <= levels:
        raise MalformedCacheIdError(
            f"cache level {cid.level} outside hierarchy 1..{levels}")
    return (cid.core, cid.level, cid.level == 1, cid.level == levels)


def status_of(memory: MemoryMap, addr: Address) -> Optional[Status]:
    """Status of ``addr`` in ``memory``, or None when not resident."""
    return memory.get(addr)


PlacementPolicy = Callable[[Mapping[Address, Status], int, Address], Address]


def direct_mapped(entries: Mapping[Address, Status], capacity: int,
                  addr: Address) -> Address:
    """Direct-mapped placement: slot = addr mod capacity.

    Returns ``addr`` itself when the slot is free (or held by ``addr``),
    signalling free space; otherwise returns the eviction victim.  With
    several occupants of one slot (possible only if the slot invariant was
    already broken) the smallest occupant is the victim, deterministically.
    """
    slot = addr % capacity
    occupants = sorted(a for a in entries if a % capacity == slot)
    if not occupants or addr in occupants:
        return addr
    return occupants[0]


PLACEMENT_POLICIES: dict[str, PlacementPolicy] = {
    "direct": direct_mapped,
}


def select(memory: MemoryMap, addr: Address,
           policy: PlacementPolicy = direct_mapped) -> Address:
    """Where should ``addr`` be placed in ``memory``?

    Result equals ``addr`` when there is room, else the victim to evict.
    """
    return policy(memory.as_dict(), memory.capacity, addr)
