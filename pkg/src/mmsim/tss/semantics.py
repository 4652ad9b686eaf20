"""Small-step interpreter for the multicore transition system.

Every rule of the system appears in :class:`RuleName`.  The two broadcast
protocols are exposed as single atomic composite steps (``Synch`` for the
read broadcast a last-level cache emits, ``SynchX`` for the invalidation
broadcast a writing core emits); the distribution rules and the per-receiver
labelled rules never appear as standalone instances because the derivation
is deterministic given the emitter and the address.

The interpreter is a pure function of (configuration, rule instance); the
explorer is externally deterministic for a given start state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from ..errors import RuleNotEnabled
from .core import (Address, CacheId, CacheState, Configuration, CoreId,
                   CoreState, DstMultiset, Event, Fetch, FetchB, FetchW,
                   Flush, MemoryMap, PlacementPolicy, Read, ReadBl, Status,
                   Write, WriteBl, direct_mapped, select, status_of)


class RuleName(Enum):
    PrRd1 = "PrRd1"
    PrRd2 = "PrRd2"
    PrRd3 = "PrRd3"
    PrWr1 = "PrWr1"
    PrWr2 = "PrWr2"
    PrWr3 = "PrWr3"
    PrWr4 = "PrWr4"
    LCHit1 = "LCHit1"
    LCHit2 = "LCHit2"
    LCMiss = "LCMiss"
    LLCMiss = "LLCMiss"
    FetchBl1 = "FetchBl1"
    FetchBl2 = "FetchBl2"
    FetchBl3 = "FetchBl3"
    LCFetchUnblock = "LCFetchUnblock"
    FetchW = "FetchW"
    Flush1 = "Flush1"
    Flush2 = "Flush2"
    InvalidateOneLine = "InvalidateOneLine"
    IgnoreInvalidateOneLine = "IgnoreInvalidateOneLine"
    FlushOneLine = "FlushOneLine"
    IgnoreFlushOneLine = "IgnoreFlushOneLine"
    Synch = "Synch"
    SynchDist = "SynchDist"
    SynchX = "SynchX"
    SynchDistX = "SynchDistX"

    def __repr__(self) -> str:
        return self.value


_RULE_ORDER = {r: i for i, r in enumerate(RuleName)}


@dataclass(frozen=True)
class RuleInstance:
    """A rule plus its variable binding: which core/cache, which address.

    ``aux`` carries the second address some rules bind (the eviction victim
    in LCHit1/FetchBl2/FetchBl3, the awaited block in FetchW).
    """

    rule: RuleName
    subject: Union[CoreId, CacheId]
    addr: Address
    aux: Optional[Address] = None

    def sort_key(self) -> tuple:
        return (_RULE_ORDER[self.rule], str(self.subject), self.addr,
                -1 if self.aux is None else self.aux)

    def __str__(self) -> str:
        aux = f", {self.aux}" if self.aux is not None else ""
        return f"{self.rule.value}({self.subject}, {self.addr}{aux})"


@dataclass(frozen=True)
class ReachReport:
    states: tuple[Configuration, ...]
    terminals: tuple[Configuration, ...]
    truncated: bool
    edges: Optional[tuple[tuple[Configuration, RuleInstance, Configuration], ...]] = None


#: rules whose application appends an R/W event to the history
EVENT_RULES = {RuleName.PrRd1: "R", RuleName.PrWr1: "W", RuleName.SynchX: "W"}


class TssEngine:
    """Rule engine, parametric in the cache placement policy."""

    def __init__(self, policy: PlacementPolicy = direct_mapped):
        self.policy = policy

    # -- enabledness -------------------------------------------------------

    def enabled(self, cf: Configuration) -> list[RuleInstance]:
        """All rule instances whose premises hold, in canonical order."""
        out: list[RuleInstance] = []
        levels = cf.levels()
        for core in cf.cores:
            if core.task:
                out.extend(self._core_rules(cf, core))
        for cache in cf.caches:
            out.extend(self._cache_rules(cf, cache, levels))
        return sorted(set(out), key=RuleInstance.sort_key)

    def _core_rules(self, cf: Configuration, core: CoreState) -> Iterable[RuleInstance]:
        head = core.task[0]
        l1 = cf.cache(CacheId(core.id, 1))
        st = status_of(l1.memory, head.addr)
        n = head.addr
        if isinstance(head, Read):
            if st in (Status.SH, Status.MO):
                yield RuleInstance(RuleName.PrRd1, core.id, n)
            else:
                yield RuleInstance(RuleName.PrRd2, core.id, n)
        elif isinstance(head, ReadBl):
            if st is not None:
                yield RuleInstance(RuleName.PrRd3, core.id, n)
        elif isinstance(head, Write):
            if st is Status.MO:
                yield RuleInstance(RuleName.PrWr1, core.id, n)
            elif st is Status.SH:
                yield RuleInstance(RuleName.SynchX, core.id, n)
            else:
                yield RuleInstance(RuleName.PrWr3, core.id, n)
        elif isinstance(head, WriteBl):
            if st is not None:
                yield RuleInstance(RuleName.PrWr4, core.id, n)

    def _cache_rules(self, cf: Configuration, cache: CacheState,
                     levels: int) -> Iterable[RuleInstance]:
        last = cache.id.level == levels
        nxt = None if last else cf.cache(CacheId(cache.id.core, cache.id.level + 1))
        for instr in sorted(set(cache.dst), key=lambda i: str(i)):
            n = instr.addr
            if isinstance(instr, Fetch):
                if last:
                    yield RuleInstance(RuleName.Synch, cache.id, n)
                else:
                    st_next = status_of(nxt.memory, n)
                    if st_next in (Status.SH, Status.MO):
                        victim = select(cache.memory, n, self.policy)
                        if victim == n:
                            yield RuleInstance(RuleName.LCHit2, cache.id, n)
                        else:
                            yield RuleInstance(RuleName.LCHit1, cache.id, n, victim)
                    else:
                        yield RuleInstance(RuleName.LCMiss, cache.id, n)
            elif isinstance(instr, FetchB):
                if last:
                    victim = select(cache.memory, n, self.policy)
                    if victim != n and status_of(cache.memory, victim) is Status.MO:
                        yield RuleInstance(RuleName.FetchBl3, cache.id, n, victim)
                    elif status_of(cf.main, n) is Status.SH:
                        if victim == n:
                            yield RuleInstance(RuleName.FetchBl1, cache.id, n)
                        else:
                            yield RuleInstance(RuleName.FetchBl2, cache.id, n, victim)
                    # block not yet available in main memory: stay blocked
                elif n in nxt.memory:
                    yield RuleInstance(RuleName.LCFetchUnblock, cache.id, n)
            elif isinstance(instr, FetchW):
                if last and status_of(cache.memory, instr.pending) is not Status.MO:
                    yield RuleInstance(RuleName.FetchW, cache.id, n, instr.pending)
            elif isinstance(instr, Flush):
                if status_of(cache.memory, n) is Status.MO:
                    yield RuleInstance(RuleName.Flush1, cache.id, n)
                else:
                    yield RuleInstance(RuleName.Flush2, cache.id, n)

    # -- application -------------------------------------------------------

    def apply(self, cf: Configuration, ri: RuleInstance) -> Configuration:
        """Apply one rule instance; raises RuleNotEnabled naming the failing
        premise when the instance is not applicable in ``cf``."""
        handler = _APPLY[ri.rule]
        return handler(self, cf, ri)

    def _require(self, cond: bool, ri: RuleInstance, premise: str) -> None:
        if not cond:
            raise RuleNotEnabled(f"{ri}: premise failed: {premise}")

    def _core_and_l1(self, cf: Configuration, ri: RuleInstance,
                     head_type: type) -> tuple[CoreState, CacheState]:
        core = cf.core(ri.subject)
        self._require(bool(core.task), ri, "core task is empty")
        head = core.task[0]
        self._require(isinstance(head, head_type) and head.addr == ri.addr, ri,
                      f"task head is {head}, expected {head_type.__name__}({ri.addr})")
        return core, cf.cache(CacheId(core.id, 1))

    def _apply_prrd1(self, cf, ri):
        core, l1 = self._core_and_l1(cf, ri, Read)
        st = status_of(l1.memory, ri.addr)
        self._require(st in (Status.SH, Status.MO), ri, f"L1 status is {st}, need Sh/Mo")
        ev = Event("R", core.id, ri.addr)
        new_core = CoreState(core.id, core.task[1:], core.log + (ev,))
        return cf.replace(cores={core.id: new_core}, history=cf.history + (ev,))

    def _apply_prrd2(self, cf, ri):
        core, l1 = self._core_and_l1(cf, ri, Read)
        st = status_of(l1.memory, ri.addr)
        self._require(st in (Status.IN, None), ri, f"L1 status is {st}, need In/absent")
        new_core = CoreState(core.id, (ReadBl(ri.addr),) + core.task[1:], core.log)
        new_l1 = CacheState(l1.id, l1.memory.without(ri.addr),
                            l1.dst.with_added(Fetch(ri.addr)))
        return cf.replace(cores={core.id: new_core}, caches={l1.id: new_l1})

    def _apply_prrd3(self, cf, ri):
        # Unblocks the core; appends nothing (see decisions ledger).
        core, l1 = self._core_and_l1(cf, ri, ReadBl)
        self._require(ri.addr in l1.memory, ri, "block not resident in L1")
        new_core = CoreState(core.id, (Read(ri.addr),) + core.task[1:], core.log)
        return cf.replace(cores={core.id: new_core})

    def _apply_prwr1(self, cf, ri):
        core, l1 = self._core_and_l1(cf, ri, Write)
        st = status_of(l1.memory, ri.addr)
        self._require(st is Status.MO, ri, f"L1 status is {st}, need Mo")
        ev = Event("W", core.id, ri.addr)
        new_core = CoreState(core.id, core.task[1:], core.log + (ev,))
        return cf.replace(cores={core.id: new_core}, history=cf.history + (ev,))

    def _apply_prwr3(self, cf, ri):
        core, l1 = self._core_and_l1(cf, ri, Write)
        st = status_of(l1.memory, ri.addr)
        self._require(st in (Status.IN, None), ri, f"L1 status is {st}, need In/absent")
        new_core = CoreState(core.id, (WriteBl(ri.addr),) + core.task[1:], core.log)
        new_l1 = CacheState(l1.id, l1.memory.without(ri.addr),
                            l1.dst.with_added(Fetch(ri.addr)))
        return cf.replace(cores={core.id: new_core}, caches={l1.id: new_l1})

    def _apply_prwr4(self, cf, ri):
        core, l1 = self._core_and_l1(cf, ri, WriteBl)
        self._require(ri.addr in l1.memory, ri, "block not resident in L1")
        new_core = CoreState(core.id, (Write(ri.addr),) + core.task[1:], core.log)
        return cf.replace(cores={core.id: new_core})

    def _cache_of(self, cf: Configuration, ri: RuleInstance) -> CacheState:
        if not isinstance(ri.subject, CacheId):
            raise RuleNotEnabled(f"{ri}: subject must be a cache id")
        return cf.cache(ri.subject)

    def _next_level(self, cf: Configuration, cache: CacheState,
                    ri: RuleInstance) -> CacheState:
        self._require(cache.id.level < cf.levels(), ri, "cache is last level")
        return cf.cache(CacheId(cache.id.core, cache.id.level + 1))

    def _apply_lchit1(self, cf, ri):
        cache = self._cache_of(cf, ri)
        nxt = self._next_level(cf, cache, ri)
        n = ri.addr
        self._require(Fetch(n) in cache.dst, ri, "no pending Fetch")
        victim = select(cache.memory, n, self.policy)
        self._require(ri.aux == victim and victim != n, ri,
                      f"placement selects {victim}, instance bound {ri.aux}")
        s_victim = status_of(cache.memory, victim)
        self._require(s_victim is not None, ri, "victim not resident")
        s_next = status_of(nxt.memory, n)
        self._require(s_next in (Status.SH, Status.MO), ri,
                      f"next level status is {s_next}, need Sh/Mo")
        new_mem = cache.memory.without(victim).with_set(n, s_next)
        new_cache = CacheState(cache.id, new_mem, cache.dst.with_removed(Fetch(n)))
        new_next = CacheState(nxt.id, nxt.memory.without(n).with_set(victim, s_victim),
                              nxt.dst)
        return cf.replace(caches={cache.id: new_cache, nxt.id: new_next})

    def _apply_lchit2(self, cf, ri):
        cache = self._cache_of(cf, ri)
        nxt = self._next_level(cf, cache, ri)
        n = ri.addr
        self._require(Fetch(n) in cache.dst, ri, "no pending Fetch")
        victim = select(cache.memory, n, self.policy)
        self._require(victim == n, ri, f"placement selects victim {victim}, need free slot")
        s_next = status_of(nxt.memory, n)
        self._require(s_next in (Status.SH, Status.MO), ri,
                      f"next level status is {s_next}, need Sh/Mo")
        new_cache = CacheState(cache.id, cache.memory.with_set(n, s_next),
                               cache.dst.with_removed(Fetch(n)))
        new_next = CacheState(nxt.id, nxt.memory.without(n), nxt.dst)
        return cf.replace(caches={cache.id: new_cache, nxt.id: new_next})

    def _apply_lcmiss(self, cf, ri):
        cache = self._cache_of(cf, ri)
        nxt = self._next_level(cf, cache, ri)
        n = ri.addr
        self._require(Fetch(n) in cache.dst, ri, "no pending Fetch")
        st_next = status_of(nxt.memory, n)
        self._require(st_next in (Status.IN, None), ri,
                      f"next level status is {st_next}, need In/absent")
        new_cache = CacheState(cache.id, cache.memory,
                               cache.dst.with_removed(Fetch(n)).with_added(FetchB(n)))
        new_next = CacheState(nxt.id, nxt.memory.without(n),
                              nxt.dst.with_added(Fetch(n)))
        return cf.replace(caches={cache.id: new_cache, nxt.id: new_next})

    def _apply_fetchbl1(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n = ri.addr
        self._require(cache.id.level == cf.levels(), ri, "cache not last level")
        self._require(FetchB(n) in cache.dst, ri, "no pending FetchB")
        victim = select(cache.memory, n, self.policy)
        self._require(victim == n, ri, f"placement selects victim {victim}, need free slot")
        s = status_of(cf.main, n)
        self._require(s is Status.SH, ri, f"main memory status is {s}, block not available")
        new_cache = CacheState(cache.id, cache.memory.with_set(n, s),
                               cache.dst.with_removed(FetchB(n)))
        return cf.replace(caches={cache.id: new_cache})

    def _apply_fetchbl2(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n = ri.addr
        self._require(cache.id.level == cf.levels(), ri, "cache not last level")
        self._require(FetchB(n) in cache.dst, ri, "no pending FetchB")
        victim = select(cache.memory, n, self.policy)
        self._require(ri.aux == victim and victim != n, ri,
                      f"placement selects {victim}, instance bound {ri.aux}")
        self._require(status_of(cache.memory, victim) is not Status.MO, ri,
                      "victim is modified, must be flushed first")
        s = status_of(cf.main, n)
        self._require(s is Status.SH, ri, f"main memory status is {s}, block not available")
        new_mem = cache.memory.without(victim).with_set(n, s)
        new_cache = CacheState(cache.id, new_mem, cache.dst.with_removed(FetchB(n)))
        return cf.replace(caches={cache.id: new_cache})

    def _apply_fetchbl3(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n = ri.addr
        self._require(cache.id.level == cf.levels(), ri, "cache not last level")
        self._require(FetchB(n) in cache.dst, ri, "no pending FetchB")
        victim = select(cache.memory, n, self.policy)
        self._require(ri.aux == victim and victim != n, ri,
                      f"placement selects {victim}, instance bound {ri.aux}")
        self._require(status_of(cache.memory, victim) is Status.MO, ri,
                      "victim is not modified")
        new_dst = (cache.dst.with_removed(FetchB(n))
                   .with_added(Flush(victim), FetchW(n, victim)))
        return cf.replace(caches={cache.id: CacheState(cache.id, cache.memory, new_dst)})

    def _apply_lcfetchunblock(self, cf, ri):
        cache = self._cache_of(cf, ri)
        nxt = self._next_level(cf, cache, ri)
        n = ri.addr
        self._require(FetchB(n) in cache.dst, ri, "no pending FetchB")
        self._require(n in nxt.memory, ri, "block not in next level domain")
        new_dst = cache.dst.with_removed(FetchB(n)).with_added(Fetch(n))
        return cf.replace(caches={cache.id: CacheState(cache.id, cache.memory, new_dst)})

    def _apply_fetchw(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n, pending = ri.addr, ri.aux
        self._require(cache.id.level == cf.levels(), ri, "cache not last level")
        self._require(pending is not None and FetchW(n, pending) in cache.dst, ri,
                      "no pending FetchW")
        self._require(status_of(cache.memory, pending) is not Status.MO, ri,
                      "awaited block still modified")
        new_dst = cache.dst.with_removed(FetchW(n, pending)).with_added(FetchB(n))
        return cf.replace(caches={cache.id: CacheState(cache.id, cache.memory, new_dst)})

    def _apply_flush1(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n = ri.addr
        self._require(Flush(n) in cache.dst, ri, "no pending Flush")
        self._require(status_of(cache.memory, n) is Status.MO, ri, "block not modified")
        new_cache = CacheState(cache.id, cache.memory.with_set(n, Status.SH),
                               cache.dst.with_removed(Flush(n)))
        return cf.replace(caches={cache.id: new_cache},
                          main=cf.main.with_set(n, Status.SH))

    def _apply_flush2(self, cf, ri):
        cache = self._cache_of(cf, ri)
        n = ri.addr
        self._require(Flush(n) in cache.dst, ri, "no pending Flush")
        self._require(status_of(cache.memory, n) is not Status.MO, ri, "block is modified")
        new_cache = CacheState(cache.id, cache.memory, cache.dst.with_removed(Flush(n)))
        return cf.replace(caches={cache.id: new_cache})

    # -- composite broadcast steps ------------------------------------------

    def apply_broadcast_rd(self, cf: Configuration, llc: CacheId,
                           n: Address) -> Configuration:
        """Read broadcast: the last-level cache blocks its fetch and every
        other cache holding the block modified queues a flush."""
        ri = RuleInstance(RuleName.Synch, llc, n)
        cache = cf.cache(llc)
        self._require(llc.level == cf.levels(), ri, "emitter not last level")
        self._require(Fetch(n) in cache.dst, ri, "no pending Fetch")
        updates = {llc: CacheState(llc, cache.memory,
                                   cache.dst.with_removed(Fetch(n)).with_added(FetchB(n)))}
        for other in cf.caches:
            if other.id == llc:
                continue
            if status_of(other.memory, n) is Status.MO:
                updates[other.id] = CacheState(other.id, other.memory,
                                               other.dst.with_added(Flush(n)))
        return cf.replace(caches=updates)

    def apply_broadcast_rdx(self, cf: Configuration, core_id: CoreId,
                            n: Address) -> Configuration:
        """Invalidation broadcast: the writing core's L1 goes modified, every
        other shared copy (and main memory's) is invalidated, in one step."""
        ri = RuleInstance(RuleName.SynchX, core_id, n)
        core = cf.core(core_id)
        self._require(bool(core.task) and core.task[0] == Write(n), ri,
                      "task head is not Write(n)")
        l1 = cf.cache(CacheId(core_id, 1))
        self._require(status_of(l1.memory, n) is Status.SH, ri,
                      "L1 copy is not shared")
        ev = Event("W", core_id, n)
        new_core = CoreState(core.id, core.task[1:], core.log + (ev,))
        updates = {l1.id: CacheState(l1.id, l1.memory.with_set(n, Status.MO), l1.dst)}
        for other in cf.caches:
            if other.id == l1.id:
                continue
            if status_of(other.memory, n) is Status.SH:
                updates[other.id] = CacheState(
                    other.id, other.memory.with_set(n, Status.IN), other.dst)
        return cf.replace(cores={core.id: new_core}, caches=updates,
                          main=cf.main.with_set(n, Status.IN),
                          history=cf.history + (ev,))

    def _apply_synch(self, cf, ri):
        return self.apply_broadcast_rd(cf, ri.subject, ri.addr)

    def _apply_synchx(self, cf, ri):
        return self.apply_broadcast_rdx(cf, ri.subject, ri.addr)

    # -- exploration ---------------------------------------------------------

    def successors(self, cf: Configuration) -> list[tuple[RuleInstance, Configuration]]:
        return [(ri, self.apply(cf, ri)) for ri in self.enabled(cf)]

    def explore(self, cf0: Configuration, state_bound: int = 1_000_000,
                with_edges: bool = False) -> ReachReport:
        """Breadth-first reachability over canonical configurations."""
        seen: dict[tuple, Configuration] = {cf0.canonical_key(): cf0}
        order = [cf0]
        terminals = []
        edges = []
        truncated = False
        queue = deque([cf0])
        while queue:
            cf = queue.popleft()
            succs = self.successors(cf)
            if not succs:
                terminals.append(cf)
            for ri, nxt in succs:
                if with_edges:
                    edges.append((cf, ri, nxt))
                key = nxt.canonical_key()
                if key not in seen:
                    if len(seen) >= state_bound:
                        truncated = True
                        continue
                    seen[key] = nxt
                    order.append(nxt)
                    queue.append(nxt)
        return ReachReport(tuple(order), tuple(terminals), truncated,
                           tuple(edges) if with_edges else None)


_APPLY = {
    RuleName.PrRd1: TssEngine._apply_prrd1,
    RuleName.PrRd2: TssEngine._apply_prrd2,
    RuleName.PrRd3: TssEngine._apply_prrd3,
    RuleName.PrWr1: TssEngine._apply_prwr1,
    RuleName.PrWr3: TssEngine._apply_prwr3,
    RuleName.PrWr4: TssEngine._apply_prwr4,
    RuleName.LCHit1: TssEngine._apply_lchit1,
    RuleName.LCHit2: TssEngine._apply_lchit2,
    RuleName.LCMiss: TssEngine._apply_lcmiss,
    RuleName.FetchBl1: TssEngine._apply_fetchbl1,
    RuleName.FetchBl2: TssEngine._apply_fetchbl2,
    RuleName.FetchBl3: TssEngine._apply_fetchbl3,
    RuleName.LCFetchUnblock: TssEngine._apply_lcfetchunblock,
    RuleName.FetchW: TssEngine._apply_fetchw,
    RuleName.Flush1: TssEngine._apply_flush1,
    RuleName.Flush2: TssEngine._apply_flush2,
    RuleName.Synch: TssEngine._apply_synch,
    RuleName.SynchX: TssEngine._apply_synchx,
}


def check_msi(cf: Configuration) -> list[str]:
    """MSI safety scan; empty result means coherent.

    Checks, per address: at most one modified copy among all caches; if a
    modified copy exists, every other cache copy is invalid or absent and
    the main-memory copy is invalid; and no core hierarchy holds the same
    address modified at two levels.
    """
    violations = []
    addrs = set(cf.main.resident())
    for cache in cf.caches:
        addrs.update(cache.memory.resident())
    for n in sorted(addrs):
        holders = [c.id for c in cf.caches
                   if status_of(c.memory, n) is Status.MO]
        if len(holders) > 1:
            violations.append(
                f"address {n}: multiple modified copies at "
                + ", ".join(str(h) for h in holders))
            per_core: dict[CoreId, list[CacheId]] = {}
            for h in holders:
                per_core.setdefault(h.core, []).append(h)
            for core_id, hs in sorted(per_core.items()):
                if len(hs) > 1:
                    violations.append(
                        f"address {n}: modified at two levels of {core_id}: "
                        + ", ".join(str(h) for h in hs))
        elif len(holders) == 1:
            holder = holders[0]
            for other in cf.caches:
                if other.id == holder:
                    continue
                st = status_of(other.memory, n)
                if st in (Status.SH, Status.MO):
                    violations.append(
                        f"address {n}: modified at {holder} but {other.id} holds {st}")
            if status_of(cf.main, n) is not Status.IN:
                violations.append(
                    f"address {n}: modified at {holder} but main memory is "
                    f"{status_of(cf.main, n)}")
    return violations


def stale_access_check(cf: Configuration, ri: RuleInstance) -> list[str]:
    """For an event-appending rule about to fire in ``cf``, report any
    foreign modified copy of the accessed block (the no-stale-access
    property; the invalidating write itself is the allowed exception and
    cannot trip this by its own premises)."""
    if ri.rule not in EVENT_RULES:
        return []
    core_id = ri.subject if isinstance(ri.subject, str) else ri.subject.core
    out = []
    for cache in cf.caches:
        if cache.id.core != core_id and status_of(cache.memory, ri.addr) is Status.MO:
            out.append(f"{ri}: foreign modified copy of {ri.addr} at {cache.id}")
    return out


_DEFAULT_ENGINE = TssEngine()


def enabled(cf: Configuration) -> list[RuleInstance]:
    return _DEFAULT_ENGINE.enabled(cf)


def apply_rule(cf: Configuration, ri: RuleInstance) -> Configuration:
    return _DEFAULT_ENGINE.apply(cf, ri)


def successors(cf: Configuration) -> list[tuple[RuleInstance, Configuration]]:
    return _DEFAULT_ENGINE.successors(cf)


def explore(cf0: Configuration, state_bound: int = 1_000_000,
            with_edges: bool = False) -> ReachReport:
    return _DEFAULT_ENGINE.explore(cf0, state_bound, with_edges)
