"""Minimal active-object runtime with cooperative scheduling.

Programs are small statement trees interpreted by this module.  Objects own
their fields (expressions can only read the fields of the object a process
runs on); all cross-object effects go through calls.  Processes of one
object interleave only at release points: awaits, external synchronous
calls, and method boundaries.

Two execution grains are offered.  ``fine_step`` runs a single statement of
a single schedulable process, used for confluence testing.  ``coarse_step``
runs from one stable global state to the next: it schedules one candidate
and drives it to its next release point, fuses the resumption of a
synchronous caller into the callee's completion, and executes broadcast
protocol methods (marked on the behavior) atomically, including the lock
and barrier machinery they spawn.

States are canonicalizable: process and dynamic-object identifiers are
content-addressed and renumbered during canonicalization, so worlds that
differ only in allocation history compare equal.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from ..errors import (ContractError, DeadlockError, DuplicateKindError,
                      NotStableError, StuckError, UnknownKindError,
                      UnknownMethodError)

Expr = Callable[["Env"], Any]
Matcher = Callable[[Any], Optional[dict]]


# --- statement nodes ---------------------------------------------------------

class Stmt:
    nid: int = -1


@dataclass
class Skip(Stmt):
    pass


@dataclass
class Assign(Stmt):
    target: str
    expr: Expr


@dataclass
class Assert(Stmt):
    cond: Expr
    message: str


@dataclass
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass
class Case:
    label: str
    match: Matcher
    body: Stmt


@dataclass
class Switch(Stmt):
    expr: Expr
    cases: list[Case]


@dataclass
class Seq(Stmt):
    stmts: list[Stmt]


@dataclass
class AsyncCall(Stmt):
    target: Expr
    method: str
    args: list[Expr]


@dataclass
class SyncCall(Stmt):
    out: Optional[str]
    target: Expr
    method: str
    args: list[Expr]


@dataclass
class AwaitGuard(Stmt):
    cond: Expr
    src: str = ""


@dataclass
class AwaitCall(Stmt):
    """``await target!method(args)``: asynchronous call plus suspension on
    its completion; the result is discarded."""

    target: Expr
    method: str
    args: list[Expr]


@dataclass
class Return(Stmt):
    expr: Optional[Expr] = None


@dataclass
class New(Stmt):
    out: str
    kind: str
    args: list[Expr]


@dataclass
class Foreach(Stmt):
    var: str
    items: Expr
    body: Stmt


# --- annotations -------------------------------------------------------------

@dataclass
class Clause:
    """One conditional transition-rule clause ``condition : rule``."""

    cond: Expr
    rule: Callable[["World", str, dict], Any]
    src: str


@dataclass
class Annotation:
    """Ordered clauses attached to a stable point.  Conditions are evaluated
    left to right over the segment-end environment; the first true clause
    names the expected rule, none true means the segment is silent."""

    clauses: list[Clause]
    note: str = ""


# --- methods and behaviors ---------------------------------------------------

@dataclass
class Method:
    name: str
    params: list[str]
    body: Stmt
    protocol: bool = False
    broadcast_entry: bool = False

    def __post_init__(self) -> None:
        self.nodes: dict[int, Stmt] = {}
        self.stable_points: dict[int, int] = {}  # nid -> stable point index
        self.annotations: dict[int, Annotation] = {}  # sp index -> annotation
        counter = iter(range(100_000))
        sp = iter(range(1, 100_000))

        def walk(node: Stmt) -> None:
            node.nid = next(counter)
            self.nodes[node.nid] = node
            if isinstance(node, (SyncCall, AwaitGuard, AwaitCall)):
                self.stable_points[node.nid] = next(sp)
            if isinstance(node, Seq):
                for s in node.stmts:
                    walk(s)
            elif isinstance(node, If):
                walk(node.then)
                if node.orelse is not None:
                    walk(node.orelse)
            elif isinstance(node, Switch):
                for case in node.cases:
                    walk(case.body)
            elif isinstance(node, Foreach):
                walk(node.body)

        walk(self.body)

    def annotate(self, sp_index: int, annotation: Annotation) -> "Method":
        self.annotations[sp_index] = annotation
        return self

    def stable_point_of(self, nid: Optional[int]) -> int:
        """Stable point index for a parked node; 0 is the method body."""
        if nid is None:
            return 0
        return self.stable_points[nid]


@dataclass
class Behavior:
    kind: str
    params: list[str] = field(default_factory=list)
    defaults: dict[str, Any] = field(default_factory=dict)
    methods: dict[str, Method] = field(default_factory=dict)

    def define(self, method: Method) -> Method:
        self.methods[method.name] = method
        return method


class BehaviorRegistry:
    def __init__(self) -> None:
        self._kinds: dict[str, Behavior] = {}

    def register(self, behavior: Behavior) -> Behavior:
        if behavior.kind in self._kinds:
            raise DuplicateKindError(f"behavior {behavior.kind!r} already registered")
        self._kinds[behavior.kind] = behavior
        return behavior

    def get(self, kind: str) -> Behavior:
        try:
            return self._kinds[kind]
        except KeyError:
            raise UnknownKindError(f"unknown behavior kind {kind!r}")

    def kinds(self) -> list[str]:
        return sorted(self._kinds)


# --- runtime state -----------------------------------------------------------

class Env:
    """Name lookup for expressions: process locals over the owner's fields.

    Only the owning object's state is visible, which is what enforces field
    encapsulation for the interpreted programs.
    """

    def __init__(self, locals_: dict, fields: dict):
        self.locals = locals_
        self.fields = fields

    def __getitem__(self, name: str) -> Any:
        if name in self.locals:
            return self.locals[name]
        if name in self.fields:
            return self.fields[name]
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.locals or name in self.fields

    def snapshot(self) -> dict:
        out = dict(self.fields)
        out.update(self.locals)
        return out


@dataclass
class Frame:
    method: str
    locals: dict
    cont: list  # node ids, or ("bind", name, value) entries
    out: Optional[str] = None  # receiver of Return in the parent frame


Pid = tuple

NEW = "new"
ACTIVE = "active"
GUARD = "guard"        # state: (GUARD, await nid)
COMPLETION = "completion"  # state: (COMPLETION, callee pid, await nid)
CALL = "call"          # state: (CALL, callee pid, out var, call nid, fields snapshot)
DONE = "done"          # state: (DONE, return value)


@dataclass
class Process:
    pid: Pid
    oid: str
    method: str
    args: tuple
    origin: Any  # "a" for asynchronous, ("s", caller pid) for synchronous
    watched: bool = False
    state: tuple = (NEW,)
    frames: list[Frame] = field(default_factory=list)
    last_env: dict = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return self.state[0] == DONE

    @property
    def sync_caller(self) -> Optional[Pid]:
        return self.origin[1] if isinstance(self.origin, tuple) else None


@dataclass
class Obj:
    oid: str
    kind: str
    fields: dict
    procs: dict[Pid, Process] = field(default_factory=dict)
    creator: Optional[str] = None  # set for dynamically created objects


@dataclass
class Segment:
    """Record of one coarse step: which process ran from which stable point,
    what it executed, and the environment its paths ended with."""

    pid: Pid
    oid: str
    method: str
    from_point: tuple[str, int]
    kind: str  # "local" | "rendezvous" | "broadcast"
    path: list[int]
    end_env: dict


def canon_value(value: Any, oid_map: Optional[dict] = None) -> Any:
    """Hashable canonical form of an environment/field value."""
    if isinstance(value, dict):
        return ("#d",) + tuple(sorted(
            (canon_value(k, oid_map), canon_value(v, oid_map))
            for k, v in value.items()))
    if isinstance(value, (list, tuple)):
        return tuple(canon_value(v, oid_map) for v in value)
    if isinstance(value, str) and oid_map and value in oid_map:
        return oid_map[value]
    return value


class World:
    """A global actor state plus the behavior registry it runs on."""

    def __init__(self, registry: BehaviorRegistry):
        self.registry = registry
        self.objects: dict[str, Obj] = {}
        self.roots: set[str] = set()
        self.step_count = 0
        self.fine_count = 0
        self.rng_seed = 0

    # -- construction -------------------------------------------------------

    def create_object(self, kind: str, oid: Optional[str] = None,
                      fields: Optional[dict] = None,
                      creator: Optional[str] = None) -> str:
        behavior = self.registry.get(kind)
        values = dict(behavior.defaults)
        values.update(fields or {})
        if oid is None:
            ks = {o.fields.get("__k") for o in self.objects.values()
                  if o.kind == kind and o.creator == creator}
            k = 0
            while k in ks:
                k += 1
            values["__k"] = k
            oid = f"@{kind}/{creator}/{k}"
        if oid in self.objects:
            raise ContractError(f"object id {oid!r} already exists")
        self.objects[oid] = Obj(oid, kind, values, creator=creator)
        if creator is None:
            self.roots.add(oid)
        return oid

    def obj(self, oid: str) -> Obj:
        try:
            return self.objects[oid]
        except KeyError:
            raise UnknownKindError(f"no object {oid!r}")

    def method_of(self, oid: str, method: str) -> Method:
        obj = self.obj(oid)
        behavior = self.registry.get(obj.kind)
        if method not in behavior.methods:
            raise UnknownMethodError(f"{obj.kind} has no method {method!r}")
        return behavior.methods[method]

    def _spawn(self, target: str, method: str, args: tuple, origin: Any,
               watched: bool) -> Pid:
        self.method_of(target, method)  # validates target and method
        obj = self.obj(target)
        base = (target, method, canon_value(args), canon_value(origin))
        k = 0
        while base + (k,) in obj.procs:
            k += 1
        pid = base + (k,)
        obj.procs[pid] = Process(pid, target, method, args, origin, watched)
        return pid

    def async_call(self, target: str, method: str, args: Sequence = ()) -> Pid:
        """Queue a new process on ``target``; the caller continues."""
        return self._spawn(target, method, tuple(args), "a", watched=False)

    def proc(self, pid: Pid) -> Process:
        return self.objects[pid[0]].procs[pid]

    def live_processes(self) -> list[Process]:
        return [p for o in self.objects.values() for p in o.procs.values()]

    # -- stability and scheduling ---------------------------------------------

    def is_stable(self) -> bool:
        return all(p.state[0] != ACTIVE for p in self.live_processes())

    def _object_candidates(self, obj: Obj) -> list[Pid]:
        procs = [p for p in obj.procs.values() if not p.done]
        active = [p.pid for p in procs if p.state[0] == ACTIVE]
        if active:
            return active
        calls = [p for p in procs if p.state[0] == CALL]
        if calls:
            # a pending external sync call blocks the whole object
            return [p.pid for p in calls if self._callee_done(p)]
        out = []
        for p in procs:
            tag = p.state[0]
            if tag == NEW:
                out.append(p.pid)
            elif tag == GUARD and self._guard_holds(p):
                out.append(p.pid)
            elif tag == COMPLETION and self._callee_done(p):
                out.append(p.pid)
        return out

    def _callee_done(self, p: Process) -> bool:
        callee = p.state[1]
        target = self.objects.get(callee[0])
        if target is None or callee not in target.procs:
            return True  # callee already reaped
        return target.procs[callee].done

    def _guard_holds(self, p: Process) -> bool:
        node = self.method_of(p.oid, p.frames[-1].method).nodes[p.state[1]]
        env = Env(p.frames[-1].locals, self.obj(p.oid).fields)
        return bool(node.cond(env))

    def _runnable(self, p: Process) -> bool:
        tag = p.state[0]
        if tag in (NEW, ACTIVE):
            return True
        if tag == GUARD:
            return self._guard_holds(p)
        if tag in (COMPLETION, CALL):
            return self._callee_done(p)
        return False

    def fine_candidates(self) -> list[Pid]:
        out: list[Pid] = []
        for oid in sorted(self.objects):
            out.extend(self._object_candidates(self.objects[oid]))
        return sorted(out, key=repr)

    # -- fine-grained execution -------------------------------------------------

    def fine_step(self, pid: Pid) -> None:
        """Run one statement of one schedulable process."""
        self._advance(self.proc(pid))
        self.fine_count += 1
        self.reap()

    def _advance(self, p: Process, path: Optional[list] = None) -> None:
        """One scheduling quantum: activation or resumption, then a single
        statement, with eager parking at release points so every stable
        position has exactly one representation."""
        tag = p.state[0]
        if tag == NEW:
            method = self.method_of(p.oid, p.method)
            if len(p.args) != len(method.params):
                raise ContractError(
                    f"{p.oid}.{p.method} expects {len(method.params)} "
                    f"arguments, got {len(p.args)}")
            p.frames = [Frame(p.method, dict(zip(method.params, p.args)),
                              self._flatten(method.body))]
        elif tag == GUARD:
            if not self._guard_holds(p):
                raise StuckError(f"{p.pid}: guard does not hold")
        elif tag == COMPLETION:
            if not self._callee_done(p):
                raise StuckError(f"{p.pid}: awaited call not finished")
            self._reap_callee(p.state[1])
        elif tag == CALL:
            if not self._callee_done(p):
                raise StuckError(f"{p.pid}: synchronous callee not finished")
            _, callee, out, _site, snapshot = p.state
            if canon_value(self.obj(p.oid).fields) != snapshot:
                raise ContractError(
                    f"{p.oid}: fields changed across synchronous call to {callee[0]}")
            value = self._take_return(callee)
            if out is not None:
                p.frames[-1].locals[out] = value
        elif tag != ACTIVE:
            raise StuckError(f"{p.pid} is not schedulable ({tag})")
        p.state = (ACTIVE,)
        self._autopark(p)
        if p.state[0] == ACTIVE:
            self._exec_one(p, path)
            self._autopark(p)

    def _take_return(self, callee: Pid) -> Any:
        target = self.objects.get(callee[0])
        if target and callee in target.procs:
            value = target.procs[callee].state[1]
            del target.procs[callee]
            return value
        return None

    def _reap_callee(self, callee: Pid) -> None:
        target = self.objects.get(callee[0])
        if target and callee in target.procs:
            del target.procs[callee]

    def _flatten(self, node: Stmt) -> list:
        if isinstance(node, Seq):
            out: list = []
            for s in node.stmts:
                out.extend(self._flatten(s))
            return out
        return [node.nid]

    def _env(self, p: Process) -> Env:
        return Env(p.frames[-1].locals, self.obj(p.oid).fields)

    def _autopark(self, p: Process) -> None:
        """Park at the next release point, performing implicit returns, so a
        process never rests mid-representation on an await or sync call."""
        while p.state[0] == ACTIVE:
            frame = p.frames[-1]
            if not frame.cont:
                self._return_from_frame(p, None)
                continue
            head = frame.cont[0]
            if isinstance(head, tuple):  # pending foreach binding: executable
                return
            node = self.method_of(p.oid, frame.method).nodes[head]
            if isinstance(node, AwaitGuard):
                frame.cont.pop(0)
                p.last_env = self._env(p).snapshot()
                p.state = (GUARD, node.nid)
                return
            if isinstance(node, AwaitCall):
                frame.cont.pop(0)
                env = self._env(p)
                target = self._resolve_target(node.target, env, p)
                callee = self._spawn(target, node.method,
                                     tuple(a(env) for a in node.args),
                                     "a", watched=True)
                p.last_env = env.snapshot()
                p.state = (COMPLETION, callee, node.nid)
                return
            if isinstance(node, SyncCall):
                env = self._env(p)
                target = self._resolve_target(node.target, env, p)
                if target == p.oid:
                    return  # inlined self-call: ordinary executable statement
                frame.cont.pop(0)
                callee = self._spawn(target, node.method,
                                     tuple(a(env) for a in node.args),
                                     ("s", p.pid), watched=True)
                p.last_env = env.snapshot()
                p.state = (CALL, callee, node.out, node.nid,
                           canon_value(self.obj(p.oid).fields))
                return
            return

    def _resolve_target(self, target: Expr, env: Env, p: Process) -> str:
        value = target(env)
        if value == "self":
            return p.oid
        if not isinstance(value, str):
            raise ContractError(f"call target {value!r} is not an object id")
        return value

    def _return_from_frame(self, p: Process, value: Any) -> None:
        frame = p.frames.pop()
        p.last_env = dict(frame.locals)
        if p.frames:
            if frame.out is not None:
                p.frames[-1].locals[frame.out] = value
        else:
            self._complete(p, value)

    def _complete(self, p: Process, value: Any) -> None:
        p.state = (DONE, value)
        if not p.watched:
            del self.objects[p.oid].procs[p.pid]

    def _exec_one(self, p: Process, path: Optional[list] = None) -> None:
        frame = p.frames[-1]
        while frame.cont and isinstance(frame.cont[0], tuple):
            _, name, value = frame.cont.pop(0)
            frame.locals[name] = value
        if not frame.cont:
            self._return_from_frame(p, None)
            return
        nid = frame.cont.pop(0)
        if path is not None:
            path.append(nid)
        node = self.method_of(p.oid, frame.method).nodes[nid]
        env = self._env(p)
        obj = self.obj(p.oid)
        if isinstance(node, Skip):
            pass
        elif isinstance(node, Assign):
            value = node.expr(env)
            if node.target in frame.locals:
                frame.locals[node.target] = value
            elif node.target in obj.fields:
                obj.fields[node.target] = value
            else:
                frame.locals[node.target] = value
        elif isinstance(node, Assert):
            if not node.cond(env):
                raise ContractError(f"{p.oid}.{frame.method}: {node.message}")
        elif isinstance(node, If):
            branch = node.then if node.cond(env) else node.orelse
            if branch is not None:
                frame.cont[:0] = self._flatten(branch)
        elif isinstance(node, Switch):
            value = node.expr(env)
            for case in node.cases:
                bound = case.match(value)
                if bound is not None:
                    frame.locals.update(bound)
                    frame.cont[:0] = self._flatten(case.body)
                    break
            else:
                raise ContractError(
                    f"{p.oid}.{frame.method}: no switch case matches {value!r}")
        elif isinstance(node, AsyncCall):
            target = self._resolve_target(node.target, env, p)
            self._spawn(target, node.method, tuple(a(env) for a in node.args),
                        "a", watched=False)
        elif isinstance(node, SyncCall):
            target = self._resolve_target(node.target, env, p)
            if target != p.oid:
                raise ContractError("external sync call must park, not execute")
            callee = self.method_of(p.oid, node.method)
            args = tuple(a(env) for a in node.args)
            p.frames.append(Frame(node.method, dict(zip(callee.params, args)),
                                  self._flatten(callee.body), out=node.out))
        elif isinstance(node, Return):
            self._return_from_frame(p, node.expr(env) if node.expr else None)
        elif isinstance(node, New):
            oid = self.create_object(
                node.kind,
                fields=dict(zip(self.registry.get(node.kind).params,
                                (a(env) for a in node.args))),
                creator=p.oid)
            frame.locals[node.out] = oid
        elif isinstance(node, Foreach):
            expansion: list = []
            for item in node.items(env):
                expansion.append(("bind", node.var, item))
                expansion.extend(self._flatten(node.body))
            frame.cont[:0] = expansion
        elif isinstance(node, (AwaitGuard, AwaitCall)):
            raise ContractError("await must be consumed at a release point")
        else:
            raise ContractError(f"unknown statement {node!r}")

    # -- coarse execution ---------------------------------------------------

    def coarse_candidates(self) -> list[Pid]:
        if not self.is_stable():
            raise NotStableError("coarse scheduling requires a stable state")
        return self.fine_candidates()

    def coarse_step(self, seed: int) -> Segment:
        """Run one stable-to-stable step, choosing among enabled candidates
        with the given seed.  Deterministic in (state, seed)."""
        candidates = self.coarse_candidates()
        if not candidates:
            self._diagnose_block()
            raise StuckError("no process to run")
        pick = candidates[random.Random(seed).randrange(len(candidates))]
        self.rng_seed = seed
        return self.run_segment(pick)

    def _diagnose_block(self) -> None:
        pending = [p for p in self.live_processes() if not p.done]
        if not pending:
            return
        waits = {}
        for p in pending:
            if p.state[0] == CALL and not self._callee_done(p):
                waits[p.oid] = p.state[1][0]
        for start in sorted(waits):
            seen: list[str] = []
            node: Optional[str] = start
            while node is not None and node not in seen:
                seen.append(node)
                node = waits.get(node)
            if node is not None:
                cycle = seen[seen.index(node):] + [node]
                raise DeadlockError(
                    "synchronous call cycle: " + " -> ".join(cycle))
        detail = ", ".join(f"{p.oid}.{p.method}:{p.state[0]}"
                           for p in sorted(pending, key=lambda q: repr(q.pid)))
        raise StuckError(f"pending work but nothing schedulable: {detail}")

    def _anchor_of(self, pid: Pid) -> tuple[Pid, tuple[str, int]]:
        """The process and stable point a segment is classified at: for a
        synchronous callee that is the caller's call site, otherwise the
        scheduled process's own position."""
        p = self.proc(pid)
        if p.state[0] == NEW and p.sync_caller is not None:
            caller = self.proc(p.sync_caller)
            site = caller.state[3]
            method = self.method_of(caller.oid, caller.frames[-1].method)
            return caller.pid, (caller.frames[-1].method,
                                method.stable_point_of(site))
        if p.state[0] == NEW:
            return pid, (p.method, 0)
        nid = p.state[3] if p.state[0] == CALL else \
            p.state[2] if p.state[0] == COMPLETION else p.state[1]
        method = self.method_of(p.oid, p.frames[-1].method)
        return pid, (p.frames[-1].method, method.stable_point_of(nid))

    def _has_broadcast_frame(self, p: Process) -> bool:
        behavior = self.registry.get(self.obj(p.oid).kind)
        if behavior.methods[p.method].broadcast_entry:
            return True
        return any(behavior.methods[f.method].broadcast_entry for f in p.frames)

    def _in_protocol(self, p: Process) -> bool:
        behavior = self.registry.get(self.obj(p.oid).kind)
        m = behavior.methods[p.method]
        if m.protocol or m.broadcast_entry:
            return True
        return any(behavior.methods[f.method].protocol or
                   behavior.methods[f.method].broadcast_entry
                   for f in p.frames)

    def _is_protocol_proc(self, p: Process) -> bool:
        behavior = self.registry.get(self.obj(p.oid).kind)
        m = behavior.methods.get(p.method)
        return bool(m and (m.protocol or m.broadcast_entry))

    def _blocked_on_protocol(self, p: Process) -> bool:
        if p.state[0] not in (COMPLETION, CALL):
            return False
        callee = p.state[1]
        target = self.objects.get(callee[0])
        if target is None or callee not in target.procs:
            return False
        return self._is_protocol_proc(target.procs[callee])

    def run_segment(self, pid: Pid) -> Segment:
        """Drive ``pid`` from its stable point to the next stable global
        state, fusing synchronous-call rendezvous and executing broadcast
        protocols atomically."""
        anchor_pid, from_point = self._anchor_of(pid)
        anchor_ref = self.proc(anchor_pid)
        path: list[int] = []
        resumed_caller = self.proc(pid).sync_caller is not None
        protocol_entered = False
        spawned_before = {q.pid for q in self.live_processes()}
        current_ref = self.proc(pid)
        while True:
            # drive the current process to its next release point
            while self._runnable(current_ref) and not current_ref.done:
                self._advance(current_ref, path)
                self.fine_count += 1
                if not protocol_entered and current_ref.frames and \
                        self._has_broadcast_frame(current_ref):
                    protocol_entered = True
            if current_ref.done:
                caller_pid = current_ref.sync_caller
                if caller_pid is not None:
                    resumed_caller = True
                    current_ref = self.proc(caller_pid)
                    continue
                break
            # parked: flatten broadcast-protocol release points
            if self._in_protocol(current_ref) or \
                    self._blocked_on_protocol(current_ref):
                protocol_entered = True
                if self._step_protocol_world(spawned_before):
                    continue
                if self._runnable(current_ref):
                    continue
                raise StuckError(
                    f"broadcast protocol cannot progress at {current_ref.pid}")
            break  # reached a stable point
        if protocol_entered:
            while self._step_protocol_world(spawned_before):
                pass
            leftovers = [q.pid for q in self.live_processes()
                         if q.pid not in spawned_before and not q.done
                         and self._is_protocol_proc(q)]
            if leftovers:
                raise StuckError(f"broadcast protocol did not drain: {leftovers}")
        self.step_count += 1
        self.reap()
        kind = ("broadcast" if protocol_entered
                else "rendezvous" if resumed_caller else "local")
        end_env = dict(self.obj(anchor_ref.oid).fields)
        end_env.update(anchor_ref.frames[-1].locals if anchor_ref.frames
                       else anchor_ref.last_env)
        end_env = {k: v for k, v in end_env.items() if not k.startswith("__")}
        return Segment(anchor_pid, anchor_ref.oid, from_point[0], from_point,
                       kind, path, end_env)

    def _step_protocol_world(self, spawned_before: set) -> bool:
        """Advance one runnable protocol process spawned during the current
        segment; returns False when none can move."""
        candidates = [q for q in self.live_processes()
                      if q.pid not in spawned_before and not q.done
                      and self._is_protocol_proc(q) and self._runnable(q)
                      and not self._object_busy_for(q)]
        if not candidates:
            return False
        q = min(candidates, key=lambda r: repr(r.pid))
        self._advance(q)
        self.fine_count += 1
        return True

    def _object_busy_for(self, q: Process) -> bool:
        """Cooperative-scheduling guard: another process of the same object
        holds it (running, or blocked on an unfinished sync call)."""
        for other in self.objects[q.oid].procs.values():
            if other.pid == q.pid:
                continue
            if other.state[0] == ACTIVE:
                return True
            if other.state[0] == CALL and not self._callee_done(other):
                return True
        return False

    # -- garbage collection and canonicalization --------------------------------

    def reap(self) -> None:
        """Drop finished processes nobody references and dynamic objects
        that are no longer reachable."""
        referenced: set[Pid] = set()
        for p in self.live_processes():
            if p.state[0] in (COMPLETION, CALL):
                referenced.add(p.state[1])
        for o in list(self.objects.values()):
            for pid, p in list(o.procs.items()):
                if p.done and pid not in referenced:
                    del o.procs[pid]
        live_refs: set[str] = set()

        def collect(value: Any) -> None:
            if isinstance(value, str) and value.startswith("@"):
                live_refs.add(value)
            elif isinstance(value, (tuple, list)):
                for v in value:
                    collect(v)
            elif isinstance(value, dict):
                for v in value.values():
                    collect(v)

        for oid in self.roots:
            collect(tuple(self.objects[oid].fields.values()))
        for o in self.objects.values():
            for p in o.procs.values():
                collect(p.args)
                for f in p.frames:
                    collect(tuple(f.locals.values()))
                    collect(tuple(e for e in f.cont if isinstance(e, tuple)))
        for oid in list(self.objects):
            if oid not in self.roots and oid not in live_refs:
                obj = self.objects[oid]
                if all(p.done for p in obj.procs.values()):
                    del self.objects[oid]

    def fork(self) -> "World":
        clone = World(self.registry)
        clone.objects = copy.deepcopy(self.objects)
        clone.roots = set(self.roots)
        clone.step_count = self.step_count
        clone.fine_count = self.fine_count
        clone.rng_seed = self.rng_seed
        return clone

    def canonical_key(self) -> tuple:
        """Allocation-independent state identity: dynamic object ids and
        process discriminators are renumbered into rank order, step counters
        and seeds are excluded."""
        oid_map: dict[str, str] = {}
        groups: dict[tuple, list[Obj]] = {}
        for o in self.objects.values():
            if o.oid.startswith("@"):
                groups.setdefault((o.kind, o.creator), []).append(o)
        for (kind, creator), members in groups.items():
            for rank, o in enumerate(sorted(members, key=lambda m: m.oid)):
                oid_map[o.oid] = f"@{kind}/{creator}/#{rank}"

        pid_map: dict[Pid, tuple] = {}

        def map_origin(origin: Any) -> Any:
            if isinstance(origin, tuple) and origin and origin[0] == "s":
                return ("s", map_pid(origin[1]))
            return origin

        def map_pid(pid: Pid) -> tuple:
            if pid in pid_map:
                return pid_map[pid]
            oid = pid[0]
            base = (oid_map.get(oid, oid), pid[1],
                    canon_value(pid[2], oid_map), map_origin(pid[3]))
            obj = self.objects.get(oid)
            peers = sorted(q[4] for q in (obj.procs if obj else ())
                           if q[:4] == pid[:4])
            rank = peers.index(pid[4]) if pid[4] in peers else pid[4]
            pid_map[pid] = base + (rank,)
            return pid_map[pid]

        def state_key(p: Process) -> tuple:
            tag = p.state[0]
            if tag == GUARD:
                return (GUARD, p.state[1])
            if tag == COMPLETION:
                return (COMPLETION, map_pid(p.state[1]), p.state[2])
            if tag == CALL:
                return (CALL, map_pid(p.state[1]), p.state[2], p.state[3])
            if tag == DONE:
                return (DONE, canon_value(p.state[1], oid_map))
            return (tag,)

        def frame_key(f: Frame) -> tuple:
            cont = tuple(e if isinstance(e, int)
                         else ("bind", e[1], canon_value(e[2], oid_map))
                         for e in f.cont)
            locals_c = tuple(sorted(
                (k, canon_value(v, oid_map)) for k, v in f.locals.items()))
            return (f.method, cont, locals_c, f.out)

        out = []
        for oid in sorted(self.objects, key=lambda o: oid_map.get(o, o)):
            obj = self.objects[oid]
            fields_c = tuple(sorted(
                (k, canon_value(v, oid_map)) for k, v in obj.fields.items()
                if not k.startswith("__")))
            procs_c = tuple(sorted(
                (map_pid(p.pid), state_key(p),
                 tuple(frame_key(f) for f in p.frames), p.watched)
                for p in obj.procs.values()))
            out.append((oid_map.get(oid, oid), obj.kind, fields_c, procs_c))
        return tuple(out)


# --- module-level operations ---------------------------------------------------

def is_stable(world: World) -> bool:
    return world.is_stable()


def coarse_step(world: World, seed: int) -> Segment:
    return world.coarse_step(seed)


def enumerate_fine_steps(world: World) -> list[tuple[Pid, World]]:
    """All single fine steps: one statement of one schedulable process,
    each applied to a fork of the given state."""
    out = []
    for pid in world.fine_candidates():
        branch = world.fork()
        branch.fine_step(pid)
        out.append((pid, branch))
    return out


@dataclass
class DiamondReport:
    pairs: int
    joinable: int
    failures: list[tuple[Pid, Pid]]

    @property
    def ok(self) -> bool:
        return not self.failures


def diamond_check(world: World) -> DiamondReport:
    """Check the confluence diamond at one state: every pair of fine steps
    of *different* objects must be joinable in one further step each."""
    steps = enumerate_fine_steps(world)
    pairs = 0
    joinable = 0
    failures = []
    for i, (pid_a, wa) in enumerate(steps):
        for pid_b, wb in steps[i + 1:]:
            if pid_a[0] == pid_b[0]:
                continue  # same object: outside the theorem's scope
            pairs += 1
            if wa.canonical_key() == wb.canonical_key():
                joinable += 1
                continue
            succ_a = {w.canonical_key() for _, w in enumerate_fine_steps(wa)}
            succ_b = {w.canonical_key() for _, w in enumerate_fine_steps(wb)}
            if succ_a & succ_b:
                joinable += 1
            else:
                failures.append((pid_a, pid_b))
    return DiamondReport(pairs, joinable, failures)
