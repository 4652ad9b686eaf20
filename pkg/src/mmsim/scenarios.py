"""Scenario definitions: system shape, access patterns, built-in instances."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .errors import ScenarioError
from .tss.core import (CacheId, CacheState, Configuration, CoreState,
                       DstMultiset, MemoryMap, PLACEMENT_POLICIES, Read,
                       RuntimeStmt, Status, Write)


@dataclass(frozen=True)
class Scenario:
    name: str
    num_cores: int
    levels: int
    capacities: tuple[int, ...]
    address_space: int
    patterns: tuple[tuple[RuntimeStmt, ...], ...]
    policy: str = "direct"
    seed: int = 0

    def validate(self) -> "Scenario":
        def fail(path: str, msg: str):
            raise ScenarioError(f"{self.name}: {path}: {msg}")

        if self.num_cores < 0:
            fail("num_cores", "must be non-negative")
        if self.levels < 1:
            fail("levels", "must be positive")
        if len(self.capacities) != self.levels:
            fail("capacities", f"need {self.levels} entries, got {len(self.capacities)}")
        if any(c < 1 for c in self.capacities):
            fail("capacities", "entries must be positive")
        if self.address_space < 1:
            fail("address_space", "must be positive")
        if len(self.patterns) != self.num_cores:
            fail("patterns", f"need {self.num_cores} patterns, got {len(self.patterns)}")
        for i, pattern in enumerate(self.patterns):
            for op in pattern:
                if not isinstance(op, (Read, Write)):
                    fail(f"patterns[{i}]", f"{op} is not an R/W access")
                if not 0 <= op.addr < self.address_space:
                    fail(f"patterns[{i}]",
                         f"address {op.addr} outside space 0..{self.address_space - 1}")
        if self.policy not in PLACEMENT_POLICIES:
            fail("policy", f"unknown placement policy {self.policy!r}")
        return self

    def core_ids(self) -> tuple[str, ...]:
        return tuple(f"c{i + 1}" for i in range(self.num_cores))

    def initial_configuration(self) -> Configuration:
        """The transition-system start state: caches empty, main all shared."""
        cores = [CoreState(cid, pattern)
                 for cid, pattern in zip(self.core_ids(), self.patterns)]
        caches = [CacheState(CacheId(cid, lvl),
                             MemoryMap.of({}, self.capacities[lvl - 1]),
                             DstMultiset())
                  for cid in self.core_ids()
                  for lvl in range(1, self.levels + 1)]
        main = MemoryMap.of({n: Status.SH for n in range(self.address_space)},
                            self.address_space)
        return Configuration.of(cores, caches, main)


def parse_access(text: str) -> RuntimeStmt:
    parts = text.split()
    if len(parts) != 2 or parts[0] not in ("R", "W"):
        raise ScenarioError(f"access op {text!r} is not of the form 'R n' / 'W n'")
    try:
        addr = int(parts[1])
    except ValueError:
        raise ScenarioError(f"access op {text!r} has a non-integer address")
    return Read(addr) if parts[0] == "R" else Write(addr)


def pattern(*ops: str) -> tuple[RuntimeStmt, ...]:
    return tuple(parse_access(op) for op in ops)


BUILTIN_SCENARIOS: dict[str, Scenario] = {
    "S0": Scenario("S0", num_cores=1, levels=1, capacities=(1,),
                   address_space=1, patterns=(pattern("R 0"),)),
    "S1": Scenario("S1", num_cores=2, levels=2, capacities=(1, 2),
                   address_space=2,
                   patterns=(pattern("R 0", "W 0"), pattern("W 0", "R 1"))),
    "S2": Scenario("S2", num_cores=3, levels=1, capacities=(2,),
                   address_space=2,
                   patterns=(pattern("R 0", "W 0"),
                             pattern("W 0", "R 1"),
                             pattern("R 1", "W 1", "R 0"))),
    "S3": Scenario("S3", num_cores=3, levels=2, capacities=(1, 2),
                   address_space=2,
                   patterns=(pattern("W 0", "R 1", "W 1"),
                             pattern("R 0", "W 0"),
                             pattern("R 1", "W 0", "R 0", "R 1"))),
    # two cores contending on one block through a single cache level;
    # the confluence acceptance run uses this alongside S0
    "S0X": Scenario("S0X", num_cores=2, levels=1, capacities=(1,),
                    address_space=1,
                    patterns=(pattern("R 0"), pattern("W 0"))),
}


def scenario_from_dict(data: dict, source: str = "<dict>") -> Scenario:
    try:
        raw_patterns = data["patterns"]
        patterns = tuple(tuple(parse_access(op) for op in ops) for ops in raw_patterns)
        sc = Scenario(
            name=str(data.get("name", source)),
            num_cores=int(data["num_cores"]),
            levels=int(data["levels"]),
            capacities=tuple(int(c) for c in data["capacities"]),
            address_space=int(data["address_space"]),
            patterns=patterns,
            policy=str(data.get("policy", "direct")),
            seed=int(data.get("seed", 0)),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{source}: malformed scenario: {exc}")
    return sc.validate()


def parse_scenario(path_or_name: Union[str, Path]) -> Scenario:
    """Load a scenario: a built-in name (S0..S3, S0X) or a JSON file path."""
    name = str(path_or_name)
    if name in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name]
    path = Path(path_or_name)
    if not path.exists():
        raise ScenarioError(f"{name}: not a built-in scenario and no such file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{name}: invalid JSON: {exc}")
    return scenario_from_dict(data, source=name)
