from .core import (Address, CacheId, CacheState, Configuration, CoreId,
                   CoreState, DstMultiset, Event, EventLog, Fetch, FetchB,
                   FetchW, Flush, MemoryMap, Read, ReadBl, Status, Write,
                   WriteBl, cache_position, direct_mapped, select, status_of)
from .semantics import (EVENT_RULES, ReachReport, RuleInstance, RuleName,
                        TssEngine, apply_rule, check_msi, enabled, explore,
                        stale_access_check, successors)
