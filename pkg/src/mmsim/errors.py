"""Exception types shared across the simulator."""


class MmsimError(Exception):
    """Base class for all simulator errors."""


class MalformedCacheIdError(MmsimError):
    """Cache identifier does not fit the hierarchy (level out of range)."""


class RuleNotEnabled(MmsimError):
    """A transition rule was applied whose premises do not hold.

    The message names the failing premise.
    """


class ScenarioError(MmsimError):
    """Scenario file or definition violates the schema."""


class UnknownKindError(MmsimError):
    """Object creation for a behavior name that is not registered."""


class UnknownMethodError(MmsimError):
    """Call to a method the target behavior does not define."""


class DuplicateKindError(MmsimError):
    """A behavior name was registered twice."""


class NotStableError(MmsimError):
    """An operation that requires a stable global state got an unstable one."""


class DeadlockError(MmsimError):
    """Cycle of objects blocked on synchronous calls; names the cycle."""


class StuckError(MmsimError):
    """No process is schedulable but work is pending (and no sync-call cycle)."""


class ContractError(MmsimError):
    """A runtime-checked model contract failed (encapsulation, sync-call
    frame, annotation exclusivity, assertion statements)."""
