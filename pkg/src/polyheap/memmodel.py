"""The pluggable memory-model interface.

A memory-model bundle packages:

  * a concrete memory model: the state type the concrete interpreter
    threads, with composition (forming a partial commutative monoid with
    the empty memory) and the concrete semantics of its actions;
  * a resource model: the model's atomic spatial assertions and their
    satisfaction relation;
  * a symbolic memory model: the symbolic state type, its satisfaction
    relation against concrete memories, symbolic action semantics, and
    the consume/produce operations the engine lifts into assertion
    consumption;
  * declared soundness: which of the over/under-approximate obligation
    suites (see polyheap.conformance) the model claims to satisfy.

Models are capability records: instances carry no mutable state and every
operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .values import NIL, TRUE, FALSE, value_key


class _Freed:
    """Negative-information marker recording deallocation (or deletion)."""

    __slots__ = ()

    def __repr__(self):
        return "freed"

    def __reduce__(self):
        return (_freed_instance, ())


def _freed_instance():
    return FREED


FREED = _Freed()


@dataclass(frozen=True)
class Bounds:
    """Finite search space for generators, enumeration and trials."""

    value_domain: tuple = (NIL, TRUE, FALSE, 0, 1, 2, 3, "a")
    max_cells: int = 2
    max_addresses: int = 3
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.value_domain:
            raise ValueError("value domain must be non-empty")
        if min(self.max_cells, self.max_addresses, self.trials) <= 0:
            raise ValueError("bounds must be positive")

    def key(self):
        return (
            tuple(value_key(v) for v in self.value_domain),
            self.max_cells,
            self.max_addresses,
            self.trials,
            self.seed,
        )

    def sorted_domain(self) -> list:
        return sorted(self.value_domain, key=value_key)


DEFAULT_BOUNDS = Bounds()


class UnknownActionError(KeyError):
    pass


class ConcreteMemoryModel:
    """Concrete state type + actions. Subclasses provide everything."""

    actions: tuple = ()

    @property
    def empty(self):
        raise NotImplementedError

    def is_wf(self, mem) -> bool:
        raise NotImplementedError

    def compose(self, a, b):
        """The partial composition operator; None when undefined."""
        raise NotImplementedError

    def exec_action(self, mem, name, args, max_addresses: int):
        """All results of running the action: [(Outcome, mem', values)].
        Allocation enumerates the `max_addresses` least fresh addresses."""
        raise NotImplementedError

    def enumerate_splits(self, mem):
        """Bounded enumeration of (m1, m2) with m1 . m2 = mem."""
        raise NotImplementedError

    def generator(self, bounds: Bounds):
        """Deterministic stream of well-formed memories within bounds."""
        raise NotImplementedError

    def action_cases(self, bounds: Bounds):
        """(name, args) pairs worth testing within bounds."""
        raise NotImplementedError

    def mem_values(self, mem):
        """Values syntactically present in the memory (for witness domains)."""
        raise NotImplementedError

    def addr_span(self, mem) -> int:
        """How many addresses the memory occupies; bounds the widening of
        fresh-address windows in the conformance harness."""
        return len(mem) if isinstance(mem, dict) else 0


class ResourceModel:
    arities: dict = {}

    def holds_resource(self, mem, name, ins, outs) -> bool:
        raise NotImplementedError


class SymbolicMemoryModel:
    """Symbolic state type, satisfaction, actions, consume/produce."""

    @property
    def empty(self):
        raise NotImplementedError

    def concretize(self, theta, smem):
        """The unique concrete memory denoted by smem under theta, or None.
        All bundled models are symbolic liftings, so denotation is
        pointwise evaluation plus disjointness of the composition."""
        raise NotImplementedError

    def sat_mem(self, theta, mem, smem) -> bool:
        got = self.concretize(theta, smem)
        return got is not None and got == mem

    def lvars(self, smem) -> frozenset:
        raise NotImplementedError

    def exec_action(self, smem, name, args, fresh):
        """All symbolic results [(Outcome, smem', pc-conjunct tuple, outs)].
        miss/abort results must leave the memory unchanged. `fresh` yields
        fresh logical variable names."""
        raise NotImplementedError

    def consume_res(self, mode, oracle, name, ins, smem):
        """[(Outcome, oracle', outs, (smem', check-conjuncts, pc-conjuncts))].
        check-conjuncts must be implied by the consuming state; pc-conjuncts
        are appended to its path condition."""
        raise NotImplementedError

    def produce_res(self, name, ins, outs, smem):
        """[(smem', pc-conjuncts)]; empty when production is undefined."""
        raise NotImplementedError

    def mem_to_assertion(self, smem) -> list:
        """Render the memory as a list of resource-assertion conjuncts."""
        raise NotImplementedError

    def lift(self, mem, fresh, ground: bool):
        """Harness helper: a symbolic memory of the same shape as `mem`
        plus the interpretation tying them together. Ground lifting embeds
        values as literals; otherwise fresh logical variables name every
        position."""
        raise NotImplementedError

    # optional capability: bi-abductive fixes
    fixes = None


@dataclass(frozen=True)
class Soundness:
    ox: bool
    ux: bool


@dataclass(frozen=True)
class MemoryModelBundle:
    name: str
    cmm: ConcreteMemoryModel
    rm: ResourceModel
    smm: SymbolicMemoryModel
    declared_soundness: Soundness

    def supports_fixes(self) -> bool:
        return self.smm.fixes is not None
