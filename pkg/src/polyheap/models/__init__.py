"""Bundled memory-model instances, keyed by registry name."""

from __future__ import annotations

from ..memmodel import MemoryModelBundle
from .block_offset import instantiate_block_offset
from .chunks import instantiate_chunks
from .frac import instantiate_frac
from .linear import instantiate_linear
from .objects import instantiate_objects

_FACTORIES = {
    "linear": lambda: instantiate_linear("exact"),
    "linear-unique": lambda: instantiate_linear("unique"),
    "linear-cut": lambda: instantiate_linear("cut"),
    "linear-ox": lambda: instantiate_linear("noneg"),
    "frac": instantiate_frac,
    "block-offset": instantiate_block_offset,
    "objects": instantiate_objects,
    "chunks": instantiate_chunks,
}

MODEL_NAMES = tuple(_FACTORIES) + ("cheri",)


def get_model(name: str) -> MemoryModelBundle:
    if name == "cheri":
        raise NotImplementedError(
            "the capability-machine model is documented as a future instance"
        )
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}") from None


def sabotage(bundle: MemoryModelBundle) -> MemoryModelBundle:
    """Test hook: break composition (overlapping keys are silently merged)
    so the conformance harness has something to refute."""
    import copy

    broken = copy.copy(bundle.cmm)

    class _Broken(type(bundle.cmm)):
        def compose(self, a, b):
            if isinstance(a, dict) and isinstance(b, dict):
                return {**a, **b}
            return super().compose(a, b)

    broken.__class__ = _Broken
    return MemoryModelBundle(
        name=bundle.name + "-sabotaged",
        cmm=broken,
        rm=bundle.rm,
        smm=bundle.smm,
        declared_soundness=bundle.declared_soundness,
    )
