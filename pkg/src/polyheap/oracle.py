"""Angelic-choice oracles.

An oracle is an indexable infinite stream of naturals. Every angelic
choice reads index 0 and shifts by one, so `shift(k).query(n) ==
query(n + k)`; the `offset` field lets tests count how many choices a
rule consumed. Choice sets are always deterministically ordered, so a
prefix of naturals pins an execution path.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Oracle:
    prefix: tuple = ()
    default: int = 0
    offset: int = 0

    def query(self, n: int) -> int:
        i = self.offset + n
        if i < len(self.prefix):
            return self.prefix[i]
        return self.default

    def shift(self, k: int) -> "Oracle":
        return Oracle(self.prefix, self.default, self.offset + k)

    def pick(self, options: list):
        """One angelic choice: (chosen element, shifted oracle)."""
        if not options:
            raise ValueError("cannot pick from an empty choice set")
        idx = self.query(0) % len(options)
        return options[idx], self.shift(1)

    @classmethod
    def constant(cls, value: int = 0) -> "Oracle":
        return cls((), value, 0)

    @classmethod
    def of(cls, *choices: int) -> "Oracle":
        return cls(tuple(choices), 0, 0)
