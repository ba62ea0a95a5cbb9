"""Multi-level line addresses.

An address is a tuple of positive-width int digits, compared front to back
with zero padding on the shorter one: (3,) < (3,0,1) < (3,1) < (3,1,1) < (3,2).
First and last digits must be nonzero so padding never collides with a
real address.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Iterator, Optional


@total_ordering
@dataclass(frozen=True, init=False)
class Address:
    digits: tuple[int, ...]

    def __init__(self, digits: Iterable[int]):
        ds = tuple(int(d) for d in digits)
        if not ds:
            raise ValueError("empty address")
        if any(d < 0 for d in ds):
            raise ValueError(f"negative digit in address {ds}")
        if ds[0] == 0 or ds[-1] == 0:
            raise ValueError(f"first and last digit must be nonzero: {ds}")
        object.__setattr__(self, "digits", ds)

    def _padded(self, n: int) -> tuple[int, ...]:
        return self.digits + (0,) * (n - len(self.digits))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Address):
            return NotImplemented
        return self.digits == other.digits

    def __lt__(self, other: "Address") -> bool:
        if not isinstance(other, Address):
            return NotImplemented
        n = max(len(self.digits), len(other.digits))
        return self._padded(n) < other._padded(n)

    def __hash__(self) -> int:
        # No trailing zeros allowed, so digits are canonical.
        return hash(self.digits)

    def __repr__(self) -> str:
        return f"Address({self})"

    def __str__(self) -> str:
        return ".".join(map(str, self.digits))

    @classmethod
    def parse(cls, text: str) -> "Address":
        return cls(int(p) for p in text.split("."))


def allocate_between(lo: Optional[Address], hi: Optional[Address]) -> Address:
    """Return a fresh address strictly between lo and hi.

    Either bound may be None (open on that side). Walks digit positions of
    the zero-padded bounds: bumps the low digit where the gap allows,
    otherwise commits the low digit and bumps one level deeper.
    """
    if lo is None:
        return Address((1,)) if hi is None else _below(hi)
    if hi is None:
        return Address((lo.digits[0] + 1,))
    if not lo < hi:
        raise ValueError(f"allocate_between needs lo < hi, got {lo} >= {hi}")

    n = max(len(lo.digits), len(hi.digits))
    lo_p = lo._padded(n)
    hi_p = hi._padded(n)
    prefix: list[int] = []
    for i in range(n):
        l, h = lo_p[i], hi_p[i]
        if l + 1 < h:
            return Address(prefix + [l + 1])
        if l < h:
            # Gap of exactly one: commit the low digit; everything with
            # this prefix already sorts below hi, so only lo bounds us.
            nxt = lo_p[i + 1] if i + 1 < n else 0
            return Address(prefix + [l, nxt + 1])
        prefix.append(l)
    raise AssertionError(f"unreachable: {lo} < {hi} had no differing digit")


def _below(hi: Address) -> Address:
    """An address strictly below hi, with no lower bound."""
    prefix: list[int] = []
    for i, d in enumerate(hi.digits):
        if d > 1:
            return Address(prefix + [d - 1])
        if d == 1 and i > 0:
            return Address(prefix + [0, 1])
        prefix.append(d)
    raise ValueError(f"no room below {hi}")


class Allocator:
    """allocate_between with a taken-set so fresh addresses never collide."""

    def __init__(self, taken: Iterable[Address] = ()):
        self._taken = set(taken)

    def reserve(self, addr: Address) -> None:
        self._taken.add(addr)

    def release(self, addr: Address) -> None:
        self._taken.discard(addr)

    def between(self, lo: Optional[Address], hi: Optional[Address]) -> Address:
        a = allocate_between(lo, hi)
        while a in self._taken:
            a = allocate_between(a, hi)
        self._taken.add(a)
        return a

    def run_between(
        self, lo: Optional[Address], hi: Optional[Address], count: int
    ) -> list[Address]:
        """count fresh ascending addresses strictly inside (lo, hi)."""
        out: list[Address] = []
        cur = lo
        for _ in range(count):
            cur = self.between(cur, hi)
            out.append(cur)
        return out


def initial_addresses(count: int) -> Iterator[Address]:
    """Single-level addresses 1..count for freshly compiled lines."""
    for i in range(1, count + 1):
        yield Address((i,))
