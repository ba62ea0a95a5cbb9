"""Core instruction representation shared by every pipeline stage.

A program is a sequence of quaternion lines. The compiler emits bare
CodeLine records; the loader turns them into ExtendedLine records keyed
by multi-level address and grouped into the four tables.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional

from .addresses import Address


class CodeType(Enum):
    VAR_DECL = "var"
    FUNC_OP = "func"
    DERIVE_FUNC = "derive"
    SCOPE_START = "sstart"
    SCOPE_END = "send"
    EXPR = "expr"
    JUMP = "jump"
    EXPR_END = "eend"
    RETURN = "ret"
    ACCESS_MEMBER = "member"
    CLASS_OP = "class"


class OperandKind(Enum):
    NUMBER = "n"
    TEXT = "s"
    IDENT = "i"
    ADDRESS = "a"
    EMPTY = "e"


class PendFlag(Enum):
    TRUE = "T"
    FALSE = "F"
    UNRELATED = "U"


class ExecFlag(Enum):
    TRUE = "T"
    FALSE = "F"
    COND = "C"


@dataclass(frozen=True)
class Operand:
    kind: OperandKind
    num: float = 0.0
    text: str = ""
    addr: Optional[Address] = None

    @staticmethod
    def number(value: float) -> "Operand":
        return Operand(OperandKind.NUMBER, num=float(value))

    @staticmethod
    def string(value: str) -> "Operand":
        return Operand(OperandKind.TEXT, text=value)

    @staticmethod
    def ident(name: str) -> "Operand":
        return Operand(OperandKind.IDENT, text=name)

    @staticmethod
    def address(addr: Address) -> "Operand":
        return Operand(OperandKind.ADDRESS, addr=addr)

    @staticmethod
    def empty() -> "Operand":
        return _EMPTY

    @property
    def is_empty(self) -> bool:
        return self.kind is OperandKind.EMPTY

    def payload(self):
        if self.kind is OperandKind.NUMBER:
            return self.num
        if self.kind in (OperandKind.TEXT, OperandKind.IDENT):
            return self.text
        if self.kind is OperandKind.ADDRESS:
            return self.addr
        return None

    def __repr__(self) -> str:
        if self.is_empty:
            return "∅"
        return f"{self.kind.value}:{self.payload()}"


_EMPTY = Operand(OperandKind.EMPTY)


# Marker prefixes on identifier operands, as emitted by the compiler.
# The loader strips them into the pending/formal flag arrays.
PENDING_MARK = "$"
UNRELATED_MARK = "#"
OUT_MARK = "out:"


def split_markers(name: str) -> tuple[str, bool, bool, bool]:
    """name -> (bare, pending, unrelated, out)."""
    pending = unrelated = out = False
    while True:
        if name.startswith(PENDING_MARK):
            pending, name = True, name[1:]
        elif name.startswith(UNRELATED_MARK):
            unrelated, name = True, name[1:]
        elif name.startswith(OUT_MARK):
            out, name = True, name[len(OUT_MARK):]
        else:
            return name, pending, unrelated, out


@dataclass
class CodeLine:
    """Compiler output: code type plus the raw quaternion.

    Address operands refer to 1-based emission indices wrapped as
    single-level addresses.
    """

    ctype: CodeType
    op: Operand = _EMPTY
    left: Operand = _EMPTY
    right: Operand = _EMPTY
    result: Operand = _EMPTY

    @property
    def quaternion(self) -> tuple[Operand, Operand, Operand, Operand]:
        return (self.op, self.left, self.right, self.result)


# Slot indices into the quaternion flag arrays.
SLOT_OP, SLOT_LEFT, SLOT_RIGHT, SLOT_RESULT = range(4)

BUILTIN = "builtin"


@dataclass
class ExtendedLine:
    address: Address
    scope: Optional[Address]
    exec_flag: ExecFlag
    ctype: CodeType
    op: Operand
    left: Operand
    right: Operand
    result: Operand
    # formal-parameter meaning inside declaration scopes, local-scope-lookup
    # meaning elsewhere (shared storage per the table layout)
    formal: list[bool] = field(default_factory=lambda: [False] * 4)
    pending: list[PendFlag] = field(default_factory=lambda: [PendFlag.FALSE] * 4)
    bound: object = None  # None | BUILTIN | Address of the bound function
    bound_reverse: bool = False  # bound function solves rather than computes
    root: bool = False

    def slot(self, i: int) -> Operand:
        return (self.op, self.left, self.right, self.result)[i]

    def set_slot(self, i: int, val: Operand) -> None:
        attr = ("op", "left", "right", "result")[i]
        setattr(self, attr, val)

    @property
    def type_flags(self) -> tuple[OperandKind, ...]:
        return tuple(o.kind for o in (self.op, self.left, self.right, self.result))

    @property
    def is_user_bound(self) -> bool:
        return isinstance(self.bound, Address)

    def copy(self) -> "ExtendedLine":
        return ExtendedLine(
            address=self.address,
            scope=self.scope,
            exec_flag=self.exec_flag,
            ctype=self.ctype,
            op=self.op,
            left=self.left,
            right=self.right,
            result=self.result,
            formal=list(self.formal),
            pending=list(self.pending),
            bound=self.bound,
            bound_reverse=self.bound_reverse,
            root=self.root,
        )

    def __repr__(self) -> str:
        b = ""
        if self.bound is not None:
            b = f" bound={self.bound}{'*' if self.root else ''}"
        return (
            f"<{self.address} {self.ctype.value} "
            f"({self.op!r},{self.left!r},{self.right!r},{self.result!r}){b}>"
        )


class ScopeKind(Enum):
    DECL = "decl"
    BODY = "body"
    CLASS = "class"
    COND = "cond"
    PLAIN = "plain"
    GLOBAL = "global"


@dataclass
class ScopeInfo:
    kind: ScopeKind
    start: Address
    end: Address
    param_query: Optional[Address] = None  # body scopes: their decl scope
    parent: Optional[Address] = None  # enclosing scope's start address


@dataclass
class FunctionInfo:
    decl_scope: Address
    decl_root: Address
    body_scope: Optional[Address]
    returns: list[Address] = field(default_factory=list)
    is_exp: bool = False
    is_reverse: bool = False
    weight: float = 0.0
    func_op: Optional[Address] = None  # address of the FUNC_OP line (table key)
    name: Optional[str] = None  # operator text of the decl root, for diagnostics
    class_scope: Optional[Address] = None  # owning class scope, if a member


@dataclass
class ClassInfo:
    scope: Address
    name: str
    parents: list[Address] = field(default_factory=list)


class CodeTable:
    """Extended code lines keyed ascending by address."""

    def __init__(self, lines: Iterable[ExtendedLine] = ()):
        self._map: dict[Address, ExtendedLine] = {}
        self._keys: list[Address] = []
        for ln in lines:
            self.insert(ln)

    def insert(self, line: ExtendedLine) -> None:
        if line.address in self._map:
            raise KeyError(f"address {line.address} already in code table")
        bisect.insort(self._keys, line.address)
        self._map[line.address] = line

    def remove(self, addr: Address) -> ExtendedLine:
        line = self._map.pop(addr)
        idx = bisect.bisect_left(self._keys, addr)
        del self._keys[idx]
        return line

    def get(self, addr: Address) -> Optional[ExtendedLine]:
        return self._map.get(addr)

    def __getitem__(self, addr: Address) -> ExtendedLine:
        return self._map[addr]

    def __contains__(self, addr: Address) -> bool:
        return addr in self._map

    def __len__(self) -> int:
        return len(self._map)

    def first_address(self) -> Optional[Address]:
        return self._keys[0] if self._keys else None

    def last_address(self) -> Optional[Address]:
        return self._keys[-1] if self._keys else None

    def next_after(self, addr: Address) -> Optional[Address]:
        idx = bisect.bisect_right(self._keys, addr)
        return self._keys[idx] if idx < len(self._keys) else None

    def prev_before(self, addr: Address) -> Optional[Address]:
        idx = bisect.bisect_left(self._keys, addr)
        return self._keys[idx - 1] if idx > 0 else None

    def addresses(self) -> list[Address]:
        return list(self._keys)

    def lines(self) -> Iterator[ExtendedLine]:
        for k in self._keys:
            yield self._map[k]


@dataclass
class Tables:
    code: CodeTable = field(default_factory=CodeTable)
    scopes: dict[Address, ScopeInfo] = field(default_factory=dict)
    functions: dict[Address, FunctionInfo] = field(default_factory=dict)
    classes: dict[Address, ClassInfo] = field(default_factory=dict)
    preexecuted: bool = False

    def scope_of(self, line: ExtendedLine) -> Optional[ScopeInfo]:
        return self.scopes.get(line.scope) if line.scope is not None else None

    def scope_chain(self, scope_addr: Optional[Address]) -> list[Address]:
        """Scope start addresses from the given scope outward (global excluded)."""
        chain = []
        cur = scope_addr
        while cur is not None:
            chain.append(cur)
            cur = self.scopes[cur].parent
        return chain

    def function_at(self, func_op: Address) -> FunctionInfo:
        return self.functions[func_op]

    def function_by_decl(self, decl_scope: Address) -> Optional[FunctionInfo]:
        for fn in self.functions.values():
            if fn.decl_scope == decl_scope:
                return fn
        return None

    def class_of_scope(self, scope_addr: Address) -> Optional[ClassInfo]:
        return self.classes.get(scope_addr)

    def expression_run(self, addr: Address) -> list[ExtendedLine]:
        """The longest expression containing the EXPR line at addr.

        A longest expression is a maximal run of consecutive EXPR lines;
        any other code type (EXPR_END, RETURN, JUMP, scope markers, ...)
        truncates it.
        """
        line = self.code[addr]
        if line.ctype is not CodeType.EXPR:
            raise ValueError(f"{addr} is not an expression line")
        run = [line]
        cur = addr
        while True:
            prev = self.code.prev_before(cur)
            if prev is None or self.code[prev].ctype is not CodeType.EXPR:
                break
            run.insert(0, self.code[prev])
            cur = prev
        cur = addr
        while True:
            nxt = self.code.next_after(cur)
            if nxt is None or self.code[nxt].ctype is not CodeType.EXPR:
                break
            run.append(self.code[nxt])
            cur = nxt
        return run
