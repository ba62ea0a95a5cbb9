"""Pattern alignment between expression branches and declarations.

A declaration pattern matches a branch when their operator trees align and
every leaf pair passes one of: equal concrete values, value against a
same-type formal, variable against a same-type formal, an out:-marked
actual sharing storage with the branch variable, or a member path that
resolves and then passes one of the above. Pending states must agree at
every leaf: a pending branch node needs a pending or unrelated formal, a
determined one needs a determined or unrelated formal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .addresses import Address
from .code import (
    OUT_MARK,
    SLOT_LEFT,
    SLOT_RIGHT,
    CodeType,
    ExtendedLine,
    FunctionInfo,
    Operand,
    OperandKind,
    PendFlag,
    Tables,
    split_markers,
)
from .records import Path
from .segments import Segment


@dataclass
class BindContext:
    """Resolution hooks the matcher needs from the walking engine."""

    tables: Tables
    stmt_scope: Optional[Address]
    resolve: Callable[[Optional[Address], str, bool], Optional[Path]]
    resolve_path_line: Callable[[Address], Optional[Path]]
    instance_class: Callable[[str], Optional[Address]]


@dataclass
class BoundValue:
    operand: Operand
    pending: bool
    line_addr: Address
    slot: int


@dataclass
class Match:
    fn: FunctionInfo
    root: Address
    matched: list[Address] = field(default_factory=list)
    bindings: dict[str, BoundValue] = field(default_factory=dict)


def class_mro(tables: Tables, scope: Address) -> list[Address]:
    """Class scope plus ancestors, own first, parents leftmost-depth-first."""
    out: list[Address] = []
    seen: set[Address] = set()

    def walk(s: Address) -> None:
        if s in seen:
            return
        seen.add(s)
        out.append(s)
        for p in tables.classes[s].parents:
            walk(p)

    walk(scope)
    return out


def member_functions(tables: Tables, class_scope: Address) -> list[FunctionInfo]:
    """Member functions, own before inherited, source order within a class."""
    out: list[FunctionInfo] = []
    for s in class_mro(tables, class_scope):
        fns = [f for f in tables.functions.values() if f.class_scope == s]
        fns.sort(key=lambda f: f.func_op)
        out.extend(fns)
    return out


def _value_type(value) -> str:
    if value is None or isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    return "instance"


class _Matcher:
    def __init__(self, segment: Segment, fn: FunctionInfo, ctx: BindContext):
        self.seg = segment
        self.fn = fn
        self.ctx = ctx
        self.tables = ctx.tables
        self.decl_parent = ctx.tables.scopes[fn.decl_scope].parent
        self.matched: list[Address] = []
        self.bindings: dict[str, BoundValue] = {}

    def match_line(self, seg_ln: ExtendedLine, decl_ln: ExtendedLine) -> bool:
        # a builtin prebind is only a default and may be claimed by a pattern;
        # a line already owned by another function may not
        if seg_ln.is_user_bound or seg_ln.ctype is not CodeType.EXPR:
            return False
        if not self._op_matches(seg_ln.op.text, decl_ln.op.text):
            return False
        for s in (SLOT_LEFT, SLOT_RIGHT):
            if not self._match_operand(seg_ln, s, decl_ln, s):
                return False
        self.matched.append(seg_ln.address)
        return True

    def _op_matches(self, seg_op: str, decl_op: str) -> bool:
        if seg_op == decl_op:
            return True
        if "." in seg_op and self.fn.class_scope is not None:
            receiver, fname = seg_op.rsplit(".", 1)
            if fname != decl_op:
                return False
            cls = self.ctx.instance_class(receiver)
            if cls is None:
                return False
            return self.fn.class_scope in class_mro(self.tables, cls)
        return False

    def _match_operand(
        self, seg_ln: ExtendedLine, sslot: int, decl_ln: ExtendedLine, dslot: int
    ) -> bool:
        d = decl_ln.slot(dslot)
        s = seg_ln.slot(sslot)
        if d.is_empty or s.is_empty:
            return d.is_empty and s.is_empty

        if d.kind is OperandKind.ADDRESS:
            # internal pattern operator: trees must keep aligning
            child = self.tables.code.get(d.addr)
            if child is None or child.ctype is not CodeType.EXPR:
                return False
            if s.kind is not OperandKind.ADDRESS or s.addr not in self.seg.lines:
                return False
            return self.match_line(self.seg[s.addr], child)

        # a pending slot must meet something solvable; a determined slot
        # must meet nothing that still carries an unbound pending leaf
        seg_pending = self.seg.slot_pending(seg_ln, sslot)
        dpend = decl_ln.pending[dslot]
        if dpend is PendFlag.TRUE and not seg_pending:
            return False
        if dpend is PendFlag.FALSE and self.seg.slot_raw_pending(seg_ln, sslot):
            return False

        if d.kind in (OperandKind.NUMBER, OperandKind.TEXT):
            # condition 1: the same concrete value
            return s.kind is d.kind and s.payload() == d.payload()

        # declaration-side identifier
        bare_d = split_markers(d.text)[0]
        if decl_ln.formal[dslot]:
            if not self._type_compatible(seg_ln, sslot):
                return False
            bv = BoundValue(
                operand=s,
                pending=seg_pending,
                line_addr=seg_ln.address,
                slot=sslot,
            )
            if bare_d:
                prior = self.bindings.get(bare_d)
                if prior is not None:
                    return self._same_actual(prior, bv)
                self.bindings[bare_d] = bv
            return True

        # condition 4: out:-marked actual, same storage on both sides
        decl_path = self.ctx.resolve(self.decl_parent, bare_d, False)
        seg_path = self._storage_of(seg_ln, sslot)
        if decl_path is None or seg_path is None:
            return False
        return decl_path.storage() == seg_path.storage()

    def _storage_of(self, seg_ln: ExtendedLine, slot: int) -> Optional[Path]:
        o = seg_ln.slot(slot)
        if o.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(o.text)
            return self.ctx.resolve(self.ctx.stmt_scope, bare, out)
        if o.kind is OperandKind.ADDRESS and o.addr not in self.seg.lines:
            ln = self.tables.code.get(o.addr)
            if ln is not None and ln.ctype is CodeType.ACCESS_MEMBER:
                # condition 5: resolve the member path, then compare storage
                return self.ctx.resolve_path_line(o.addr)
        return None

    def _type_compatible(self, seg_ln: ExtendedLine, slot: int) -> bool:
        """Formals are numeric; the branch side must not be provably otherwise."""
        o = seg_ln.slot(slot)
        if o.kind is OperandKind.NUMBER:
            return True
        if o.kind is OperandKind.TEXT:
            return False
        if o.kind is OperandKind.IDENT:
            path = self._storage_of(seg_ln, slot)
            if path is None:
                return True  # unresolved variables read as numbers
            return _value_type(path.read()) == "number"
        if o.kind is OperandKind.ADDRESS:
            if o.addr in self.seg.lines:
                return True  # computed subtree
            ln = self.tables.code.get(o.addr)
            if ln is not None and ln.ctype is CodeType.ACCESS_MEMBER:
                path = self.ctx.resolve_path_line(o.addr)
                if path is None:
                    return True
                return _value_type(path.read()) == "number"
            return True
        return False

    def _same_actual(self, a: BoundValue, b: BoundValue) -> bool:
        """A repeated formal only matches the same actual again."""
        oa, ob = a.operand, b.operand
        if oa.kind in (OperandKind.NUMBER, OperandKind.TEXT):
            return ob.kind is oa.kind and ob.payload() == oa.payload()
        if oa.kind is OperandKind.IDENT:
            if ob.kind is not OperandKind.IDENT:
                return False
            pa = self._storage_of(self.seg[a.line_addr], a.slot)
            pb = self._storage_of(self.seg[b.line_addr], b.slot)
            if pa is not None and pb is not None:
                return pa.storage() == pb.storage()
            return split_markers(oa.text)[0] == split_markers(ob.text)[0]
        if oa.kind is OperandKind.ADDRESS:
            if ob.kind is not OperandKind.ADDRESS:
                return False
            if oa.addr in self.seg.lines and ob.addr in self.seg.lines:
                return self._subtree_digest(oa.addr) == self._subtree_digest(ob.addr)
            return oa.addr == ob.addr
        return False

    def _subtree_digest(self, addr: Address):
        ln = self.seg[addr]
        slots = []
        for s in (SLOT_LEFT, SLOT_RIGHT):
            o = ln.slot(s)
            if o.kind is OperandKind.ADDRESS and o.addr in self.seg.lines and o.addr != addr:
                slots.append(self._subtree_digest(o.addr))
            elif o.kind is OperandKind.IDENT:
                slots.append(("var", split_markers(o.text)[0], ln.pending[s].value))
            else:
                slots.append((o.kind.value, o.payload()))
        return (ln.op.text, tuple(slots))


def match_branch(
    segment: Segment, branch: Address, fn: FunctionInfo, ctx: BindContext
) -> Optional[Match]:
    """Align a declaration pattern with the branch rooted at an unbound line."""
    decl_root = ctx.tables.code[fn.decl_root]
    m = _Matcher(segment, fn, ctx)
    if not m.match_line(segment[branch], decl_root):
        return None
    return Match(fn=fn, root=branch, matched=m.matched, bindings=m.bindings)
