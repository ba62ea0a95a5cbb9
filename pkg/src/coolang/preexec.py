"""Pre-execution: bind every live expression before anything runs.

The walker moves through the code table in address order, skipping
declaration templates, and hands each longest expression to the search.
Variable declarations populate a static record universe (one record per
scope, class instances share their class record) so that matching can
answer storage questions. A derivation marker pauses the walk to build
the reverse function's body from the forward one.
"""

from __future__ import annotations

from typing import Callable, Optional

from .addresses import Address
from .code import (
    CodeType,
    ExecFlag,
    ExtendedLine,
    OperandKind,
    Tables,
    split_markers,
)
from .matching import BindContext
from .records import Path, Record
from .search import BindOutcome, Observer, SearchOptions, bind_expression


class PreexecUniverse:
    """Static records standing in for the regions that will exist at runtime."""

    def __init__(self, tables: Tables):
        self.tables = tables
        self.global_record = Record(scope=None)
        self._by_scope: dict[Address, Record] = {}
        self._class_names: dict[str, Address] = {
            info.name: scope for scope, info in tables.classes.items()
        }

    def record_for(self, scope: Optional[Address]) -> Record:
        if scope is None:
            return self.global_record
        rec = self._by_scope.get(scope)
        if rec is None:
            info = self.tables.scopes[scope]
            rec = Record(scope=scope, parent=self.record_for(info.parent))
            if scope in self.tables.classes:
                for p in self.tables.classes[scope].parents:
                    rec.param_query_links.append(self.record_for(p))
            self._by_scope[scope] = rec
        return rec

    def declare_from(self, line: ExtendedLine) -> None:
        rec = self.record_for(line.scope)
        name = split_markers(line.result.text)[0]
        if line.left.kind is OperandKind.IDENT and line.left.text:
            # instance declaration: all instances share the class record here
            cls = self._class_names.get(line.left.text)
            rec.declare(name, self.record_for(cls) if cls is not None else None)
        else:
            rec.declare(name)

    # --- resolution hooks ---

    def resolve(
        self, scope: Optional[Address], bare: str, skip_current: bool
    ) -> Optional[Path]:
        return self.record_for(scope).resolve(bare, skip_current=skip_current)

    def path_of_access(
        self, addr: Address, scope: Optional[Address]
    ) -> Optional[Path]:
        ln = self.tables.code.get(addr)
        if ln is None or ln.ctype is not CodeType.ACCESS_MEMBER:
            return None
        base = ln.left
        if base.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(base.text)
            p = self.record_for(scope).resolve(bare, skip_current=out)
        elif base.kind is OperandKind.ADDRESS:
            p = self.path_of_access(base.addr, scope)
        else:
            return None
        if p is None:
            return None
        holder = p.read()
        if not isinstance(holder, Record):
            return None
        return holder.resolve_member(ln.right.text)

    def class_of_instance(
        self, receiver: str, scope: Optional[Address]
    ) -> Optional[Address]:
        parts = receiver.split(".")
        bare, _, _, out = split_markers(parts[0])
        p = self.record_for(scope).resolve(bare, skip_current=out)
        for comp in parts[1:]:
            if p is None:
                return None
            holder = p.read()
            if not isinstance(holder, Record):
                return None
            p = holder.resolve_member(comp)
        if p is None:
            return None
        value = p.read()
        if isinstance(value, Record) and value.scope in self.tables.classes:
            return value.scope
        return None

    def context_for(self, scope: Optional[Address]) -> BindContext:
        return BindContext(
            tables=self.tables,
            stmt_scope=scope,
            resolve=self.resolve,
            resolve_path_line=lambda addr: self.path_of_access(addr, scope),
            instance_class=lambda recv: self.class_of_instance(recv, scope),
        )


def preexecute(
    tables: Tables,
    options: Optional[SearchOptions] = None,
    observer: Optional[Observer] = None,
    visits: Optional[dict[Address, int]] = None,
    on_bound: Optional[Callable[[Address, BindOutcome], None]] = None,
) -> PreexecUniverse:
    """Bind the whole table in place; returns the record universe used."""
    from .inversion import derive_reverse_body

    opts = options or SearchOptions()
    uni = PreexecUniverse(tables)

    a = tables.code.first_address()
    while a is not None:
        ln = tables.code[a]
        if ln.ctype is CodeType.SCOPE_START and ln.exec_flag is ExecFlag.FALSE:
            a = tables.code.next_after(tables.scopes[a].end)
            continue
        if ln.ctype is CodeType.VAR_DECL:
            uni.declare_from(ln)
            a = tables.code.next_after(a)
            continue
        if ln.ctype is CodeType.EXPR:
            run = tables.expression_run(a)
            last = run[-1].address
            if all(l.bound is not None for l in run):
                a = tables.code.next_after(last)
                continue
            if visits is not None:
                visits[run[0].address] = visits.get(run[0].address, 0) + 1
            outcome = bind_expression(
                tables, run, uni.context_for(ln.scope), opts, observer
            )
            if on_bound is not None:
                on_bound(run[0].address, outcome)
            if outcome.mapping:
                a = outcome.segment.terminator
            else:
                a = tables.code.next_after(last)
            continue
        if ln.ctype is CodeType.DERIVE_FUNC:
            derive_reverse_body(tables, uni, ln, opts, observer)
            a = tables.code.next_after(a)
            continue
        a = tables.code.next_after(a)

    tables.preexecuted = True
    return uni
