"""Active-record execution of preexecuted code.

Each region (the file, a scope, a function body) runs against one record.
Expression runs evaluate in two passes: forward for builtins and forward
functions, then backward for reverse functions, so a solver always finds
its required value already written by the lines above it.
"""

from __future__ import annotations

import math
from typing import Optional

from .addresses import Address
from .code import (
    BUILTIN,
    SLOT_LEFT,
    SLOT_RIGHT,
    CodeType,
    ExecFlag,
    ExtendedLine,
    Operand,
    OperandKind,
    PendFlag,
    ScopeKind,
    Tables,
    split_markers,
)
from .errors import CoolRuntimeError, ReverseUnsatisfied, UnresolvedIdentifier
from .records import Path, Record

_SKIPPED_KINDS = (ScopeKind.DECL, ScopeKind.BODY, ScopeKind.CLASS)


def _truthy(v) -> bool:
    if v is None:
        return False
    if isinstance(v, float):
        return v != 0.0
    return bool(v)


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return v
    if isinstance(v, Record):
        return f"<instance {v.id}>"
    return repr(v)


class Interpreter:
    def __init__(self, tables: Tables):
        if not tables.preexecuted:
            raise CoolRuntimeError("code must be preexecuted before it can run")
        self.tables = tables
        self.output: list[str] = []
        self.call_log: list[Address] = []
        self.global_record = Record(scope=None)
        self._ret_value = None

    def run(self) -> Record:
        first = self.tables.code.first_address()
        if first is not None:
            self._execute(self.global_record, first, None)
        return self.global_record

    # --- region execution ---

    def _execute(self, record: Record, start: Optional[Address], end: Optional[Address]) -> bool:
        """Run [start, end); True means a return unwound through here."""
        code = self.tables.code
        ip = start
        while ip is not None and ip in code and (end is None or ip < end):
            ln = code[ip]
            t = ln.ctype
            if t is CodeType.SCOPE_START:
                info = self.tables.scopes[ip]
                if ln.exec_flag is ExecFlag.FALSE or info.kind in _SKIPPED_KINDS:
                    ip = code.next_after(info.end)
                    continue
                child = Record(scope=ip, parent=record)
                try:
                    returned = self._execute(child, code.next_after(ip), info.end)
                finally:
                    child.destroy()
                if returned:
                    return True
                ip = code.next_after(info.end)
                continue
            if t is CodeType.EXPR:
                run = self.tables.expression_run(ip)
                self._eval_longest(record, run)
                ip = code.next_after(run[-1].address)
                continue
            if t is CodeType.VAR_DECL:
                self._declare(record, ln)
            elif t is CodeType.RETURN:
                self._ret_value = self._value(record, ln, SLOT_LEFT)
                return True
            elif t is CodeType.JUMP:
                if _truthy(self._value(record, ln, SLOT_LEFT)):
                    ip = ln.right.addr
                    continue
            # FUNC_OP, DERIVE_FUNC, CLASS_OP, ACCESS_MEMBER, EXPR_END,
            # SCOPE_END: nothing to do at the top level
            ip = code.next_after(ip)
        return False

    def _declare(self, record: Record, ln: ExtendedLine) -> None:
        name = split_markers(ln.result.text)[0]
        if ln.left.kind is OperandKind.IDENT and ln.left.text:
            cscope = self._class_scope_named(ln.left.text)
            record.declare(name, self._instantiate(cscope))
        else:
            record.declare(name)

    def _class_scope_named(self, name: str) -> Address:
        for scope, info in self.tables.classes.items():
            if info.name == name:
                return scope
        raise CoolRuntimeError(f"no class named {name!r}")

    def _instantiate(self, cscope: Address) -> Record:
        info = self.tables.scopes[cscope]
        rec = Record(scope=cscope, parent=self.global_record)
        for p in self.tables.classes[cscope].parents:
            rec.param_query_links.append(self._instantiate(p))
        self._execute(rec, self.tables.code.next_after(cscope), info.end)
        return rec

    # --- expression evaluation ---

    def _eval_longest(self, record: Record, run: list[ExtendedLine]) -> None:
        by_addr = {ln.address: ln for ln in run}
        done: set[Address] = set()

        def visit(ln: ExtendedLine) -> None:
            # children first: spliced lines may sit after their consumer
            if ln.address in done:
                return
            done.add(ln.address)
            if ln.is_user_bound and ln.root and ln.bound_reverse:
                return  # solve targets wait for the descending pass
            for slot in (SLOT_LEFT, SLOT_RIGHT):
                o = ln.slot(slot)
                if o.kind is OperandKind.ADDRESS and o.addr in by_addr:
                    visit(by_addr[o.addr])
            if ln.bound is BUILTIN:
                self._exec_builtin(record, ln)
            elif ln.is_user_bound and ln.root and not ln.bound_reverse:
                self._call(record, ln, ans=None)

        for ln in run:
            visit(ln)
        for ln in reversed(run):
            if ln.is_user_bound and ln.root and ln.bound_reverse:
                ans = record.data.get(ln.address)
                self._call(record, ln, ans=0.0 if ans is None else ans)

    def _value(self, record: Record, ln: ExtendedLine, slot: int):
        o = ln.slot(slot)
        if o.kind is OperandKind.NUMBER:
            return o.num
        if o.kind is OperandKind.TEXT:
            return o.text
        if o.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(o.text)
            v = self._name_path(record, bare, out).read()
            return 0.0 if v is None else v
        if o.kind is OperandKind.ADDRESS:
            target = self.tables.code.get(o.addr)
            if target is not None and target.ctype is CodeType.ACCESS_MEMBER:
                v = self._member_path(record, o.addr).read()
                return 0.0 if v is None else v
            v = record.data.get(o.addr)
            return 0.0 if v is None else v
        return None

    def _name_path(self, record: Record, bare: str, skip_current: bool) -> Path:
        p = record.resolve(bare, skip_current=skip_current)
        if p is None:
            # unresolved names spring into the current record as numbers
            p = record.declare(bare)
        return p

    def _member_path(self, record: Record, am_addr: Address) -> Path:
        ln = self.tables.code[am_addr]
        base = ln.left
        if base.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(base.text)
            holder_path = record.resolve(bare, skip_current=out)
            if holder_path is None:
                raise UnresolvedIdentifier(f"{bare!r} names no instance")
            holder = holder_path.read()
        else:
            holder = self._member_path(record, base.addr).read()
        if not isinstance(holder, Record):
            raise CoolRuntimeError(f"{ln.left.payload()!r} is not an instance")
        member = holder.resolve_member(ln.right.text)
        if member is None:
            raise UnresolvedIdentifier(
                f"instance has no member {ln.right.text!r}"
            )
        return member

    # --- builtins ---

    def _exec_builtin(self, record: Record, ln: ExtendedLine) -> None:
        op = ln.op.text
        if op == "=":
            v = self._value(record, ln, SLOT_LEFT)
            self._write_target(record, ln.result, v)
            return
        if op == "-->":
            self.output.append(_format_value(self._value(record, ln, SLOT_LEFT)))
            return
        if op == "neg":
            v = self._num(self._value(record, ln, SLOT_LEFT), ln)
            record.data[ln.address] = self._finite(-v, ln)
            return
        a = self._value(record, ln, SLOT_LEFT)
        b = self._value(record, ln, SLOT_RIGHT)
        record.data[ln.address] = self._apply(op, a, b, ln)

    def _write_target(self, record: Record, target: Operand, v) -> None:
        if target.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(target.text)
            self._name_path(record, bare, out).write(v)
            return
        if target.kind is OperandKind.ADDRESS:
            tl = self.tables.code.get(target.addr)
            if tl is not None and tl.ctype is CodeType.ACCESS_MEMBER:
                self._member_path(record, target.addr).write(v)
            else:
                record.data[target.addr] = v
            return
        raise CoolRuntimeError("assignment needs a place to write")

    def _num(self, v, ln: ExtendedLine) -> float:
        if isinstance(v, float):
            return v
        raise CoolRuntimeError(
            f"{ln.op.text!r} needs numbers, got {type(v).__name__} at {ln.address}"
        )

    def _finite(self, v: float, ln: ExtendedLine) -> float:
        if isinstance(v, complex) or not math.isfinite(v):
            raise CoolRuntimeError(f"{ln.op.text!r} left the number range at {ln.address}")
        return v

    def _apply(self, op: str, a, b, ln: ExtendedLine):
        if op == "==":
            return 1.0 if a == b else 0.0
        if op in ("<", ">", "<=", ">="):
            x, y = self._num(a, ln), self._num(b, ln)
            return 1.0 if eval_compare(op, x, y) else 0.0
        if op == "+" and isinstance(a, str) and isinstance(b, str):
            return a + b
        x, y = self._num(a, ln), self._num(b, ln)
        if op == "+":
            return self._finite(x + y, ln)
        if op == "-":
            return self._finite(x - y, ln)
        if op == "*":
            return self._finite(x * y, ln)
        if op == "/":
            if y == 0.0:
                raise CoolRuntimeError(f"division by zero at {ln.address}")
            return self._finite(x / y, ln)
        if op == "^":
            if x < 0.0 and y != math.floor(y):
                raise CoolRuntimeError(
                    f"fractional power of a negative number at {ln.address}"
                )
            if x == 0.0 and y < 0.0:
                raise CoolRuntimeError(f"zero to a negative power at {ln.address}")
            return self._finite(x**y, ln)
        raise CoolRuntimeError(f"no builtin evaluation for {op!r}")

    # --- function calls ---

    def _call(self, record: Record, call_root: ExtendedLine, ans) -> None:
        fn = self.tables.functions[call_root.bound]
        formals: dict[str, Path] = {}
        locals_: dict[str, object] = {}
        pending: list[tuple[str, Path]] = []
        self._align(
            record,
            self.tables.code[fn.decl_root],
            call_root,
            formals,
            locals_,
            pending,
        )

        parent = self.global_record
        if fn.class_scope is not None:
            start = record
            if "." in call_root.op.text:
                start = self._receiver(record, call_root.op.text)
            found = self._find_class_record(start, fn.class_scope)
            if found is None:
                raise CoolRuntimeError(
                    f"no instance of the class owning {fn.name!r} is reachable"
                )
            parent = found

        body = Record(scope=fn.body_scope, parent=parent, return_to=record)
        body.return_address = call_root.address
        for bare, path in formals.items():
            body.cross_ref[bare] = path
        for bare, v in locals_.items():
            body.declare(bare, v)
        if ans is not None:
            body.declare("ans", ans)

        self._ret_value = None
        info = self.tables.scopes[fn.body_scope]
        returned = self._execute(body, self.tables.code.next_after(fn.body_scope), info.end)
        body.destroy()
        if returned:
            record.data[call_root.address] = self._ret_value

        if ans is not None:
            for bare, path in pending:
                v = path.read()
                if v is None or (isinstance(v, float) and not math.isfinite(v)):
                    raise ReverseUnsatisfied(
                        f"{bare!r} was never solved by the reverse call"
                    )
        self.call_log.append(call_root.address)

    def _find_class_record(self, rec: Optional[Record], cscope: Address) -> Optional[Record]:
        """The nearest record of one class, inherited-class links included."""

        def through_links(r: Record, seen: set[int]) -> Optional[Record]:
            if r.scope == cscope:
                return r
            for link in r.param_query_links:
                if isinstance(link, Record) and id(link) not in seen:
                    seen.add(id(link))
                    found = through_links(link, seen)
                    if found is not None:
                        return found
            return None

        while rec is not None:
            found = through_links(rec, set())
            if found is not None:
                return found
            rec = rec.parent
        return None

    def _receiver(self, record: Record, dotted: str) -> Record:
        parts = dotted.split(".")[:-1]
        bare, _, _, out = split_markers(parts[0])
        path = record.resolve(bare, skip_current=out)
        if path is None:
            raise UnresolvedIdentifier(f"{bare!r} names no instance")
        holder = path.read()
        for comp in parts[1:]:
            if not isinstance(holder, Record):
                raise CoolRuntimeError(f"{bare!r} is not an instance")
            nxt = holder.resolve_member(comp)
            if nxt is None:
                raise UnresolvedIdentifier(f"instance has no member {comp!r}")
            holder = nxt.read()
        if not isinstance(holder, Record):
            raise CoolRuntimeError(f"{dotted!r} does not name an instance")
        return holder

    def _align(
        self,
        record: Record,
        decl_ln: ExtendedLine,
        seg_ln: ExtendedLine,
        formals: dict[str, Path],
        locals_: dict[str, object],
        pending: list[tuple[str, Path]],
    ) -> None:
        """Pair declaration formals with caller storage, tree against tree."""
        for s in (SLOT_LEFT, SLOT_RIGHT):
            d = decl_ln.slot(s)
            if d.kind is OperandKind.ADDRESS:
                child_d = self.tables.code[d.addr]
                child_s = self.tables.code[seg_ln.slot(s).addr]
                self._align(record, child_d, child_s, formals, locals_, pending)
                continue
            if d.kind is not OperandKind.IDENT or not decl_ln.formal[s]:
                continue
            bare = split_markers(d.text)[0]
            if not bare or bare in formals or bare in locals_:
                continue
            actual = seg_ln.slot(s)
            if actual.kind in (OperandKind.NUMBER, OperandKind.TEXT):
                locals_[bare] = actual.payload()
                continue
            path = self._actual_path(record, seg_ln, s)
            formals[bare] = path
            if decl_ln.pending[s] is PendFlag.TRUE:
                pending.append((bare, path))

    def _actual_path(self, record: Record, seg_ln: ExtendedLine, slot: int) -> Path:
        o = seg_ln.slot(slot)
        if o.kind is OperandKind.IDENT:
            bare, _, _, out = split_markers(o.text)
            return self._name_path(record, bare, out)
        if o.kind is OperandKind.ADDRESS:
            target = self.tables.code.get(o.addr)
            if target is not None and target.ctype is CodeType.ACCESS_MEMBER:
                return self._member_path(record, o.addr)
            return Path(record, o.addr)
        raise CoolRuntimeError("a formal matched nothing that can hold a value")


def eval_compare(op: str, x: float, y: float) -> bool:
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    if op == "<=":
        return x <= y
    return x >= y


def run_program(tables: Tables) -> Interpreter:
    interp = Interpreter(tables)
    interp.run()
    return interp
