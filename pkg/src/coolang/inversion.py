"""Reverse-function derivation from a bound forward body.

The forward body is disassembled into blocks (one per binding root, plus
declarations and the return). Written names get single-assignment
replacements so later reads cannot alias earlier values. Blocks touching
a pending parameter form the dependent set; a dependency tree rooted at
the return is chosen, merged into one expression, bound by the search,
and assembled with the untouched blocks into the reverse body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .addresses import Address, Allocator
from .code import (
    SLOT_LEFT,
    SLOT_RESULT,
    SLOT_RIGHT,
    CodeType,
    ExecFlag,
    ExtendedLine,
    FunctionInfo,
    Operand,
    OperandKind,
    PendFlag,
    ScopeInfo,
    ScopeKind,
    Tables,
    split_markers,
)
from .errors import DerivationFailure, InferenceFailure, MergeFailure, NotInvertible
from .matching import BindContext
from .segments import Segment
from .search import Observer, SearchOptions, search_segment

_STAGING_BASE = 10**9
_PLACEHOLDER_BASE = 2 * 10**9


@dataclass
class Block:
    seq: int
    kind: str  # scope_start | scope_end | decl | expr | return
    lines: list[ExtendedLine] = field(default_factory=list)
    root: Optional[Address] = None  # original address of the binding root
    reads_names: set[str] = field(default_factory=set)
    reads_temps: set[Address] = field(default_factory=set)
    writes: set[str] = field(default_factory=set)
    assign_name: Optional[str] = None  # simple `name = value` target
    dependent: bool = False


@dataclass
class Disassembly:
    blocks: list[Block]
    replacements: list[str]  # fresh names in creation order
    pending: list[str]  # pending formals under forward naming
    name_writer: dict[str, int] = field(default_factory=dict)
    temp_owner: dict[Address, int] = field(default_factory=dict)
    return_seq: Optional[int] = None
    body_start: Optional[Address] = None
    body_end: Optional[Address] = None


@dataclass
class TreeChoice:
    members: frozenset[int]
    necessary: int
    root: int

    def sort_key(self):
        return (self.necessary, len(self.members), self.root, tuple(sorted(self.members)))


def decl_formals(tables: Tables, fn: FunctionInfo) -> list[tuple[str, bool]]:
    """Formal names in pattern order with their pending flags.

    Named formals appear once (first occurrence); each anonymous formal
    stands on its own.
    """
    out: list[tuple[str, bool]] = []
    seen: set[str] = set()
    start = fn.decl_scope
    end = tables.scopes[start].end
    a = tables.code.next_after(start)
    while a is not None and a < end:
        ln = tables.code[a]
        if ln.ctype is CodeType.EXPR:
            for s in (SLOT_LEFT, SLOT_RIGHT):
                o = ln.slot(s)
                if o.kind is OperandKind.IDENT and ln.formal[s]:
                    bare = split_markers(o.text)[0]
                    pend = ln.pending[s] is PendFlag.TRUE
                    if bare == "":
                        out.append((bare, pend))
                    elif bare not in seen:
                        seen.add(bare)
                        out.append((bare, pend))
        a = tables.code.next_after(a)
    return out


def map_formals(
    fwd: list[tuple[str, bool]], rev: list[tuple[str, bool]]
) -> list[str]:
    """Pending formal names of the reverse head, translated to forward names.

    Named reverse formals must name forward formals; anonymous ones adopt
    the leftover forward names in order.
    """
    if len(fwd) != len(rev):
        raise NotInvertible(
            f"forward head takes {len(fwd)} parameters, reverse head {len(rev)}"
        )
    fwd_names = [n for n, _ in fwd]
    taken: set[str] = set()
    for name, _ in rev:
        if name == "":
            continue
        if name not in fwd_names or name in taken:
            raise NotInvertible(f"reverse parameter {name!r} has no forward twin")
        taken.add(name)
    leftovers = [n for n in fwd_names if n not in taken]
    pending: list[str] = []
    for name, pend in rev:
        resolved = name if name else leftovers.pop(0)
        if pend:
            pending.append(resolved)
    return pending


def _rename_slot_text(operand: Operand, new_bare: str) -> Operand:
    """Swap the bare name while keeping any out: prefix."""
    bare, _, _, out = split_markers(operand.text)
    prefix = operand.text[: len(operand.text) - len(bare)]
    return Operand.ident(prefix + new_bare)


class _Disassembler:
    def __init__(self, tables: Tables, fn: FunctionInfo, pending: list[str]):
        self.tables = tables
        self.fn = fn
        self.pending = pending
        self.formal_names = {n for n, _ in decl_formals(tables, fn)} - {""}
        self.vrt: dict[str, str] = {}
        self.locals: set[str] = set()
        self.replacements: list[str] = []
        self.blocks: list[Block] = []
        self.name_writer: dict[str, int] = {}
        self.temp_owner: dict[Address, int] = {}
        self.return_seq: Optional[int] = None

    def fresh(self) -> str:
        name = f"__inv{len(self.replacements) + 1}"
        self.replacements.append(name)
        return name

    def run(self) -> Disassembly:
        start = self.fn.body_scope
        end = self.tables.scopes[start].end
        consumed: set[Address] = set()

        self._add(Block(seq=0, kind="scope_start", lines=[self.tables.code[start].copy()]))
        a = self.tables.code.next_after(start)
        while a is not None and a < end:
            ln = self.tables.code[a]
            if a in consumed or ln.ctype is CodeType.EXPR_END:
                a = self.tables.code.next_after(a)
                continue
            if ln.ctype in (CodeType.SCOPE_START, CodeType.JUMP):
                raise NotInvertible("control flow cannot appear in a derived body")
            if ln.ctype is CodeType.VAR_DECL:
                self._decl_block(ln)
            elif ln.ctype is CodeType.EXPR:
                if not ln.root:
                    # children precede their root; pick the group up there
                    a = self.tables.code.next_after(a)
                    continue
                self._expr_block(ln, end, consumed)
            elif ln.ctype is CodeType.RETURN:
                self._return_block(ln)
            else:
                raise NotInvertible(
                    f"cannot derive around a {ln.ctype.value} line in the body"
                )
            a = self.tables.code.next_after(a)
        self._add(Block(seq=0, kind="scope_end", lines=[self.tables.code[end].copy()]))

        return Disassembly(
            blocks=self.blocks,
            replacements=self.replacements,
            pending=list(self.pending),
            name_writer=self.name_writer,
            temp_owner=self.temp_owner,
            return_seq=self.return_seq,
            body_start=start,
            body_end=end,
        )

    def _add(self, b: Block) -> Block:
        b.seq = len(self.blocks) + 1
        self.blocks.append(b)
        for w in b.writes:
            self.name_writer[w] = b.seq
        if b.root is not None:
            self.temp_owner[b.root] = b.seq
        return b

    def _decl_block(self, ln: ExtendedLine) -> None:
        name = split_markers(ln.result.text)[0]
        if name in self.formal_names:
            raise NotInvertible(f"local {name!r} shadows a parameter")
        self.locals.add(name)
        self._add(Block(seq=0, kind="decl", lines=[ln.copy()]))

    def _group(self, root: ExtendedLine, end: Address) -> list[ExtendedLine]:
        """The binding group under a root: non-root lines it reaches."""
        body_lines: list[ExtendedLine] = []

        def walk(ln: ExtendedLine) -> None:
            for s in (SLOT_LEFT, SLOT_RIGHT, SLOT_RESULT):
                o = ln.slot(s)
                if (
                    o.kind is OperandKind.ADDRESS
                    and o.addr != ln.address
                    and o.addr in self.tables.code
                ):
                    child = self.tables.code[o.addr]
                    if (
                        child.ctype is CodeType.EXPR
                        and not child.root
                        and child.scope == ln.scope
                    ):
                        walk(child)
                        body_lines.append(child)

        walk(root)
        out = [ln.copy() for ln in body_lines] + [root.copy()]
        out.sort(key=lambda l: l.address)
        return out

    def _expr_block(self, root: ExtendedLine, end: Address, consumed: set[Address]) -> None:
        lines = self._group(root, end)
        for ln in lines:
            consumed.add(ln.address)
        b = Block(seq=0, kind="expr", lines=lines, root=root.address)
        own = {ln.address for ln in lines}

        # reads renamed through the replacement table
        for ln in lines:
            for s in (SLOT_LEFT, SLOT_RIGHT):
                o = ln.slot(s)
                if o.kind is OperandKind.IDENT and ln.pending[s] is not PendFlag.TRUE:
                    bare = split_markers(o.text)[0]
                    if bare in self.vrt:
                        ln.set_slot(s, _rename_slot_text(o, self.vrt[bare]))

        # a pending occurrence is a solving write: one fresh name per block
        renamed: dict[str, str] = {}
        for ln in lines:
            for s in (SLOT_LEFT, SLOT_RIGHT):
                o = ln.slot(s)
                if o.kind is OperandKind.IDENT and ln.pending[s] is PendFlag.TRUE:
                    bare = split_markers(o.text)[0]
                    if bare not in renamed:
                        renamed[bare] = self.fresh()
                    ln.set_slot(s, _rename_slot_text(o, renamed[bare]))
        for bare, fresh in renamed.items():
            self.vrt[bare] = fresh
            b.writes.add(fresh)

        # plain assignment target
        last = lines[-1]
        if last.op.text == "=" and last.address == root.address:
            t = last.result
            if t.kind is OperandKind.ADDRESS and t.addr not in own:
                raise NotInvertible("a derived body cannot write through members")
            if t.kind is OperandKind.IDENT:
                bare = split_markers(t.text)[0]
                if bare in self.formal_names:
                    raise NotInvertible(f"parameter {bare!r} is mutated by the body")
                if bare not in self.locals:
                    raise NotInvertible(f"{bare!r} lives outside the derived body")
                fresh = self.fresh()
                last.result = _rename_slot_text(t, fresh)
                self.vrt[bare] = fresh
                b.writes.add(fresh)
                if len(lines) == 1:
                    b.assign_name = fresh

        self._collect_reads(b, own)
        self._add(b)

    def _return_block(self, ln: ExtendedLine) -> None:
        if self.return_seq is not None:
            raise NotInvertible("a derived body allows only one return")
        cp = ln.copy()
        o = cp.left
        if o.kind is OperandKind.IDENT:
            bare = split_markers(o.text)[0]
            if bare in self.vrt:
                cp.left = _rename_slot_text(o, self.vrt[bare])
        b = Block(seq=0, kind="return", lines=[cp])
        self._collect_reads(b, set())
        self.return_seq = self._add(b).seq

    def _collect_reads(self, b: Block, own: set[Address]) -> None:
        for ln in b.lines:
            slots = (SLOT_LEFT, SLOT_RIGHT)
            if ln.ctype is CodeType.RETURN:
                slots = (SLOT_LEFT,)
            for s in slots:
                o = ln.slot(s)
                if o.kind is OperandKind.IDENT:
                    if ln.pending[s] is PendFlag.TRUE:
                        continue  # a write, handled above
                    b.reads_names.add(split_markers(o.text)[0])
                elif o.kind is OperandKind.ADDRESS and o.addr not in own and o.addr != ln.address:
                    b.reads_temps.add(o.addr)


def disassemble(tables: Tables, fn: FunctionInfo, pending: list[str]) -> Disassembly:
    if fn.body_scope is None:
        raise NotInvertible("the forward function has no body to derive from")
    return _Disassembler(tables, fn, pending).run()


def analyze_dependence(dis: Disassembly) -> None:
    """Mark blocks whose values trace back to a pending parameter."""
    dep_names: set[str] = set()
    dep_temps: set[Address] = set()
    pend = set(dis.pending)
    for b in dis.blocks:
        hit = (
            bool(b.reads_names & pend)
            or bool(b.reads_names & dep_names)
            or bool(b.reads_temps & dep_temps)
        )
        if hit:
            b.dependent = True
            dep_names |= b.writes
            if b.root is not None:
                dep_temps.add(b.root)


def _dep_inputs(dis: Disassembly, b: Block) -> set[tuple[str, object, int]]:
    """Dependent carriers a block consumes, with their producing blocks."""
    by_seq = {blk.seq: blk for blk in dis.blocks}
    out: set[tuple[str, object, int]] = set()
    for n in b.reads_names:
        w = dis.name_writer.get(n)
        if w is not None and by_seq[w].dependent:
            out.add(("name", n, w))
    for t in b.reads_temps:
        o = dis.temp_owner.get(t)
        if o is not None and by_seq[o].dependent:
            out.add(("temp", t, o))
    return out


def enumerate_trees(
    dis: Disassembly, root_seq: int, max_nodes: int, root_known: bool
) -> list[TreeChoice]:
    """Every dependency tree growable from the root, ordered by priority.

    Priority: unmet dependent inputs first (plus one when the root's own
    value is unknown), then node count, then the member set itself.
    """
    by_seq = {b.seq: b for b in dis.blocks}
    results: dict[frozenset[int], TreeChoice] = {}

    def frontier(members: frozenset[int]) -> set[tuple[str, object, int]]:
        need: set[tuple[str, object, int]] = set()
        for seq in members:
            need |= _dep_inputs(dis, by_seq[seq])
        return {item for item in need if item[2] not in members}

    def grow(members: frozenset[int]) -> None:
        if members in results:
            return
        unmet = frontier(members)
        necessary = len({(k, key) for k, key, _ in unmet}) + (0 if root_known else 1)
        results[members] = TreeChoice(members=members, necessary=necessary, root=root_seq)
        if len(members) >= max_nodes:
            return
        for _, _, producer in unmet:
            grow(members | {producer})

    grow(frozenset({root_seq}))
    return sorted(results.values(), key=TreeChoice.sort_key)


class _Merger:
    def __init__(self, dis: Disassembly, members: frozenset[int], root_seq: int):
        self.dis = dis
        self.members = members
        self.root_seq = root_seq
        self.by_seq = {b.seq: b for b in dis.blocks}
        self.pending = set(dis.pending)
        self.lines: dict[Address, ExtendedLine] = {}
        self.staging = 0
        self.instantiated: dict[int, int] = {seq: 0 for seq in members}

    def fresh_addr(self) -> Address:
        self.staging += 1
        return Address((_STAGING_BASE + self.staging,))

    def merge(self) -> Segment:
        root_block = self.by_seq[self.root_seq]
        if root_block.kind == "return":
            target = self._value_for_return(root_block)
            line = ExtendedLine(
                address=self.fresh_addr(),
                scope=None,
                exec_flag=ExecFlag.COND,
                ctype=CodeType.EXPR,
                op=Operand.ident("="),
                left=Operand.ident("ans"),
                right=Operand.empty(),
                result=target,
            )
            self.lines[line.address] = line
            root_addr = line.address
        else:
            _, value = self._instantiate(self.root_seq)
            if value.kind is not OperandKind.ADDRESS or value.addr not in self.lines:
                raise MergeFailure("the dependency tree root reduced to a bare value")
            root_addr = value.addr
        for seq in self.members:
            if seq != self.root_seq and self.instantiated[seq] == 0:
                raise MergeFailure(
                    f"block {seq} joined the tree but nothing consumed it"
                )
        seg = Segment(
            lines=self.lines,
            root=root_addr,
            original=[],
            prev_addr=None,
            terminator=None,
            staging_seq=self.staging,
        )
        seg.prebind_builtins()
        return seg

    def _value_for_return(self, b: Block) -> Operand:
        o = b.lines[0].left
        sub = self._substitute_operand(o)
        if sub is not None:
            return sub
        if o.kind is OperandKind.NUMBER or o.kind is OperandKind.TEXT:
            raise DerivationFailure("the return value is a constant; nothing to solve")
        return o

    def _substitute_operand(self, o: Operand) -> Optional[Operand]:
        """Tree-internal replacement for an operand, if its producer joined."""
        if o.kind is OperandKind.IDENT:
            bare = split_markers(o.text)[0]
            w = self.dis.name_writer.get(bare)
            if w in self.members and self.by_seq[w].dependent:
                block = self.by_seq[w]
                if block.assign_name != bare:
                    raise MergeFailure(
                        f"{bare!r} is produced by solving, not assignment; "
                        "the tree cannot absorb it"
                    )
                _, value = self._instantiate(w)
                return value
        elif o.kind is OperandKind.ADDRESS:
            owner = self.dis.temp_owner.get(o.addr)
            if owner in self.members:
                _, value = self._instantiate(owner)
                return value
        return None

    def _instantiate(self, seq: int) -> tuple[list[Address], Operand]:
        """A private copy of one block with its tree inputs substituted."""
        b = self.by_seq[seq]
        self.instantiated[seq] += 1
        local: dict[Address, Address] = {}
        copies: list[ExtendedLine] = []
        for ln in b.lines:
            cp = ln.copy()
            local[ln.address] = self.fresh_addr()
            cp.address = local[ln.address]
            if b.dependent:
                cp.bound = None
                cp.bound_reverse = False
                cp.root = False
            copies.append(cp)
        for cp in copies:
            for s in (SLOT_LEFT, SLOT_RIGHT, SLOT_RESULT):
                o = cp.slot(s)
                if o.kind is OperandKind.ADDRESS and o.addr in local:
                    cp.set_slot(s, Operand.address(local[o.addr]))
                elif o.kind is OperandKind.IDENT:
                    if split_markers(o.text)[0] in self.pending:
                        cp.pending[s] = PendFlag.TRUE
            self.lines[cp.address] = cp
        # plug in producers, one private copy per occurrence
        for cp in copies:
            for s in (SLOT_LEFT, SLOT_RIGHT):
                o = cp.slot(s)
                if o.kind is OperandKind.ADDRESS and o.addr in local:
                    continue
                sub = self._substitute_operand(o)
                if sub is not None:
                    cp.set_slot(s, sub)
                    if sub.kind is OperandKind.IDENT:
                        cp.pending[s] = PendFlag.FALSE
        addrs = [cp.address for cp in copies]
        if b.assign_name is not None:
            eq = copies[-1]
            value = eq.left
            del self.lines[eq.address]
            addrs.remove(eq.address)
            return addrs, value
        return addrs, Operand.address(local[b.root])


def merge_tree(dis: Disassembly, members: frozenset[int], root_seq: int) -> Segment:
    return _Merger(dis, members, root_seq).merge()


def _shares_later(
    open_temps: set[Address], later: list[Block], merged_reads: set[Address]
) -> bool:
    if open_temps & merged_reads:
        return True
    for b in later:
        if b.reads_temps & open_temps:
            return True
    return False


def assemble_body(
    tables: Tables,
    rev: FunctionInfo,
    derive_line: ExtendedLine,
    dis: Disassembly,
    merged: Segment,
) -> Address:
    """Write the derived body into the table between declaration and marker."""
    ph = [_PLACEHOLDER_BASE]

    def placeholder(ln: ExtendedLine) -> ExtendedLine:
        ph[0] += 1
        ln.address = Address((ph[0],))
        return ln

    def empty_line(ctype: CodeType, **slots) -> ExtendedLine:
        return placeholder(
            ExtendedLine(
                address=Address((1,)),
                scope=None,
                exec_flag=ExecFlag.COND,
                ctype=ctype,
                op=slots.get("op", Operand.empty()),
                left=slots.get("left", Operand.empty()),
                right=slots.get("right", Operand.empty()),
                result=slots.get("result", Operand.empty()),
            )
        )

    merged_order = merged.subtree(merged.root)
    merged_reads = {
        ln.slot(s).addr
        for a in merged_order
        for ln in (merged[a],)
        for s in (SLOT_LEFT, SLOT_RIGHT)
        if ln.slot(s).kind is OperandKind.ADDRESS and ln.slot(s).addr not in merged.lines
    }

    start_line = placeholder(dis.blocks[0].lines[0].copy())
    end_line = placeholder(dis.blocks[-1].lines[0].copy())

    items: list[ExtendedLine] = [start_line]
    emit_blocks = [
        b
        for b in dis.blocks
        if b.kind in ("decl", "expr") and not b.dependent
    ]
    open_temps: set[Address] = set()
    for i, b in enumerate(emit_blocks):
        if b.kind == "decl":
            items.append(b.lines[0].copy())
            continue
        items.extend(ln.copy() for ln in b.lines)
        open_temps.add(b.root)
        later = [x for x in emit_blocks[i + 1 :] if x.kind == "expr"]
        if not _shares_later(open_temps, later, merged_reads):
            items.append(empty_line(CodeType.EXPR_END))
            open_temps = set()
    if open_temps:
        items.append(empty_line(CodeType.EXPR_END))
    items.extend(merged[a].copy() for a in merged_order)
    items.append(empty_line(CodeType.EXPR_END))
    items.append(end_line)

    # declarations for the replacement names the body actually uses
    used: set[str] = set()
    for ln in items:
        for s in (SLOT_LEFT, SLOT_RIGHT, SLOT_RESULT):
            o = ln.slot(s)
            if o.kind is OperandKind.IDENT:
                used.add(split_markers(o.text)[0])
    decls = [
        empty_line(CodeType.VAR_DECL, result=Operand.ident(name))
        for name in dis.replacements
        if name in used
    ]
    items[1:1] = decls

    # the pending parameters must still be solvable somewhere in the body
    for p in dis.pending:
        found = any(
            ln.ctype is CodeType.EXPR
            and any(
                ln.slot(s).kind is OperandKind.IDENT
                and split_markers(ln.slot(s).text)[0] == p
                and ln.pending[s] is PendFlag.TRUE
                for s in (SLOT_LEFT, SLOT_RIGHT)
            )
            for ln in items
        )
        if not found:
            raise DerivationFailure(f"pending parameter {p!r} is never solved")

    decl_end = tables.scopes[rev.decl_scope].end
    mapping: dict[Address, Address] = {}
    alloc = Allocator(tables.code.addresses())
    new_addrs = alloc.run_between(decl_end, derive_line.address, len(items))
    for ln, new in zip(items, new_addrs):
        mapping[ln.address] = new
    body_start = mapping[start_line.address]
    body_end = mapping[end_line.address]
    for ln, new in zip(items, new_addrs):
        ln.address = new
        ln.scope = body_start
        ln.exec_flag = ExecFlag.COND
        for s in (SLOT_LEFT, SLOT_RIGHT, SLOT_RESULT):
            o = ln.slot(s)
            if o.kind is OperandKind.ADDRESS and o.addr in mapping:
                ln.set_slot(s, Operand.address(mapping[o.addr]))
        tables.code.insert(ln)

    tables.scopes[body_start] = ScopeInfo(
        kind=ScopeKind.BODY,
        start=body_start,
        end=body_end,
        param_query=rev.decl_scope,
        parent=derive_line.scope,
    )
    rev.body_scope = body_start
    tables.code[rev.func_op].right = Operand.address(body_start)
    return body_start


def _find_forward(tables: Tables, derive_line: ExtendedLine) -> FunctionInfo:
    name = derive_line.left.text
    best: Optional[FunctionInfo] = None
    for fn in tables.functions.values():
        if (
            fn.name == name
            and not fn.is_exp
            and not fn.is_reverse
            and fn.body_scope is not None
            and fn.func_op < derive_line.address
        ):
            if best is None or fn.func_op > best.func_op:
                best = fn
    if best is None:
        raise DerivationFailure(f"no forward declaration named {name!r} to derive from")
    return best


def _adopt_names(
    tables: Tables, rev: FunctionInfo, fwd_formals: list[tuple[str, bool]]
) -> None:
    """Give anonymous reverse formals their forward names, in pattern order."""
    taken = {n for n, _ in decl_formals(tables, rev) if n}
    leftovers = [n for n, _ in fwd_formals if n not in taken]
    start, end = rev.decl_scope, tables.scopes[rev.decl_scope].end
    a = tables.code.next_after(start)
    while a is not None and a < end and leftovers:
        ln = tables.code[a]
        if ln.ctype is CodeType.EXPR:
            for s in (SLOT_LEFT, SLOT_RIGHT):
                o = ln.slot(s)
                if o.kind is OperandKind.IDENT and ln.formal[s] and o.text == "":
                    ln.set_slot(s, Operand.ident(leftovers.pop(0)))
                    if not leftovers:
                        break
        a = tables.code.next_after(a)


def derive_reverse_body(
    tables: Tables,
    uni,
    derive_line: ExtendedLine,
    options: Optional[SearchOptions] = None,
    observer: Optional[Observer] = None,
) -> Address:
    """Build and install the reverse body named by one derivation marker."""
    opts = options or SearchOptions()
    fwd = _find_forward(tables, derive_line)
    rev = tables.function_by_decl(derive_line.right.addr)
    if rev is None:
        raise DerivationFailure("the derivation marker names no declaration")
    if rev.body_scope is not None:
        return rev.body_scope  # already derived

    fwd_formals = decl_formals(tables, fwd)
    rev_formals = decl_formals(tables, rev)
    pending = map_formals(fwd_formals, rev_formals)
    if not pending:
        raise NotInvertible("the reverse head marks nothing as pending")
    _adopt_names(tables, rev, fwd_formals)

    dis = disassemble(tables, fwd, pending)
    analyze_dependence(dis)

    if dis.return_seq is None:
        raise NotInvertible("the forward body never returns a value")
    ret = dis.blocks[dis.return_seq - 1]
    if not ret.dependent:
        raise DerivationFailure(
            "the return value does not depend on the pending parameters"
        )

    trees = enumerate_trees(dis, dis.return_seq, opts.max_tree_nodes, root_known=True)
    best = trees[0] if trees else None
    if best is None or best.necessary != 0:
        raise DerivationFailure("the dependence cannot be resolved into one tree")

    # dependent blocks left out of the tree must be dead weight
    leftover = [
        b for b in dis.blocks if b.dependent and b.seq not in best.members
    ]
    for b in leftover:
        consumers = [
            x
            for x in dis.blocks
            if x.seq != b.seq
            and (x.reads_names & b.writes or (b.root is not None and b.root in x.reads_temps))
        ]
        if consumers:
            raise DerivationFailure(
                "a dependent value is consumed outside the chosen tree"
            )

    merged = merge_tree(dis, best.members, best.root)
    ctx: BindContext = uni.context_for(derive_line.scope)
    try:
        outcome = search_segment(
            tables, merged, ctx, derive_line.address, options=opts, observer=observer
        )
    except InferenceFailure as exc:
        raise DerivationFailure(f"the merged expression would not bind: {exc}") from exc

    return assemble_body(tables, rev, derive_line, dis, outcome.segment)
