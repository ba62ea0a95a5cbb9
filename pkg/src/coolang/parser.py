"""Compiler front end: precompiled text to a quaternion line stream.

Expressions compile post-order, one line per operator, with each line's
result slot holding its own address. Member accesses are hoisted in front
of the expression lines of their statement so every longest expression
stays one contiguous run of EXPR lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .addresses import Address
from .code import (
    OUT_MARK,
    PENDING_MARK,
    UNRELATED_MARK,
    CodeLine,
    CodeType,
    Operand,
)
from .errors import ParseError
from .precompile import KEYWORDS

_TWO_CHAR = ("-->", "==", "<<", ">=", "<=", "=>")
_SINGLE = set("(){};:,$#@.+-*/^=<>")
_CMP_OPS = ("==", ">", "<", ">=", "<=")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | op | eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            j, buf = i + 1, []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", i)
            toks.append(Token("string", "".join(buf), i))
            i = j + 1
        elif c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # member access after a name never follows a digit here
                    if not (j + 1 < n and text[j + 1].isdigit()):
                        break
                    seen_dot = True
                j += 1
            toks.append(Token("number", text[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], i))
            i = j
        else:
            for op in _TWO_CHAR:
                if text.startswith(op, i):
                    toks.append(Token("op", op, i))
                    i += len(op)
                    break
            else:
                if c in _SINGLE:
                    toks.append(Token("op", c, i))
                    i += 1
                else:
                    raise ParseError(f"unexpected character {c!r}", i)
    toks.append(Token("eof", "", n))
    return toks


# expression tree, folded straight into line emission


@dataclass
class _Num:
    value: float


@dataclass
class _Str:
    value: str


@dataclass
class _Id:
    name: str  # marker prefixes included
    pos: int = 0


@dataclass
class _Neg:
    x: object


@dataclass
class _Bin:
    op: str
    l: object
    r: object


@dataclass
class _Call:
    name: str  # dotted for member calls
    args: list = field(default_factory=list)
    pos: int = 0


@dataclass
class _Acc:
    base: object
    comp: str


@dataclass
class _Asg:
    target: object
    value: object


@dataclass
class _Out:
    value: object
    tail: Optional[object]


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.lines: list[CodeLine] = []
        self._exp_depth = 0
        self._out_mark = False

    # --- token helpers ---

    def _peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def _next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def _at(self, kind: str, text: Optional[str] = None, ahead: int = 0) -> bool:
        t = self._peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def _expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self._peek()
        if not self._at(kind, text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", t.pos)
        return self._next()

    def _accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self._at(kind, text):
            return self._next()
        return None

    # --- emission helpers ---

    def _emit(
        self,
        ctype: CodeType,
        op: Operand = Operand.empty(),
        left: Operand = Operand.empty(),
        right: Operand = Operand.empty(),
        result: Optional[Operand] = None,
        self_result: bool = False,
    ) -> int:
        idx = len(self.lines)
        if self_result:
            result = Operand.address(Address((idx + 1,)))
        self.lines.append(
            CodeLine(ctype, op, left, right, result if result is not None else Operand.empty())
        )
        return idx

    def _addr_of(self, idx: int) -> Operand:
        return Operand.address(Address((idx + 1,)))

    def _next_index_operand(self) -> Operand:
        return Operand.address(Address((len(self.lines) + 1,)))

    # --- program / statements ---

    def parse_program(self) -> list[CodeLine]:
        while not self._at("eof"):
            self.parse_item()
        if self._out_mark:
            raise ParseError("out: marker not attached to an identifier", self._peek().pos)
        return self.lines

    def parse_item(self) -> None:
        if self._at("ident", "exp") and self._at("op", ":", 1):
            self._next()
            self._next()
            self._expect("op", "@")
            self.parse_declaration(is_exp=True)
        elif self._at("op", "@"):
            self._next()
            self.parse_declaration(is_exp=False)
        elif self._at("ident", "system") and self._at("op", ":", 1):
            self.parse_class()
        else:
            self.parse_statement()

    def parse_statement(self) -> None:
        t = self._peek()
        if t.kind == "ident" and t.text == "new" and self._at("op", ":", 1):
            self._next()
            self._next()
            self.parse_var_decl()
        elif t.kind == "ident" and t.text == "return" and self._at("op", ":", 1):
            self._next()
            self._next()
            node = self.parse_expr()
            self._expect("op", ";")
            self._hoist_access(node)
            root = self._emit_expr(node)
            self._emit(CodeType.RETURN, op=Operand.ident("return"), left=root)
            self._emit(CodeType.EXPR_END)
        elif t.kind == "ident" and t.text == "while":
            self.parse_while()
        elif t.kind == "ident" and t.text == "if":
            self.parse_if()
        elif t.kind == "op" and t.text == "{":
            self._next()
            self._emit(CodeType.SCOPE_START, left=Operand.ident("plain"))
            while not self._accept("op", "}"):
                if self._at("eof"):
                    raise ParseError("unterminated block", self._peek().pos)
                self.parse_item()
            self._emit(CodeType.SCOPE_END)
        elif (
            t.kind == "ident"
            and t.text not in KEYWORDS
            and self._at("op", ":", 1)
            and self._peek(2).kind == "ident"
            and self._at("op", ";", 3)
        ):
            cls = self._next().text
            self._next()
            name = self._next().text
            self._next()
            self._emit(
                CodeType.VAR_DECL,
                left=Operand.ident(cls),
                result=Operand.ident(name),
            )
        else:
            node = self.parse_expr()
            self._expect("op", ";")
            self._hoist_access(node)
            before = len(self.lines)
            self._emit_expr(node)
            if len(self.lines) > before:
                self._emit(CodeType.EXPR_END)

    def parse_var_decl(self) -> None:
        name = self._expect("ident")
        if name.text in KEYWORDS:
            raise ParseError(f"{name.text!r} is reserved", name.pos)
        self._emit(CodeType.VAR_DECL, result=Operand.ident(name.text))
        if self._accept("op", "="):
            value = self.parse_assign_rhs()
            self._expect("op", ";")
            self._hoist_access(value)
            v = self._emit_expr(value)
            self._emit(
                CodeType.EXPR,
                op=Operand.ident("="),
                left=v,
                result=Operand.ident(name.text),
            )
            self._emit(CodeType.EXPR_END)
        else:
            self._expect("op", ";")

    def parse_while(self) -> None:
        self._expect("ident", "while")
        self._expect("op", "(")
        cond = self.parse_expr()
        self._expect("op", ")")
        cond_start = self._next_index_operand()
        self._hoist_access(cond)
        c = self._emit_expr(cond)
        neg = self._emit(
            CodeType.EXPR,
            op=Operand.ident("=="),
            left=c,
            right=Operand.number(0),
            self_result=True,
        )
        self._emit(CodeType.EXPR_END)
        exit_jump = self._emit(
            CodeType.JUMP, op=Operand.ident("jump"), left=self._addr_of(neg)
        )
        self._emit(
            CodeType.SCOPE_START, left=Operand.ident("cond")
        )
        self._expect("op", "{")
        while not self._accept("op", "}"):
            if self._at("eof"):
                raise ParseError("unterminated block", self._peek().pos)
            self.parse_item()
        self._emit(CodeType.SCOPE_END)
        self._emit(CodeType.JUMP, op=Operand.ident("jump"), left=Operand.number(1), right=cond_start)
        self.lines[exit_jump].right = self._next_index_operand()

    def parse_if(self) -> None:
        end_jumps: list[int] = []
        first = True
        while True:
            kw = "if" if first else "elseif"
            self._expect("ident", kw)
            first = False
            self._expect("op", "(")
            cond = self.parse_expr()
            self._expect("op", ")")
            self._hoist_access(cond)
            c = self._emit_expr(cond)
            neg = self._emit(
                CodeType.EXPR,
                op=Operand.ident("=="),
                left=c,
                right=Operand.number(0),
                self_result=True,
            )
            self._emit(CodeType.EXPR_END)
            skip = self._emit(
                CodeType.JUMP, op=Operand.ident("jump"), left=self._addr_of(neg)
            )
            self._emit(CodeType.SCOPE_START, left=Operand.ident("cond"))
            self._expect("op", "{")
            while not self._accept("op", "}"):
                if self._at("eof"):
                    raise ParseError("unterminated block", self._peek().pos)
                self.parse_item()
            self._emit(CodeType.SCOPE_END)
            end_jumps.append(
                self._emit(CodeType.JUMP, op=Operand.ident("jump"), left=Operand.number(1))
            )
            self.lines[skip].right = self._next_index_operand()
            if self._at("ident", "elseif"):
                continue
            if self._accept("ident", "else"):
                self._emit(CodeType.SCOPE_START, left=Operand.ident("cond"))
                self._expect("op", "{")
                while not self._accept("op", "}"):
                    if self._at("eof"):
                        raise ParseError("unterminated block", self._peek().pos)
                    self.parse_item()
                self._emit(CodeType.SCOPE_END)
            break
        target = self._next_index_operand()
        for j in end_jumps:
            self.lines[j].right = target

    # --- declarations ---

    def parse_declaration(self, is_exp: bool) -> None:
        """Caller has consumed the leading @."""
        if is_exp:
            self._exp_depth += 1
        try:
            weight = 0.0
            if self._at("op", "("):
                self._next()
                sign = -1.0 if self._accept("op", "-") else 1.0
                num = self._expect("number")
                weight = sign * float(num.text)
                self._expect("op", ")")
            func_idx = self._emit(CodeType.FUNC_OP)
            decl_start, head_name = self._emit_decl_scope()
            body_start: Optional[int] = None
            if self._at("op", "{"):
                body_start = self._emit_body_scope()
            line = self.lines[func_idx]
            line.op = Operand.ident("funcexp" if is_exp else "func")
            line.left = self._addr_of(decl_start)
            if body_start is not None:
                line.right = self._addr_of(body_start)
            line.result = Operand.number(weight)

            if self._accept("op", "=>"):
                self._expect("op", "@")
                rev_weight = 0.0
                if self._at("op", "("):
                    self._next()
                    sign = -1.0 if self._accept("op", "-") else 1.0
                    num = self._expect("number")
                    rev_weight = sign * float(num.text)
                    self._expect("op", ")")
                rev_func_idx = self._emit(CodeType.FUNC_OP)
                rev_decl_start, _ = self._emit_decl_scope()
                self._expect("op", ";")
                rline = self.lines[rev_func_idx]
                rline.op = Operand.ident("func")
                rline.left = self._addr_of(rev_decl_start)
                rline.result = Operand.number(rev_weight)
                self._emit(
                    CodeType.DERIVE_FUNC,
                    op=Operand.ident("=>"),
                    left=Operand.ident(head_name),
                    right=self._addr_of(rev_decl_start),
                )
            else:
                self._accept("op", ";")
        finally:
            if is_exp:
                self._exp_depth -= 1

    def _emit_decl_scope(self) -> tuple[int, str]:
        """Emit SCOPE_START(decl) pattern EXPR_END SCOPE_END; return (start, root op text)."""
        if self._at("op", "{"):
            self._next()
            pattern = self.parse_expr()
            self._accept("op", ";")
            self._expect("op", "}")
        elif self._at("ident"):
            name = self._next()
            if name.text in KEYWORDS:
                raise ParseError(f"{name.text!r} is reserved", name.pos)
            self._expect("op", "(")
            args = self._parse_args_until_close()
            pattern = _Call(name.text, args, name.pos)
        else:
            t = self._peek()
            raise ParseError("declaration needs a name or a pattern", t.pos)
        start = self._emit(CodeType.SCOPE_START, left=Operand.ident("decl"))
        self._hoist_access(pattern)
        root = self._emit_expr(pattern)
        if root.kind.value not in ("a",):
            # single-operand pattern (bare identifier): not a usable declaration
            raise ParseError("declaration pattern has no operator", self._peek().pos)
        self._emit(CodeType.EXPR_END)
        self._emit(CodeType.SCOPE_END)
        root_line = self.lines[root.addr.digits[0] - 1]
        head_name = root_line.op.text
        return start, head_name

    def _emit_body_scope(self) -> int:
        start = self._emit(CodeType.SCOPE_START, left=Operand.ident("body"))
        self._expect("op", "{")
        while not self._accept("op", "}"):
            if self._at("eof"):
                raise ParseError("unterminated block", self._peek().pos)
            self.parse_item()
        self._emit(CodeType.SCOPE_END)
        return start

    def parse_class(self) -> None:
        self._expect("ident", "system")
        self._expect("op", ":")
        name = self._expect("ident")
        parents: list[str] = []
        if self._accept("op", "<<"):
            parents.append(self._expect("ident").text)
            while self._accept("op", ","):
                parents.append(self._expect("ident").text)
        class_idx = self._emit(
            CodeType.CLASS_OP, op=Operand.ident("class"), left=Operand.ident(name.text)
        )
        for p in parents:
            self._emit(
                CodeType.CLASS_OP,
                op=Operand.ident("inherit"),
                left=Operand.ident(name.text),
                right=Operand.ident(p),
            )
        start = self._emit(CodeType.SCOPE_START, left=Operand.ident("class"))
        self._expect("op", "{")
        while not self._accept("op", "}"):
            if self._at("eof"):
                raise ParseError("unterminated block", self._peek().pos)
            self.parse_item()
        self._emit(CodeType.SCOPE_END)
        self.lines[class_idx].right = self._addr_of(start)

    # --- expressions ---

    def parse_expr(self):
        return self.parse_output()

    def parse_output(self):
        v = self.parse_assign_rhs()
        if self._accept("op", "-->"):
            tail = None
            if not self._at("op", ";"):
                tail = self.parse_primary_literal()
            return _Out(v, tail)
        return v

    def parse_primary_literal(self):
        neg = self._accept("op", "-")
        t = self._peek()
        if t.kind == "number":
            self._next()
            v = float(t.text)
            return _Num(-v if neg else v)
        if neg:
            raise ParseError("expected a number", t.pos)
        if t.kind == "string":
            self._next()
            return _Str(t.text)
        if t.kind == "ident":
            self._next()
            return _Id(t.text, t.pos)
        raise ParseError("expected a literal", t.pos)

    def parse_assign_rhs(self):
        l = self.parse_compare()
        if self._accept("op", "="):
            r = self.parse_assign_rhs()
            if not isinstance(l, (_Id, _Acc)):
                raise ParseError("assignment target must be a variable", self._peek().pos)
            return _Asg(l, r)
        return l

    def parse_compare(self):
        l = self.parse_additive()
        while True:
            t = self._peek()
            if t.kind == "op" and t.text in _CMP_OPS:
                self._next()
                r = self.parse_additive()
                l = _Bin(t.text, l, r)
            else:
                return l

    def parse_additive(self):
        l = self.parse_multiplicative()
        while True:
            t = self._peek()
            if t.kind == "op" and t.text in ("+", "-"):
                self._next()
                r = self.parse_multiplicative()
                l = _Bin(t.text, l, r)
            else:
                return l

    def parse_multiplicative(self):
        l = self.parse_unary()
        while True:
            t = self._peek()
            if t.kind == "op" and t.text in ("*", "/"):
                self._next()
                r = self.parse_unary()
                l = _Bin(t.text, l, r)
            else:
                return l

    def parse_unary(self):
        if self._accept("op", "-"):
            x = self.parse_unary()
            if isinstance(x, _Num):
                return _Num(-x.value)
            return _Neg(x)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_postfix()
        if self._accept("op", "^"):
            exp = self.parse_unary()
            return _Bin("^", base, exp)
        return base

    def parse_postfix(self):
        node = self.parse_primary()
        while self._at("op", "."):
            self._next()
            comp = self._expect("ident")
            if comp.text in KEYWORDS:
                raise ParseError(f"{comp.text!r} is reserved", comp.pos)
            if self._at("op", "("):
                path = self._flatten_path(node)
                if path is None:
                    raise ParseError("method receiver must be a variable path", comp.pos)
                self._next()
                args = self._parse_args_until_close()
                node = _Call(".".join(path + [comp.text]), args, comp.pos)
            else:
                node = _Acc(node, comp.text)
        return node

    @staticmethod
    def _flatten_path(node) -> Optional[list[str]]:
        parts: list[str] = []
        while isinstance(node, _Acc):
            parts.insert(0, node.comp)
            node = node.base
        if isinstance(node, _Id):
            bare = node.name
            if bare.startswith((PENDING_MARK, UNRELATED_MARK)) or bare.startswith(OUT_MARK):
                return None
            parts.insert(0, bare)
            return parts
        return None

    def parse_primary(self):
        t = self._peek()
        if t.kind == "number":
            self._next()
            return _Num(float(t.text))
        if t.kind == "string":
            self._next()
            return _Str(t.text)
        if t.kind == "op" and t.text == "(":
            self._next()
            node = self.parse_expr()
            self._expect("op", ")")
            return node
        if t.kind == "op" and t.text == "$":
            self._next()
            if self._at("ident"):
                name = self._next()
                if name.text in KEYWORDS:
                    raise ParseError(f"{name.text!r} is reserved", name.pos)
                if self._at("op", "("):
                    raise ParseError("pending marker cannot mark a call", name.pos)
                return _Id(PENDING_MARK + name.text, t.pos)
            return _Id(PENDING_MARK, t.pos)
        if t.kind == "op" and t.text == "#":
            if self._exp_depth == 0:
                raise ParseError("unrelated marker is only valid in exp declarations", t.pos)
            self._next()
            name = self._expect("ident")
            if name.text in KEYWORDS:
                raise ParseError(f"{name.text!r} is reserved", name.pos)
            return _Id(UNRELATED_MARK + name.text, t.pos)
        if t.kind == "ident":
            if t.text == "out" and self._at("op", ":", 1):
                self._next()
                self._next()
                if self._out_mark:
                    raise ParseError("nested out: marker", t.pos)
                self._out_mark = True
                node = self.parse_compare()
                if self._out_mark:
                    raise ParseError("out: marker not attached to an identifier", t.pos)
                return node
            if t.text in KEYWORDS:
                raise ParseError(f"{t.text!r} is reserved", t.pos)
            self._next()
            name = t.text
            if self._out_mark:
                name = OUT_MARK + name
                self._out_mark = False
            if self._at("op", "("):
                if name.startswith(OUT_MARK):
                    raise ParseError("out: cannot mark a call", t.pos)
                self._next()
                args = self._parse_args_until_close()
                return _Call(name, args, t.pos)
            return _Id(name, t.pos)
        raise ParseError(f"unexpected {t.text or t.kind!r}", t.pos)

    def _parse_args_until_close(self) -> list:
        args: list = []
        if self._accept("op", ")"):
            return args
        while True:
            args.append(self.parse_expr())
            if self._accept("op", ","):
                continue
            self._expect("op", ")")
            return args

    # --- expression emission ---

    def _hoist_access(self, node) -> None:
        """Emit ACCESS_MEMBER lines for every access path, evaluation order."""
        if isinstance(node, _Acc):
            self._hoist_access(node.base)
            base = self._leaf_operand(node.base)
            idx = self._emit(
                CodeType.ACCESS_MEMBER,
                op=Operand.ident("."),
                left=base,
                right=Operand.ident(node.comp),
                self_result=True,
            )
            node.operand = self._addr_of(idx)
        elif isinstance(node, _Neg):
            self._hoist_access(node.x)
        elif isinstance(node, _Bin):
            self._hoist_access(node.l)
            self._hoist_access(node.r)
        elif isinstance(node, _Call):
            for a in node.args:
                self._hoist_access(a)
        elif isinstance(node, _Asg):
            self._hoist_access(node.target)
            self._hoist_access(node.value)
        elif isinstance(node, _Out):
            self._hoist_access(node.value)

    def _leaf_operand(self, node) -> Operand:
        if isinstance(node, _Id):
            return Operand.ident(node.name)
        if isinstance(node, _Acc):
            return node.operand
        raise ParseError("access path must start at a variable", 0)

    def _emit_expr(self, node) -> Operand:
        if isinstance(node, _Num):
            return Operand.number(node.value)
        if isinstance(node, _Str):
            return Operand.string(node.value)
        if isinstance(node, _Id):
            return Operand.ident(node.name)
        if isinstance(node, _Acc):
            return node.operand  # hoisted
        if isinstance(node, _Neg):
            x = self._emit_expr(node.x)
            idx = self._emit(
                CodeType.EXPR, op=Operand.ident("neg"), left=x, self_result=True
            )
            return self._addr_of(idx)
        if isinstance(node, _Bin):
            l = self._emit_expr(node.l)
            r = self._emit_expr(node.r)
            idx = self._emit(
                CodeType.EXPR, op=Operand.ident(node.op), left=l, right=r, self_result=True
            )
            return self._addr_of(idx)
        if isinstance(node, _Call):
            ops = [self._emit_expr(a) for a in node.args]
            while len(ops) > 2:
                idx = self._emit(
                    CodeType.EXPR,
                    op=Operand.ident("param"),
                    left=ops[0],
                    right=ops[1],
                    self_result=True,
                )
                ops[0:2] = [self._addr_of(idx)]
            left = ops[0] if ops else Operand.empty()
            right = ops[1] if len(ops) > 1 else Operand.empty()
            idx = self._emit(
                CodeType.EXPR,
                op=Operand.ident(node.name),
                left=left,
                right=right,
                self_result=True,
            )
            return self._addr_of(idx)
        if isinstance(node, _Asg):
            v = self._emit_expr(node.value)
            t = self._leaf_operand(node.target)
            self._emit(CodeType.EXPR, op=Operand.ident("="), left=v, result=t)
            return t
        if isinstance(node, _Out):
            v = self._emit_expr(node.value)
            tail = self._emit_expr(node.tail) if node.tail is not None else Operand.empty()
            self._emit(CodeType.EXPR, op=Operand.ident("-->"), left=v, right=tail)
            return Operand.empty()
        raise AssertionError(f"unhandled node {node!r}")


def parse(text: str) -> list[CodeLine]:
    """Parse precompiled text into the raw line stream."""
    return Parser(text).parse_program()
