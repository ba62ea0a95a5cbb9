"""Flat text form of the code tables.

One section per table, tab-separated rows sorted by address, so equal
tables always serialize to identical bytes. Operand columns are typed by
the KINDS column; text payloads are percent-escaped.
"""

from __future__ import annotations

import os
import tempfile
from typing import Optional
from urllib.parse import quote, unquote

from .addresses import Address
from .code import (
    BUILTIN,
    ClassInfo,
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
)
from .errors import FormatError

_MAGIC = "COOLCC 1"
_SEP = "---"


def _enc_addr(a: Optional[Address]) -> str:
    return "-" if a is None else str(a)


def _dec_addr(s: str) -> Optional[Address]:
    return None if s == "-" else Address.parse(s)


def _enc_operand(o: Operand) -> str:
    if o.kind is OperandKind.EMPTY:
        return "-"
    if o.kind is OperandKind.NUMBER:
        return repr(o.num)
    if o.kind is OperandKind.ADDRESS:
        return str(o.addr)
    return quote(o.text, safe="")


def _dec_operand(kind: str, payload: str) -> Operand:
    k = OperandKind(kind)
    if k is OperandKind.EMPTY:
        return Operand.empty()
    if k is OperandKind.NUMBER:
        return Operand.number(float(payload))
    if k is OperandKind.ADDRESS:
        return Operand.address(Address.parse(payload))
    if k is OperandKind.TEXT:
        return Operand.string(unquote(payload))
    return Operand.ident(unquote(payload))


def _enc_line(ln: ExtendedLine) -> str:
    if ln.bound is None:
        bound = "-"
    elif ln.bound is BUILTIN:
        bound = "B"
    else:
        bound = str(ln.bound)
    cols = [
        str(ln.address),
        _enc_addr(ln.scope),
        ln.exec_flag.value,
        ln.ctype.value,
        _enc_operand(ln.op),
        _enc_operand(ln.left),
        _enc_operand(ln.right),
        _enc_operand(ln.result),
        ",".join(o.kind.value for o in (ln.op, ln.left, ln.right, ln.result)),
        "".join(p.value for p in ln.pending),
        "".join("T" if f else "F" for f in ln.formal),
        bound,
        "T" if ln.root else "F",
    ]
    return "\t".join(cols)


def _dec_line(row: str) -> ExtendedLine:
    cols = row.split("\t")
    if len(cols) != 13:
        raise FormatError(f"code row has {len(cols)} columns, wanted 13")
    kinds = cols[8].split(",")
    if len(kinds) != 4:
        raise FormatError("operand kinds must cover all four slots")
    if cols[11] == "-":
        bound = None
    elif cols[11] == "B":
        bound = BUILTIN
    else:
        bound = Address.parse(cols[11])
    return ExtendedLine(
        address=Address.parse(cols[0]),
        scope=_dec_addr(cols[1]),
        exec_flag=ExecFlag(cols[2]),
        ctype=CodeType(cols[3]),
        op=_dec_operand(kinds[0], cols[4]),
        left=_dec_operand(kinds[1], cols[5]),
        right=_dec_operand(kinds[2], cols[6]),
        result=_dec_operand(kinds[3], cols[7]),
        pending=[PendFlag(c) for c in cols[9]],
        formal=[c == "T" for c in cols[10]],
        bound=bound,
        root=cols[12] == "T",
    )


def serialize(tables: Tables) -> str:
    out = [_MAGIC + (" preexec" if tables.preexecuted else "")]
    for a in sorted(tables.code.addresses()):
        out.append(_enc_line(tables.code[a]))
    out.append(_SEP)
    for start in sorted(tables.scopes):
        info = tables.scopes[start]
        out.append(
            "\t".join(
                [
                    str(start),
                    info.kind.value,
                    str(info.start),
                    str(info.end),
                    _enc_addr(info.param_query),
                    _enc_addr(info.parent),
                ]
            )
        )
    out.append(_SEP)
    for fop in sorted(tables.functions):
        fn = tables.functions[fop]
        out.append(
            "\t".join(
                [
                    str(fop),
                    quote(fn.name or "", safe=""),
                    str(fn.decl_scope),
                    str(fn.decl_root),
                    _enc_addr(fn.body_scope),
                    ",".join(str(r) for r in fn.returns) or "-",
                    "T" if fn.is_exp else "F",
                    "T" if fn.is_reverse else "F",
                    repr(fn.weight),
                    _enc_addr(fn.class_scope),
                ]
            )
        )
    out.append(_SEP)
    for scope in sorted(tables.classes):
        info = tables.classes[scope]
        out.append(
            "\t".join(
                [
                    str(scope),
                    quote(info.name, safe=""),
                    ",".join(str(p) for p in info.parents) or "-",
                ]
            )
        )
    return "\n".join(out) + "\n"


def deserialize(text: str) -> Tables:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MAGIC):
        raise FormatError("not a code table file")
    header = lines[0][len(_MAGIC) :].strip()
    if header not in ("", "preexec"):
        raise FormatError(f"unknown header flags {header!r}")

    sections: list[list[str]] = [[]]
    for row in lines[1:]:
        if row == _SEP:
            sections.append([])
        else:
            sections[-1].append(row)
    if len(sections) != 4:
        raise FormatError(f"wanted 4 sections, found {len(sections)}")

    tables = Tables(preexecuted=header == "preexec")
    for row in sections[0]:
        tables.code.insert(_dec_line(row))
    for row in sections[1]:
        cols = row.split("\t")
        if len(cols) != 6:
            raise FormatError("scope row needs 6 columns")
        tables.scopes[Address.parse(cols[0])] = ScopeInfo(
            kind=ScopeKind(cols[1]),
            start=Address.parse(cols[2]),
            end=Address.parse(cols[3]),
            param_query=_dec_addr(cols[4]),
            parent=_dec_addr(cols[5]),
        )
    for row in sections[2]:
        cols = row.split("\t")
        if len(cols) != 10:
            raise FormatError("function row needs 10 columns")
        fop = Address.parse(cols[0])
        tables.functions[fop] = FunctionInfo(
            decl_scope=Address.parse(cols[2]),
            decl_root=Address.parse(cols[3]),
            body_scope=_dec_addr(cols[4]),
            returns=[] if cols[5] == "-" else [Address.parse(r) for r in cols[5].split(",")],
            is_exp=cols[6] == "T",
            is_reverse=cols[7] == "T",
            weight=float(cols[8]),
            func_op=fop,
            name=unquote(cols[1]) or None,
            class_scope=_dec_addr(cols[9]),
        )
    for row in sections[3]:
        cols = row.split("\t")
        if len(cols) != 3:
            raise FormatError("class row needs 3 columns")
        tables.classes[Address.parse(cols[0])] = ClassInfo(
            scope=Address.parse(cols[0]),
            name=unquote(cols[1]),
            parents=[] if cols[2] == "-" else [Address.parse(p) for p in cols[2].split(",")],
        )

    # binding direction is a property of the bound function, not stored
    for ln in tables.code.lines():
        if ln.is_user_bound and ln.bound in tables.functions:
            ln.bound_reverse = tables.functions[ln.bound].is_reverse
    return tables


def write_file(tables: Tables, path: str) -> None:
    data = serialize(tables)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".coolcc-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_file(path: str) -> Tables:
    with open(path) as f:
        return deserialize(f.read())
