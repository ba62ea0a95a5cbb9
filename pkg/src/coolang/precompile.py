"""Source normalization ahead of compilation.

Comments are stripped, all units merged, insignificant whitespace removed,
non-ASCII characters escaped, and multi-part function names fused:

    add (a) and (b) to (c)  ->  add_ARG_and_ARG_to(a,b,c)

String literal contents pass through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import PrecompileError, UnterminatedComment, UnterminatedString

KEYWORDS = frozenset(
    {"new", "return", "exp", "out", "system", "while", "if", "elseif", "else"}
)

ARG_MARKER = "_ARG_"


@dataclass(frozen=True)
class SourceUnit:
    path: str
    content: str


def _ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def _strip_comments(unit: SourceUnit) -> str:
    src = unit.content
    out = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c == '"':
            j = _skip_string(src, i, unit.path)
            out.append(src[i:j])
            i = j
        elif c == "/" and i + 1 < n and src[i + 1] == "/":
            while i < n and src[i] != "\n":
                i += 1
        elif c == "/" and i + 1 < n and src[i + 1] == "*":
            end = src.find("*/", i + 2)
            if end < 0:
                raise UnterminatedComment(f"{unit.path}: unterminated comment at offset {i}")
            # comment acts as whitespace; tokens on both sides stay apart
            out.append(" ")
            i = end + 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _skip_string(src: str, start: int, path: str) -> int:
    """Index just past the string literal opening at start."""
    i = start + 1
    n = len(src)
    while i < n:
        if src[i] == "\\" and i + 1 < n:
            i += 2
            continue
        if src[i] == '"':
            return i + 1
        i += 1
    raise UnterminatedString(f"{path}: unterminated string at offset {start}")


def _delete_whitespace(text: str) -> str:
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            j = _skip_string(text, i, "<merged>")
            out.append(text[i:j])
            i = j
        elif c.isspace():
            i += 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _escape_non_ascii(text: str) -> str:
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            j = _skip_string(text, i, "<merged>")
            out.append(text[i:j])
            i = j
        elif ord(c) > 127:
            out.append(f"_u{ord(c):X}_")
            i += 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _scan_group(text: str, start: int) -> int:
    """Index just past the balanced paren group opening at start."""
    depth = 0
    i, n = start, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            i = _skip_string(text, i, "<merged>")
            continue
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise PrecompileError(f"unbalanced parentheses at offset {start}")


def _fuse_names(text: str) -> str:
    """Rewrite name1(p1)name2(p2)... chains into name1_ARG_name2(p1,p2)."""
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            j = _skip_string(text, i, "<merged>")
            out.append(text[i:j])
            i = j
            continue
        if not _ident_start(c):
            out.append(c)
            i += 1
            continue

        j = i
        while j < n and _ident_char(text[j]):
            j += 1
        first = text[i:j]
        if first in KEYWORDS:
            out.append(first)
            i = j
            continue

        # collect the alternating name/group chain
        names = [first]
        groups: list[str] = []
        k = j
        while True:
            if k < n and text[k] == "(" and len(groups) == len(names) - 1:
                g = _scan_group(text, k)
                groups.append(text[k + 1 : g - 1])
                k = g
            elif k < n and _ident_start(text[k]) and len(groups) == len(names):
                m = k
                while m < n and _ident_char(text[m]):
                    m += 1
                nm = text[k:m]
                if nm in KEYWORDS:
                    break
                names.append(nm)
                k = m
            else:
                break

        if len(names) == 1 and not groups:
            out.append(first)
            i = j
            continue
        if len(names) > 1:
            for nm in names:
                if ARG_MARKER in nm:
                    raise PrecompileError(
                        f"identifier {nm!r} contains reserved marker {ARG_MARKER}"
                    )
        fused = ARG_MARKER.join(names)
        args = ",".join(_fuse_names(g) for g in groups)
        out.append(f"{fused}({args})")
        i = k
    return "".join(out)


def precompile(units: Union[str, Sequence[Union[SourceUnit, str]]]) -> str:
    """Merge and normalize source units into one compilable text."""
    if isinstance(units, str):
        units = [units]
    normalized: list[SourceUnit] = []
    for idx, u in enumerate(units):
        if isinstance(u, str):
            u = SourceUnit(path=f"<unit{idx}>", content=u)
        normalized.append(u)
    stripped = [_strip_comments(u) for u in normalized]
    merged = "\n".join(stripped)
    merged = _delete_whitespace(merged)
    merged = _escape_non_ascii(merged)
    return _fuse_names(merged)
