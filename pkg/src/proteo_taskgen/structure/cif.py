"""Minimal CIF tokenizer covering what mmCIF coordinate files use.

Handles ``data_`` blocks, ``loop_`` tables, single- and double-quoted values,
semicolon text fields and comments. Only the first data block is returned.
"""

from __future__ import annotations

import re
from typing import Iterator, Optional

from ..errors import ParseError

_TOKEN_RE = re.compile(r"""\s*(?:'(.*?)'(?=\s|$)|"(.*?)"(?=\s|$)|(#.*)|(\S+))""")


def _tokens(text: str) -> Iterator[tuple[str, bool]]:
    """Yield ``(value, quoted)`` pairs."""
    lines = text.splitlines()
    i, n = 0, len(lines)
    while i < n:
        line = lines[i]
        if line.startswith(";"):
            parts = [line[1:]]
            i += 1
            while i < n and not lines[i].startswith(";"):
                parts.append(lines[i])
                i += 1
            if i >= n:
                raise ParseError("unterminated semicolon text field")
            yield "\n".join(parts).strip(), True
            i += 1
            continue
        pos, end = 0, len(line)
        while pos < end:
            m = _TOKEN_RE.match(line, pos)
            if m is None or m.end() == pos:
                break
            pos = m.end()
            single, double, comment, bare = m.groups()
            if comment is not None:
                break
            if single is not None:
                yield single, True
            elif double is not None:
                yield double, True
            elif bare is not None:
                if bare[0] in "'\"":
                    raise ParseError(f"unterminated quoted value at line {i + 1}")
                yield bare, False
        i += 1


def _null(value: str, quoted: bool) -> Optional[str]:
    if not quoted and value in (".", "?"):
        return None
    return value


def parse_cif_block(text: str) -> tuple[str, dict[str, list[Optional[str]]]]:
    """Parse the first data block into ``{"_category.item": [values...]}``.

    Single items become one-element lists so loops and key-value pairs look
    the same to callers.
    """
    tokens = _tokens(text)
    block_name = None
    items: dict[str, list[Optional[str]]] = {}
    pending: Optional[tuple[str, bool]] = None

    def next_token():
        nonlocal pending
        if pending is not None:
            tok, pending = pending, None
            return tok
        return next(tokens, None)

    while True:
        tok = next_token()
        if tok is None:
            break
        value, quoted = tok
        low = value.lower()
        if not quoted and low.startswith("data_"):
            if block_name is not None:
                break
            block_name = value[5:]
            continue
        if block_name is None:
            raise ParseError("content before the first data_ block")
        if not quoted and low == "loop_":
            tags = []
            while True:
                tok = next_token()
                if tok is None:
                    break
                if not tok[1] and tok[0].startswith("_"):
                    tags.append(tok[0].lower())
                else:
                    pending = tok
                    break
            if not tags:
                raise ParseError("loop_ without tags")
            values = []
            while True:
                tok = next_token()
                if tok is None:
                    break
                v, q = tok
                if not q and (v.startswith("_") or v.lower() == "loop_" or v.lower().startswith("data_")
                              or v.lower().startswith("save_")):
                    pending = tok
                    break
                values.append(_null(v, q))
            if len(values) % len(tags):
                raise ParseError(f"loop with {len(tags)} tags has {len(values)} values")
            for k, tag in enumerate(tags):
                items[tag] = values[k::len(tags)]
            continue
        if not quoted and value.startswith("_"):
            tok = next_token()
            if tok is None:
                raise ParseError(f"tag {value} without value")
            items[value.lower()] = [_null(*tok)]
            continue
        if not quoted and low.startswith("save_"):
            continue
        raise ParseError(f"unexpected token {value!r}")
    if block_name is None:
        raise ParseError("no data_ block found")
    return block_name, items
