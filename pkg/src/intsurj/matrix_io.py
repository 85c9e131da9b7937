"""Plain-text matrix files.

Format: a header line ``n m``, then n lines of m whitespace-separated decimal
integers. Lines starting with ``#`` are comments; blank lines are ignored.
"""

from __future__ import annotations

import re

from .exact_linalg import IntMatrix

_INT = re.compile(r"[+-]?[0-9]+\Z")


class MatrixFormatError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


def _tokens(line: str):
    for m in re.finditer(r"\S+", line):
        yield m.start() + 1, m.group()


def _to_int(tok: str, lineno: int, col: int) -> int:
    # ASCII digits only, so parsing never depends on locale or unicode digits
    if not _INT.match(tok):
        raise MatrixFormatError(lineno, col, f"not a decimal integer: {tok!r}")
    return int(tok)


def parse_matrix(text: str) -> IntMatrix:
    lines = [
        (i, line) for i, line in enumerate(text.splitlines(), 1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise MatrixFormatError(1, 1, "missing header line 'n m'")
    hline, header = lines[0]
    htoks = list(_tokens(header))
    if len(htoks) != 2:
        raise MatrixFormatError(hline, 1, "header must be two counts 'n m'")
    n, m = (_to_int(tok, hline, col) for col, tok in htoks)
    if n < 0 or m < 0:
        raise MatrixFormatError(hline, 1, "negative shape")
    body = lines[1:]
    if len(body) != n:
        where = body[n][0] if len(body) > n else (body[-1][0] + 1 if body else hline + 1)
        raise MatrixFormatError(where, 1, f"expected {n} rows, found {len(body)}")
    entries = []
    for lineno, line in body:
        toks = list(_tokens(line))
        if len(toks) != m:
            col = toks[m][0] if len(toks) > m else len(line) + 1
            raise MatrixFormatError(lineno, col, f"expected {m} entries, found {len(toks)}")
        entries.extend(_to_int(tok, lineno, col) for col, tok in toks)
    return IntMatrix(n, m, tuple(entries))


def format_matrix(M: IntMatrix, comment: str = "") -> str:
    out = [f"# {line}" for line in comment.splitlines()]
    out.append(f"{M.rows} {M.cols}")
    out.extend(" ".join(str(x) for x in row) for row in M.to_rows())
    return "\n".join(out) + "\n"


def read_matrix(path) -> IntMatrix:
    with open(path, encoding="ascii", errors="strict") as fh:
        return parse_matrix(fh.read())
