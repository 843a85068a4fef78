"""Write word formulas as MONA input files (WS1S mode).

Translated formulas never mention the last position, so every word can be
padded with null letters; that makes the finite-set reading of WS1S agree
with the word reading used by the internal engine.
"""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .ws1s import formula as W

KEYWORDS = {
    "all0", "all1", "all2", "allpos", "and", "assert", "const", "defaultwhere1", "defaultwhere2",
    "empty", "ex0", "ex1", "ex2", "execute", "export", "false", "guide", "import", "in", "inter",
    "lastpos", "let0", "let1", "let2", "m2l-str", "m2l-tree", "macro", "max", "min", "notin",
    "pred", "prefix", "restrict", "root", "sub", "true", "tree", "union", "universe", "var0",
    "var1", "var2", "variant", "where", "ws1s", "ws2s",
}
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_']*")


class MonaError(ValueError):
    pass


def _check_names(names: Iterable[str]) -> None:
    for n in names:
        if not _IDENT.fullmatch(n) or n in KEYWORDS:
            raise MonaError(f"{n!r} is not a usable MONA identifier")


def _bound_names(f: W.WordFormula) -> set:
    out, seen, stack = set(), set(), [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if g.op in W.QUANT:
            out.add(g.args[0])
            stack.append(g.args[1])
        elif g.op not in W.ATOMS:
            stack.extend(g.args)
    return out


def emit_mona(f: W.WordFormula, order: Optional[Iterable[str]] = None, comment: str = "") -> str:
    """MONA text for ``f``: a ``ws1s;`` header, declarations of the free
    variables (``order`` first, the rest sorted), then the formula."""
    fo, so = W.free_vars(f)
    order = [v for v in (order or ()) if v in fo | so]
    rest = sorted((fo | so) - set(order))
    names = order + rest
    _check_names(names)
    _check_names(_bound_names(f))
    lines = []
    for c in comment.splitlines():
        lines.append(f"# {c}")
    lines.append("ws1s;")
    firsts = [v for v in names if v in fo]
    seconds = [v for v in names if v in so]
    if firsts:
        lines.append("var1 " + ", ".join(firsts) + ";")
    if seconds:
        lines.append("var2 " + ", ".join(seconds) + ";")
    lines.append(W.to_text(f, mona=True) + ";")
    return "\n".join(lines) + "\n"


def write_mona(path: str, f: W.WordFormula, order: Optional[Iterable[str]] = None, comment: str = "") -> str:
    text = emit_mona(f, order, comment)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def find_mona(path: Optional[str] = None) -> Optional[str]:
    """Path of an external MONA binary: ``path``, then $HISTMSO_MONA, then $PATH."""
    import os
    import shutil

    for cand in (path, os.environ.get("HISTMSO_MONA"), shutil.which("mona")):
        if cand and os.path.isfile(cand) and os.access(cand, os.X_OK):
            return cand
    return None


def run_mona(text: str, binary: str, timeout: float = 60.0) -> bool:
    """Satisfiability according to the external tool (``-q`` output parsed)."""
    import subprocess
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".mona", delete=False) as fh:
        fh.write(text)
        name = fh.name
    out = subprocess.run([binary, "-q", name], capture_output=True, text=True, timeout=timeout).stdout
    if "Formula is unsatisfiable" in out:
        return False
    if "Formula is valid" in out or "A satisfying example" in out:
        return True
    raise MonaError(f"could not read the MONA verdict:\n{out}")


__all__ = ["KEYWORDS", "MonaError", "emit_mona", "find_mona", "run_mona", "write_mona"]
