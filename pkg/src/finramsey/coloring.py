"""Coloring sources: builtin families, explicit tables, and external
line-oriented oracle subprocesses.

Every queried object has a canonical serialization; colors are memoized
per serialization, which also enforces determinism of repeated queries.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable

from .fincore import BlockSequence, FinElement
from .types_pyramids import type_of, type_of_sequence


class ColoringError(RuntimeError):
    """Oracle failure; carries the offending object."""

    def __init__(self, message: str, obj=None):
        super().__init__(message)
        self.obj = obj


class OracleProtocolError(ColoringError):
    """Violation of the line-oriented oracle protocol."""


def canonical_key(obj) -> str:
    """Canonical serialization used for memoization, tables, certificates."""
    if hasattr(obj, "serialize"):
        return obj.serialize()
    if isinstance(obj, tuple) and all(isinstance(x, int) for x in obj):
        return f"set:[{','.join(str(x) for x in obj)}]"
    raise ColoringError(f"cannot serialize object of type {type(obj).__name__}", obj)


def _support_size(obj) -> int:
    if isinstance(obj, FinElement):
        return len(obj.support)
    if isinstance(obj, BlockSequence):
        return sum(len(e.support) for e in obj)
    if isinstance(obj, tuple):
        return len(obj)
    if hasattr(obj, "total_size"):
        return obj.total_size()
    raise ColoringError(f"no support notion for {type(obj).__name__}", obj)


def _max_position(obj) -> int:
    if isinstance(obj, FinElement):
        return obj.support[-1]
    if isinstance(obj, BlockSequence):
        return obj.entries[-1].support[-1]
    if isinstance(obj, tuple):
        return max(obj)
    raise ColoringError(f"no position notion for {type(obj).__name__}", obj)


def _stable_hash(text: str) -> int:
    # FNV-1a; must be deterministic across runs, unlike built-in hash
    h = 0xCBF29CE484222325
    for byte in text.encode():
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _type_key(obj) -> str:
    if isinstance(obj, FinElement):
        return type_of(obj).type.serialize()
    if isinstance(obj, BlockSequence):
        types, _ = type_of_sequence(obj)
        return ";".join(t.serialize() for t in types)
    raise ColoringError(f"no type notion for {type(obj).__name__}", obj)


def builtin_family(name: str, colors: int) -> Callable:
    """Builtin pure coloring families.

    const:<c>        constant color c
    supp-parity      1 for odd total support size, 2 for even
    max-pos-mod:<r>  1 + (max support position - 1) mod r
    type-hash:<r>    stable hash of the run-pattern type, mod r
    card-parity      alias of supp-parity for subset domains
    """
    if name.startswith("const:"):
        c = int(name.split(":", 1)[1])
        if not 1 <= c <= colors:
            raise ColoringError(f"constant color {c} out of 1..{colors}")
        return lambda obj: c
    if name in ("supp-parity", "card-parity"):
        return lambda obj: 1 if _support_size(obj) % 2 else 2
    if name.startswith("max-pos-mod:"):
        m = int(name.split(":", 1)[1])
        return lambda obj: (_max_position(obj) - 1) % m + 1
    if name.startswith("type-hash:"):
        m = int(name.split(":", 1)[1])
        return lambda obj: _stable_hash(_type_key(obj)) % m + 1
    raise ColoringError(f"unknown builtin coloring {name!r}")


@dataclass
class Coloring:
    """A total coloring with memoized, validated queries.

    width, when set, is the ambient width of the source; elements of
    smaller width are zero-padded before the query, wider ones fail.
    """

    colors: int
    fn: Callable
    source: str
    width: int | None = None
    _memo: dict = field(default_factory=dict, repr=False)

    def _pad(self, obj):
        if self.width is None:
            return obj
        if isinstance(obj, (FinElement, BlockSequence)):
            if obj.width > self.width:
                raise ColoringError(
                    f"object width {obj.width} exceeds oracle width {self.width}", obj)
            return obj.pad(self.width)
        return obj

    def color_of(self, obj) -> int:
        obj = self._pad(obj)
        key = canonical_key(obj)
        if key in self._memo:
            return self._memo[key]
        try:
            c = self.fn(obj)
        except ColoringError:
            raise
        except Exception as exc:  # table misses, subprocess trouble
            raise ColoringError(f"oracle failed on {key}: {exc}", obj) from exc
        if not isinstance(c, int) or not 1 <= c <= self.colors:
            raise ColoringError(f"oracle returned {c!r}, expected 1..{self.colors}", obj)
        self._memo[key] = c
        return c

    __call__ = color_of


def builtin_coloring(name: str, colors: int, width: int | None = None) -> Coloring:
    return Coloring(colors, builtin_family(name, colors), f"builtin:{name}", width)


def table_coloring(entries: dict[str, int], colors: int,
                   width: int | None = None, source: str = "table") -> Coloring:
    def fn(obj):
        key = canonical_key(obj)
        if key not in entries:
            raise KeyError(f"no table entry for {key}")
        return entries[key]

    return Coloring(colors, fn, source, width)


def function_coloring(fn: Callable, colors: int, source: str = "derived",
                      width: int | None = None) -> Coloring:
    return Coloring(colors, fn, source, width)


class OracleProcess:
    """Line-oriented subprocess oracle: one canonical serialization per
    request line, one decimal color per response line."""

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None

    def _ensure(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True, bufsize=1)

    def query(self, obj) -> int:
        key = canonical_key(obj)
        if "\n" in key:
            raise OracleProtocolError(f"serialization contains newline: {key!r}", obj)
        self._ensure()
        try:
            self._proc.stdin.write(key + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise OracleProtocolError(f"oracle process failed: {exc}", obj) from exc
        if not line:
            raise OracleProtocolError("oracle process closed its output", obj)
        try:
            return int(line.strip())
        except ValueError as exc:
            raise OracleProtocolError(f"non-decimal oracle response {line!r}", obj) from exc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)


def exec_coloring(command: str, colors: int, width: int | None = None) -> Coloring:
    oracle = OracleProcess(command)
    return Coloring(colors, oracle.query, f"exec:{command}", width)


def coloring_from_spec(spec: str, colors: int, width: int | None = None) -> Coloring:
    """Parse --coloring flags: builtin:<name> | table:<file> | exec:<cmd>."""
    kind, _, rest = spec.partition(":")
    if kind == "builtin":
        return builtin_coloring(rest, colors, width)
    if kind == "table":
        import json

        with open(rest) as fh:
            doc = json.load(fh)
        entries = {str(k): int(v) for k, v in doc["entries"].items()}
        return table_coloring(entries, doc.get("colors", colors),
                              doc.get("width", width), source=f"table:{rest}")
    if kind == "exec":
        return exec_coloring(rest, colors, width)
    raise ColoringError(f"unknown coloring source {spec!r}")
