"""TOML reading (stdlib/backport) and a writer for this package's configs.

The writer covers exactly what our config and fixture files need: nested
tables, arrays of tables, strings, booleans, integers, floats (including
inf), and possibly-nested arrays of those. Floats are emitted with
shortest round-trip precision so a written file reproduces the exact
binary64 values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]


def loads(text: str) -> dict:
    return tomllib.loads(text)


def load_path(path: str | Path) -> dict:
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def dumps(table: Mapping) -> str:
    lines: list[str] = []
    _emit_table(table, prefix=(), lines=lines)
    return "\n".join(lines) + "\n"


def dump_path(table: Mapping, path: str | Path) -> None:
    Path(path).write_text(dumps(table), encoding="utf-8")


def _emit_table(table: Mapping, prefix: tuple[str, ...], lines: list[str]) -> None:
    scalars = {}
    subtables = {}
    table_arrays = {}
    for key, value in table.items():
        if isinstance(value, Mapping):
            subtables[key] = value
        elif (
            isinstance(value, list)
            and value
            and all(isinstance(item, Mapping) for item in value)
        ):
            table_arrays[key] = value
        else:
            scalars[key] = value

    if prefix and (scalars or not (subtables or table_arrays)):
        lines.append(f"[{'.'.join(_key(k) for k in prefix)}]")
    for key, value in scalars.items():
        lines.append(f"{_key(key)} = {_value(value)}")
    if scalars and (subtables or table_arrays):
        lines.append("")

    for key, value in subtables.items():
        _emit_table(value, prefix + (key,), lines)
    for key, items in table_arrays.items():
        for item in items:
            lines.append(f"[[{'.'.join(_key(k) for k in prefix + (key,))}]]")
            _emit_inline_table_body(item, prefix + (key,), lines)


def _emit_inline_table_body(
    table: Mapping, prefix: tuple[str, ...], lines: list[str]
) -> None:
    nested = {}
    for key, value in table.items():
        if isinstance(value, Mapping):
            nested[key] = value
        else:
            lines.append(f"{_key(key)} = {_value(value)}")
    for key, value in nested.items():
        lines.append(f"[{'.'.join(_key(k) for k in prefix + (key,))}]")
        _emit_inline_table_body(value, prefix + (key,), lines)


def _key(key: str) -> str:
    if key and all(c.isalnum() or c in "-_" for c in key):
        return key
    return _string(key)


def _value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _float(value)
    if isinstance(value, str):
        return _string(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def _float(value: float) -> str:
    if value != value:
        return "nan"
    if value == float("inf"):
        return "inf"
    if value == float("-inf"):
        return "-inf"
    text = repr(float(value))
    return text


def _string(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch in ('"', "\\"):
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
