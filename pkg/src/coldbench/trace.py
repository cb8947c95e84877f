"""Line-oriented trace and script file formats.

Trace files carry the replayable sensor/event stream::

    # comment
    0 door_open
    500 reading 0 400.000
    3100 recognized coke
    6200 door_close

Script files carry simulator commands, one per line::

    open | close | place <name> <pos> | remove <pos> | wait <ms> | occlude <pos> <ms>

Both are UTF-8 with ``#`` comments and blank lines ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    t_ms: int
    kind: str  # door_open | door_close | reading | recognized
    position: int | None = None
    value: float | None = None
    name: str | None = None

    def to_line(self) -> str:
        if self.kind in ("door_open", "door_close"):
            return f"{self.t_ms} {self.kind}"
        if self.kind == "reading":
            return f"{self.t_ms} reading {self.position} {self.value:.3f}"
        if self.kind == "recognized":
            return f"{self.t_ms} recognized {self.name}"
        raise TraceFormatError(f"unknown trace kind {self.kind!r}")


def parse_trace_line(line: str, lineno: int = 0) -> TraceRecord | None:
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    try:
        t_ms = int(parts[0])
        kind = parts[1]
        if kind in ("door_open", "door_close"):
            return TraceRecord(t_ms=t_ms, kind=kind)
        if kind == "reading":
            return TraceRecord(t_ms=t_ms, kind=kind, position=int(parts[2]), value=float(parts[3]))
        if kind == "recognized":
            return TraceRecord(t_ms=t_ms, kind=kind, name=" ".join(parts[2:]))
    except (IndexError, ValueError) as exc:
        raise TraceFormatError(f"bad trace line {lineno}: {line!r}") from exc
    raise TraceFormatError(f"unknown record kind on line {lineno}: {line!r}")


def parse_trace(lines: Iterable[str]) -> Iterator[TraceRecord]:
    for i, line in enumerate(lines, start=1):
        rec = parse_trace_line(line, i)
        if rec is not None:
            yield rec


def load_trace(path: str | Path) -> list[TraceRecord]:
    return list(parse_trace(Path(path).read_text(encoding="utf-8").splitlines()))


def dump_trace(records: Iterable[TraceRecord]) -> str:
    return "\n".join(r.to_line() for r in records) + "\n"


class ScriptFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptCommand:
    kind: str  # open | close | place | remove | wait | occlude
    item: str | None = None
    position: int | None = None
    duration_ms: int | None = None

    def to_line(self) -> str:
        if self.kind in ("open", "close"):
            return self.kind
        if self.kind == "place":
            return f"place {self.item} {self.position}"
        if self.kind == "remove":
            return f"remove {self.position}"
        if self.kind == "wait":
            return f"wait {self.duration_ms}"
        if self.kind == "occlude":
            return f"occlude {self.position} {self.duration_ms}"
        raise ScriptFormatError(f"unknown command kind {self.kind!r}")


def parse_script_line(line: str, lineno: int = 0) -> ScriptCommand | None:
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    kind = parts[0]
    try:
        if kind in ("open", "close"):
            return ScriptCommand(kind=kind)
        if kind == "place":
            return ScriptCommand(kind="place", item=parts[1], position=int(parts[2]))
        if kind == "remove":
            return ScriptCommand(kind="remove", position=int(parts[1]))
        if kind == "wait":
            return ScriptCommand(kind="wait", duration_ms=int(parts[1]))
        if kind == "occlude":
            return ScriptCommand(kind="occlude", position=int(parts[1]), duration_ms=int(parts[2]))
    except (IndexError, ValueError) as exc:
        raise ScriptFormatError(f"bad script line {lineno}: {line!r}") from exc
    raise ScriptFormatError(f"unknown command on line {lineno}: {line!r}")


def parse_script(lines: Iterable[str]) -> list[ScriptCommand]:
    out = []
    for i, line in enumerate(lines, start=1):
        cmd = parse_script_line(line, i)
        if cmd is not None:
            out.append(cmd)
    return out


def load_script(path: str | Path) -> list[ScriptCommand]:
    return parse_script(Path(path).read_text(encoding="utf-8").splitlines())
