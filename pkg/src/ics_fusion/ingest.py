"""Readers and writers for Zeek TSV logs and wide process-variable CSV files.

Zeek logs are consumed in their native ASCII layout: a block of ``#``
directives followed by one tab-separated record per line. Parsing is
streaming; malformed data lines are skipped, logged with their line number
and tallied in a :class:`ParseStats` instead of aborting the file.
"""

from __future__ import annotations

import csv
import logging
import math
import re
import time
from collections import Counter
from dataclasses import dataclass, field, fields as dc_fields
from typing import IO, ClassVar, Iterable, Iterator, Sequence

from .errors import (
    FieldCountError,
    FieldTypeError,
    HeaderMissing,
    MissingDirective,
    MissingField,
    SchemaMismatch,
    UnknownTag,
)

log = logging.getLogger(__name__)

SCALAR_TYPES = {
    "time", "interval", "count", "int", "double", "string", "addr", "subnet",
    "port", "enum", "bool",
}
_CONTAINER_RE = re.compile(r"^(set|vector)\[(\w+)\]$")
_HEX_ESCAPE_RE = re.compile(r"\\x([0-9a-fA-F]{2})")


@dataclass(frozen=True)
class ZeekSchema:
    separator: str
    field_names: tuple[str, ...]
    field_types: tuple[str, ...]
    set_separator: str = ","
    unset_marker: str = "-"
    empty_marker: str = "(empty)"
    path: str | None = None

    def __post_init__(self):
        if not self.field_names:
            raise SchemaMismatch("schema needs at least one field")
        if len(self.field_names) != len(self.field_types):
            raise SchemaMismatch(
                f"{len(self.field_names)} field names but {len(self.field_types)} types"
            )
        if len(set(self.field_names)) != len(self.field_names):
            raise SchemaMismatch("field names are not unique")
        for t in self.field_types:
            if t not in SCALAR_TYPES and not _CONTAINER_RE.match(t):
                raise SchemaMismatch(f"unsupported Zeek type {t!r}")

    def index(self, name: str) -> int:
        return self.field_names.index(name)

    def header_lines(self, open_ts: float | None = None) -> list[str]:
        sep = self.separator
        lines = [
            "#separator " + "".join(f"\\x{ord(c):02x}" for c in sep),
            f"#set_separator{sep}{self.set_separator}",
            f"#empty_field{sep}{self.empty_marker}",
            f"#unset_field{sep}{self.unset_marker}",
        ]
        if self.path:
            lines.append(f"#path{sep}{self.path}")
        if open_ts is not None:
            lines.append(f"#open{sep}{_zeek_stamp(open_ts)}")
        lines.append("#fields" + sep + sep.join(self.field_names))
        lines.append("#types" + sep + sep.join(self.field_types))
        return lines


def _zeek_stamp(ts: float) -> str:
    return time.strftime("%Y-%m-%d-%H-%M-%S", time.gmtime(ts))


def _decode_separator(raw: str) -> str:
    return _HEX_ESCAPE_RE.sub(lambda m: chr(int(m.group(1), 16)), raw.strip())


def parse_zeek_header(lines: str | Iterable[str]) -> ZeekSchema:
    """Build a schema from the ``#`` directive block of a Zeek log.

    ``lines`` may be the header text or an iterable of lines; parsing stops
    at the first data line.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    separator = None
    directives: dict[str, list[str]] = {}
    for line in lines:
        line = line.rstrip("\r\n")
        if not line:
            continue
        if not line.startswith("#"):
            break
        if line.startswith("#separator"):
            separator = _decode_separator(line[len("#separator"):])
            continue
        sep = separator if separator is not None else "\t"
        key, _, rest = line[1:].partition(sep)
        directives[key] = rest.split(sep) if rest else []
    if separator is None:
        raise MissingDirective("#separator")
    for required in ("fields", "types"):
        if required not in directives:
            raise MissingDirective(f"#{required}")

    def single(key, default):
        vals = directives.get(key)
        return separator.join(vals) if vals else default

    return ZeekSchema(
        separator=separator,
        field_names=tuple(directives["fields"]),
        field_types=tuple(directives["types"]),
        set_separator=single("set_separator", ","),
        unset_marker=single("unset_field", "-"),
        empty_marker=single("empty_field", "(empty)"),
        path=single("path", None),
    )


# -- value conversion -------------------------------------------------------

def _unescape(s: str) -> str:
    if "\\x" not in s:
        return s
    return _HEX_ESCAPE_RE.sub(lambda m: chr(int(m.group(1), 16)), s)


def _escape(s: str, schema: ZeekSchema, in_set: bool = False) -> str:
    if s == "":
        return schema.empty_marker
    if s == schema.unset_marker or s == schema.empty_marker:
        return "".join(f"\\x{ord(c):02x}" for c in s)
    specials = {"\\", schema.separator, "\n", "\r"}
    if in_set:
        specials.add(schema.set_separator)
    if not any(c in s for c in specials):
        return s
    return "".join(f"\\x{ord(c):02x}" if c in specials else c for c in s)


def _convert_scalar(raw: str, ztype: str, schema: ZeekSchema):
    if ztype in ("time", "interval", "double"):
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError(raw)
        if ztype == "interval" and v < 0:
            raise ValueError(raw)
        return v
    if ztype in ("count", "port"):
        if not raw.isdigit():
            raise ValueError(raw)
        v = int(raw)
        if ztype == "port" and v > 65535:
            raise ValueError(raw)
        return v
    if ztype == "int":
        return int(raw)
    if ztype == "bool":
        if raw == "T":
            return True
        if raw == "F":
            return False
        raise ValueError(raw)
    if raw == schema.empty_marker:
        return ""
    return _unescape(raw)


def convert_value(raw: str, ztype: str, schema: ZeekSchema):
    """Convert one TSV cell to a Python value; the unset marker maps to None."""
    if raw == schema.unset_marker:
        return None
    m = _CONTAINER_RE.match(ztype)
    if m:
        if raw == schema.empty_marker:
            return ()
        return tuple(_convert_scalar(p, m.group(2), schema) for p in raw.split(schema.set_separator))
    return _convert_scalar(raw, ztype, schema)


def _fmt_float(x: float) -> str:
    s = f"{x:.6f}"
    return s if float(s) == x else repr(x)


def format_value(value, ztype: str, schema: ZeekSchema) -> str:
    if value is None:
        return schema.unset_marker
    m = _CONTAINER_RE.match(ztype)
    if m:
        if not value:
            return schema.empty_marker
        return schema.set_separator.join(
            format_value(v, m.group(2), schema) if m.group(2) not in ("string", "enum")
            else _escape(v, schema, in_set=True)
            for v in value
        )
    if ztype in ("time", "interval", "double"):
        return _fmt_float(float(value))
    if ztype == "bool":
        return "T" if value else "F"
    if ztype in ("count", "port", "int"):
        return str(int(value))
    return _escape(str(value), schema)


# -- records ----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ConnRecord:
    ts: float
    uid: str
    orig_addr: str
    orig_port: int
    resp_addr: str
    resp_port: int
    proto: str
    service: str | None = None
    duration: float | None = None
    orig_bytes: int | None = None
    resp_bytes: int | None = None
    conn_state: str = "OTH"
    orig_pkts: int | None = None
    resp_pkts: int | None = None

    purdue_level: ClassVar[str] = "3"


@dataclass(frozen=True, slots=True)
class CipRecord:
    ts: float
    uid: str
    orig_addr: str
    resp_addr: str
    command: str
    status: str | None
    request_len: int
    response_len: int

    purdue_level: ClassVar[str] = "1-2"


PROTOCOLS = ("tcp", "udp", "icmp")

# record attribute -> (zeek column, zeek type, required value)
CONN_COLUMNS = {
    "ts": ("ts", "time", True),
    "uid": ("uid", "string", True),
    "orig_addr": ("id.orig_h", "addr", True),
    "orig_port": ("id.orig_p", "port", True),
    "resp_addr": ("id.resp_h", "addr", True),
    "resp_port": ("id.resp_p", "port", True),
    "proto": ("proto", "enum", True),
    "service": ("service", "string", False),
    "duration": ("duration", "interval", False),
    "orig_bytes": ("orig_bytes", "count", False),
    "resp_bytes": ("resp_bytes", "count", False),
    "conn_state": ("conn_state", "string", True),
    "orig_pkts": ("orig_pkts", "count", False),
    "resp_pkts": ("resp_pkts", "count", False),
}

CIP_COLUMNS = {
    "ts": ("ts", "time", True),
    "uid": ("uid", "string", True),
    "orig_addr": ("id.orig_h", "addr", True),
    "resp_addr": ("id.resp_h", "addr", True),
    "command": ("cip_service", "string", True),
    "status": ("cip_status", "string", False),
    "request_len": ("request_len", "count", True),
    "response_len": ("response_len", "count", True),
}

def conn_schema(separator: str = "\t") -> ZeekSchema:
    cols = list(CONN_COLUMNS.values())
    return ZeekSchema(
        separator=separator,
        field_names=tuple(c[0] for c in cols),
        field_types=tuple(c[1] for c in cols),
        path="conn",
    )


def cip_schema(separator: str = "\t") -> ZeekSchema:
    cols = list(CIP_COLUMNS.values())
    return ZeekSchema(
        separator=separator,
        field_names=tuple(c[0] for c in cols),
        field_types=tuple(c[1] for c in cols),
        path="cip",
    )


@dataclass
class ParseStats:
    """Per-file bookkeeping: ``data_lines == emitted + len(skipped)``."""

    data_lines: int = 0
    emitted: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)
    unset: Counter = field(default_factory=Counter)

    @property
    def skip_count(self) -> int:
        return len(self.skipped)

    def to_dict(self) -> dict:
        return {
            "data_lines": self.data_lines,
            "emitted": self.emitted,
            "skipped": self.skip_count,
            "skipped_lines": [ln for ln, _ in self.skipped],
            "unset": dict(sorted(self.unset.items())),
        }


def _lines(stream: IO[str] | Iterable[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        yield lineno, line.rstrip("\r\n")


def iter_zeek_rows(stream, stats: ParseStats | None = None) -> Iterator[tuple[int, ZeekSchema, list]]:
    """Yield ``(lineno, schema, values)`` for every well-formed data line."""
    stats = stats if stats is not None else ParseStats()
    header: list[str] = []
    schema: ZeekSchema | None = None
    for lineno, line in _lines(stream):
        if line.startswith("#"):
            if schema is None:
                header.append(line)
            continue
        if not line:
            continue
        if schema is None:
            schema = parse_zeek_header(header)
        stats.data_lines += 1
        parts = line.split(schema.separator)
        try:
            if len(parts) != len(schema.field_names):
                raise FieldCountError(lineno, len(schema.field_names), len(parts))
            values = []
            for name, ztype, raw in zip(schema.field_names, schema.field_types, parts):
                try:
                    values.append(convert_value(raw, ztype, schema))
                except ValueError:
                    raise FieldTypeError(lineno, name, raw, ztype) from None
        except (FieldCountError, FieldTypeError) as exc:
            log.warning("skipping %s", exc)
            stats.skipped.append((lineno, str(exc)))
            continue
        yield lineno, schema, values
    if schema is None and header:
        parse_zeek_header(header)


def _iter_records(stream, columns, build, stats):
    stats = stats if stats is not None else ParseStats()
    indexes = None
    seen_schema = None
    for lineno, schema, values in iter_zeek_rows(stream, stats):
        if schema is not seen_schema:
            missing = [c[0] for c in columns.values() if c[0] not in schema.field_names]
            if missing:
                raise MissingField(f"log lacks required columns: {', '.join(missing)}")
            indexes = {attr: schema.index(col) for attr, (col, _, _) in columns.items()}
            seen_schema = schema
        kw = {}
        try:
            for attr, (col, _, required) in columns.items():
                v = values[indexes[attr]]
                if v is None:
                    if required:
                        raise FieldTypeError(lineno, col, "-", "required value")
                    stats.unset[attr] += 1
                kw[attr] = v
            rec = build(lineno, kw)
        except FieldTypeError as exc:
            log.warning("skipping %s", exc)
            stats.skipped.append((lineno, str(exc)))
            continue
        stats.emitted += 1
        yield rec


def _build_conn(lineno, kw):
    if kw["ts"] <= 0:
        raise FieldTypeError(lineno, "ts", kw["ts"], "positive time")
    if kw["proto"] not in PROTOCOLS:
        raise FieldTypeError(lineno, "proto", kw["proto"], "transport protocol")
    return ConnRecord(**kw)


def _build_cip(lineno, kw):
    if kw["ts"] <= 0:
        raise FieldTypeError(lineno, "ts", kw["ts"], "positive time")
    return CipRecord(**kw)


def iter_conn_log(stream, stats: ParseStats | None = None) -> Iterator[ConnRecord]:
    return _iter_records(stream, CONN_COLUMNS, _build_conn, stats)


def iter_cip_log(stream, stats: ParseStats | None = None) -> Iterator[CipRecord]:
    return _iter_records(stream, CIP_COLUMNS, _build_cip, stats)


def parse_conn_log(stream) -> tuple[list[ConnRecord], ParseStats]:
    stats = ParseStats()
    return list(iter_conn_log(stream, stats)), stats


def parse_cip_log(stream) -> tuple[list[CipRecord], ParseStats]:
    stats = ParseStats()
    return list(iter_cip_log(stream, stats)), stats


def write_zeek_log(records: Sequence, stream: IO[str], schema: ZeekSchema, columns: dict) -> None:
    """Serialize records under ``schema``; columns the records lack are written unset."""
    attr_for = {col: attr for attr, (col, _, _) in columns.items()}
    open_ts = records[0].ts if records else None
    for line in schema.header_lines(open_ts):
        stream.write(line + "\n")
    sep = schema.separator
    getters = [attr_for.get(name) for name in schema.field_names]
    for rec in records:
        cells = [
            format_value(getattr(rec, attr) if attr else None, ztype, schema)
            for attr, ztype in zip(getters, schema.field_types)
        ]
        stream.write(sep.join(cells) + "\n")
    if records:
        stream.write(f"#close{sep}{_zeek_stamp(records[-1].ts)}\n")


def write_conn_log(records: Sequence[ConnRecord], stream: IO[str], schema: ZeekSchema | None = None) -> None:
    write_zeek_log(records, stream, schema or conn_schema(), CONN_COLUMNS)


def write_cip_log(records: Sequence[CipRecord], stream: IO[str], schema: ZeekSchema | None = None) -> None:
    write_zeek_log(records, stream, schema or cip_schema(), CIP_COLUMNS)


# -- process variables ------------------------------------------------------

SENSOR, ACTUATOR = "sensor", "actuator"
ACTUATOR_STATES = (0, 1, 2)

DEFAULT_TAG_PREFIXES = {
    "FIT": SENSOR, "LIT": SENSOR, "AIT": SENSOR, "PIT": SENSOR, "DPIT": SENSOR,
    "P": ACTUATOR, "MV": ACTUATOR, "UV": ACTUATOR,
}


class TagRegistry:
    """Maps process tags like ``LIT101`` to sensor/actuator by alphabetic prefix.

    The prefix is the leading run of letters, so ``PIT501`` resolves to
    ``PIT`` rather than ``P``.
    """

    _TAG_RE = re.compile(r"^([A-Z]+)(\d+)$")

    def __init__(self, prefixes: dict[str, str] | None = None):
        self.prefixes = dict(DEFAULT_TAG_PREFIXES if prefixes is None else prefixes)
        for kind in self.prefixes.values():
            if kind not in (SENSOR, ACTUATOR):
                raise ValueError(f"unknown tag kind {kind!r}")

    def kind(self, tag: str) -> str:
        m = self._TAG_RE.match(tag.strip().upper())
        if not m or m.group(1) not in self.prefixes:
            raise UnknownTag(tag)
        return self.prefixes[m.group(1)]


@dataclass(frozen=True, slots=True)
class ProcessSample:
    ts: int
    tag: str
    kind: str
    value: float | int | None

    purdue_level: ClassVar[str] = "0"

    @property
    def missing(self) -> bool:
        return self.value is None


@dataclass
class ProcessStats:
    rows: int = 0
    samples: int = 0
    missing: Counter = field(default_factory=Counter)
    bad_cells: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "samples": self.samples,
            "missing": dict(sorted(self.missing.items())),
            "bad_cells": len(self.bad_cells),
        }


def read_process_header(row: list[str], registry: TagRegistry) -> list[tuple[str, str]]:
    if not row or row[0].strip().lower() != "timestamp":
        raise HeaderMissing("first row must start with 'timestamp'")
    return [(tag.strip(), registry.kind(tag)) for tag in row[1:]]


def iter_process_csv(stream, registry: TagRegistry | None = None,
                     stats: ProcessStats | None = None) -> Iterator[ProcessSample]:
    """Explode wide 1 Hz rows into one sample per (second, tag).

    Blank or malformed cells become samples with ``value=None``; malformed
    ones are also recorded in ``stats.bad_cells``.
    """
    registry = registry or TagRegistry()
    stats = stats if stats is not None else ProcessStats()
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMissing("empty process file") from None
    tags = read_process_header(header, registry)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            ts_f = float(row[0])
        except ValueError:
            stats.bad_cells.append((lineno, "timestamp"))
            log.warning("line %d: bad timestamp %r, row skipped", lineno, row[0])
            continue
        ts = int(ts_f) if ts_f.is_integer() else ts_f
        stats.rows += 1
        cells = row[1:] + [""] * (len(tags) - len(row) + 1)
        for (tag, kind), cell in zip(tags, cells):
            value = _process_value(cell.strip(), kind)
            if value is None:
                if cell.strip():
                    stats.bad_cells.append((lineno, tag))
                    log.warning("line %d: bad %s value %r for %s", lineno, kind, cell, tag)
                stats.missing[tag] += 1
            stats.samples += 1
            yield ProcessSample(ts, tag, kind, value)


def _process_value(cell: str, kind: str):
    if not cell:
        return None
    try:
        v = float(cell)
    except ValueError:
        return None
    if not math.isfinite(v):
        return None
    if kind == ACTUATOR:
        if not v.is_integer() or int(v) not in ACTUATOR_STATES:
            return None
        return int(v)
    return v


def parse_process_csv(stream, registry: TagRegistry | None = None) -> tuple[list[ProcessSample], ProcessStats]:
    stats = ProcessStats()
    return list(iter_process_csv(stream, registry, stats)), stats


def record_fields(cls) -> list[str]:
    return [f.name for f in dc_fields(cls)]
