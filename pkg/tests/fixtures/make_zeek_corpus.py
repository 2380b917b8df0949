"""Regenerate tests/fixtures/zeek/*.log and expected.json.

Expected counts are written from how each file is built (which lines were
deliberately broken), never from running the parser.

    python tests/fixtures/make_zeek_corpus.py
"""

from __future__ import annotations

import json
from pathlib import Path

HERE = Path(__file__).parent / "zeek"

CONN_FIELDS = ["ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "proto", "service",
               "duration", "orig_bytes", "resp_bytes", "conn_state", "orig_pkts", "resp_pkts"]
CONN_TYPES = ["time", "string", "addr", "port", "addr", "port", "enum", "string", "interval",
              "count", "count", "string", "count", "count"]
CIP_FIELDS = ["ts", "uid", "id.orig_h", "id.resp_h", "cip_service", "cip_status", "request_len",
              "response_len"]
CIP_TYPES = ["time", "string", "addr", "addr", "string", "string", "count", "count"]


def header(path, fields, types, sep="\t"):
    return [
        "#separator \\x09" if sep == "\t" else "#separator " + "".join(f"\\x{ord(c):02x}" for c in sep),
        f"#set_separator{sep},",
        f"#empty_field{sep}(empty)",
        f"#unset_field{sep}-",
        f"#path{sep}{path}",
        f"#open{sep}2022-03-15-02-40-00",
        f"#fields{sep}" + sep.join(fields),
        f"#types{sep}" + sep.join(types),
    ]


def conn_line(i, **over):
    row = {
        "ts": f"{1647312000 + i}.{(i * 137) % 1000:03d}", "uid": f"C{i:05d}", "id.orig_h": "192.168.1.100",
        "id.orig_p": str(50000 + i), "id.resp_h": "192.168.1.10", "id.resp_p": "44818", "proto": "tcp",
        "service": "enip", "duration": "0.250000", "orig_bytes": "312", "resp_bytes": "128",
        "conn_state": "SF", "orig_pkts": "4", "resp_pkts": "3",
    }
    row.update(over)
    return row


def cip_line(i, **over):
    row = {
        "ts": f"{1647312000 + i}.{(i * 71) % 1000:03d}", "uid": f"C{i:05d}", "id.orig_h": "192.168.1.100",
        "id.resp_h": "192.168.1.10", "cip_service": "read-tag", "cip_status": "success",
        "request_len": "24", "response_len": "96",
    }
    row.update(over)
    return row


def render(rows, fields, sep="\t"):
    return [sep.join(r[f] for f in fields) for r in rows]


CORPUS: dict[str, dict] = {}


def add(name, kind, lines, emitted, skipped_lines=(), unset=None, error=None, eol="\n"):
    (HERE / name).write_text(eol.join(lines) + eol)
    CORPUS[name] = {"kind": kind, "emitted": emitted, "skipped_lines": list(skipped_lines),
                    "unset": unset or {}, "error": error}


def build():
    HERE.mkdir(parents=True, exist_ok=True)
    close = "#close\t2022-03-15-02-45-00"
    H = header("conn", CONN_FIELDS, CONN_TYPES)
    nh = len(H)

    # 1 clean file whose first line is the worked example
    example = "1647312000.5\tCab1\t192.168.1.10\t51234\t192.168.1.20\t44818\ttcp\t-\t0.25\t312\t128\tSF\t4\t3"
    add("conn_basic.log", "conn", H + [example] + render([conn_line(i) for i in range(1, 5)], CONN_FIELDS)
        + [close], 5, unset={"service": 1})

    # 2 unset optional fields
    rows = [conn_line(0), conn_line(1, duration="-", orig_bytes="-", resp_bytes="-"),
            conn_line(2, service="-"), conn_line(3, orig_pkts="-", resp_pkts="-")]
    add("conn_unset_fields.log", "conn", H + render(rows, CONN_FIELDS) + [close], 4,
        unset={"duration": 1, "orig_bytes": 1, "resp_bytes": 1, "service": 1, "orig_pkts": 1, "resp_pkts": 1})

    # 3 empty string fields
    rows = [conn_line(0, service="(empty)"), conn_line(1, service="(empty)"), conn_line(2)]
    add("conn_empty_fields.log", "conn", H + render(rows, CONN_FIELDS) + [close], 3)

    # 4 truncated tail: last line cut mid-record, no #close
    lines = render([conn_line(i) for i in range(6)], CONN_FIELDS)
    lines[-1] = "\t".join(lines[-1].split("\t")[:7])
    add("conn_truncated_tail.log", "conn", H + lines, 5, skipped_lines=[nh + 6])

    # 5 truncated inside the final field value (still complete arity) plus a half line
    lines = render([conn_line(i) for i in range(4)], CONN_FIELDS) + ["1647312009.1\tC99"]
    add("conn_truncated_halfline.log", "conn", H + lines, 4, skipped_lines=[nh + 5])

    # 6 no #close directive
    add("conn_no_close.log", "conn", H + render([conn_line(i) for i in range(3)], CONN_FIELDS), 3)

    # 7 non-numeric count
    rows = [conn_line(0), conn_line(1, orig_bytes="abc"), conn_line(2)]
    add("conn_bad_count.log", "conn", H + render(rows, CONN_FIELDS) + [close], 2, skipped_lines=[nh + 2])

    # 8 negative interval
    rows = [conn_line(0, duration="-0.5"), conn_line(1)]
    add("conn_negative_duration.log", "conn", H + render(rows, CONN_FIELDS) + [close], 1,
        skipped_lines=[nh + 1])

    # 9 port out of range
    rows = [conn_line(0), conn_line(1, **{"id.orig_p": "70000"}), conn_line(2)]
    add("conn_port_range.log", "conn", H + render(rows, CONN_FIELDS) + [close], 2, skipped_lines=[nh + 2])

    # 10 unknown transport protocol
    rows = [conn_line(0, proto="xyz"), conn_line(1, proto="udp", service="dns"), conn_line(2, proto="icmp")]
    add("conn_bad_proto.log", "conn", H + render(rows, CONN_FIELDS) + [close], 2, skipped_lines=[nh + 1])

    # 11 extra Zeek columns the record does not use
    fields = CONN_FIELDS + ["local_orig", "history", "tunnel_parents"]
    types = CONN_TYPES + ["bool", "string", "set[string]"]
    rows = [dict(conn_line(i), local_orig="T", history="ShADadFf", tunnel_parents="(empty)") for i in range(3)]
    rows[1]["tunnel_parents"] = "Cx1,Cx2"
    rows[2]["local_orig"] = "-"
    add("conn_extra_columns.log", "conn", header("conn", fields, types) + render(rows, fields) + [close], 3)

    # 12 column order differs from the default
    fields = list(reversed(CONN_FIELDS))
    types = list(reversed(CONN_TYPES))
    add("conn_reordered.log", "conn", header("conn", fields, types)
        + render([conn_line(i) for i in range(4)], fields) + [close], 4)

    # 13 CRLF line endings
    add("conn_crlf.log", "conn", H + render([conn_line(i) for i in range(3)], CONN_FIELDS) + [close], 3,
        eol="\r\n")

    # 14 blank lines are not data lines
    lines = render([conn_line(i) for i in range(3)], CONN_FIELDS)
    add("conn_blank_lines.log", "conn", H + [lines[0], "", lines[1], "", "", lines[2]] + [close], 3)

    # 15 hex-escaped strings
    rows = [conn_line(0, uid="C\\x09tab"), conn_line(1, service="a\\x5cb"), conn_line(2)]
    add("conn_escaped.log", "conn", H + render(rows, CONN_FIELDS) + [close], 3)

    # 16 required field unset
    rows = [conn_line(0), conn_line(1, uid="-"), conn_line(2, ts="-")]
    add("conn_required_unset.log", "conn", H + render(rows, CONN_FIELDS) + [close], 1,
        skipped_lines=[nh + 2, nh + 3])

    # 17 a mix of problems in one file
    rows = [conn_line(i) for i in range(10)]
    rows[2]["resp_bytes"] = "1.5"
    rows[5]["ts"] = "yesterday"
    lines = render(rows, CONN_FIELDS)
    lines[8] = lines[8] + "\textra"
    add("conn_mixed_bad.log", "conn", H + lines + [close], 7, skipped_lines=[nh + 3, nh + 6, nh + 9])

    # 18 header only
    add("conn_header_only.log", "conn", H + [close], 0)

    # 19 comment lines after data are ignored
    lines = render([conn_line(i) for i in range(4)], CONN_FIELDS)
    add("conn_mid_comment.log", "conn", H + lines[:2] + ["#note\tmid-file"] + lines[2:] + [close], 4)

    C = header("cip", CIP_FIELDS, CIP_TYPES)
    nc = len(C)
    # 20 clean CIP file with the worked example values
    add("cip_basic.log", "cip", C + render([cip_line(i) for i in range(5)], CIP_FIELDS) + [close], 5)

    # 21 unset status counted
    rows = [cip_line(0), cip_line(1, cip_status="-"), cip_line(2), cip_line(3, cip_status="-")]
    add("cip_unset_status.log", "cip", C + render(rows, CIP_FIELDS) + [close], 4, unset={"status": 2})

    # 22 non-numeric request_len
    rows = [cip_line(0), cip_line(1, request_len="twenty"), cip_line(2)]
    add("cip_bad_request_len.log", "cip", C + render(rows, CIP_FIELDS) + [close], 2, skipped_lines=[nc + 2])

    # 23 truncated tail
    lines = render([cip_line(i) for i in range(4)], CIP_FIELDS)
    lines[-1] = lines[-1][: len(lines[-1]) // 2]
    add("cip_truncated_tail.log", "cip", C + lines, 3, skipped_lines=[nc + 4])

    # 24 write commands and error responses
    rows = [cip_line(0), cip_line(1, cip_service="write-tag", request_len="32", response_len="8"),
            cip_line(2, cip_status="error", response_len="8")]
    add("cip_write_error.log", "cip", C + render(rows, CIP_FIELDS) + [close], 3)

    # 25 empty status
    rows = [cip_line(0, cip_status="(empty)"), cip_line(1)]
    add("cip_empty_status.log", "cip", C + render(rows, CIP_FIELDS) + [close], 2)

    # 26-28 header-level failures
    add("bad_missing_types.log", "conn", [l for l in H if not l.startswith("#types")]
        + render([conn_line(0)], CONN_FIELDS), 0, error="MissingDirective")
    bad = H[:-1] + ["#types\t" + "\t".join(CONN_TYPES[:-1])]
    add("bad_schema_mismatch.log", "conn", bad + render([conn_line(0)], CONN_FIELDS), 0,
        error="SchemaMismatch")
    fields = [f for f in CONN_FIELDS if f != "conn_state"]
    types = [t for f, t in zip(CONN_FIELDS, CONN_TYPES) if f != "conn_state"]
    add("bad_missing_column.log", "conn", header("conn", fields, types)
        + render([conn_line(0)], fields), 0, error="MissingField")

    (HERE / "expected.json").write_text(json.dumps(CORPUS, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    build()
