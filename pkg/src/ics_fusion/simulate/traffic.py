"""Synthetic Zeek conn/cip records for the plant network.

The SCADA host polls every PLC once per second with one CIP read per
monitored tag over a TCP session that is renewed every
``session_seconds``. Enterprise hosts add Poisson background traffic.
Benign traffic never contains CIP writes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ingest import CipRecord, ConnRecord
from .plant import N_STAGES, stage_tags

CIP_PORT = 44818


def plc_addr(stage: int) -> str:
    return f"192.168.1.{10 * stage}"


@dataclass
class TrafficConfig:
    scada_addr: str = "192.168.1.100"
    historian_addr: str = "192.168.1.200"
    dns_addr: str = "10.0.0.53"
    workstations: tuple[str, ...] = ("10.0.0.21", "10.0.0.22", "10.0.0.23", "10.0.0.24")
    background_rate: float = 2.0          # conn records per second
    session_seconds: int = 10
    cip_request_len: int = 24
    cip_response_len: int = 96
    cip_jitter: int = 2
    cip_error_rate: float = 5e-4
    cip_unset_rate: float = 2e-4

    @classmethod
    def from_dict(cls, d: dict | None) -> "TrafficConfig":
        d = dict(d or {})
        if "workstations" in d:
            d["workstations"] = tuple(d["workstations"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise KeyError(sorted(unknown)[0])
        return cls(**d)


def _ts(second: int, offset: float) -> float:
    return round(second + offset, 6)


@dataclass
class TrafficGenerator:
    cfg: TrafficConfig
    rng: np.random.Generator
    _uid_counter: int = 0
    _sessions: dict[int, str] = field(default_factory=dict)

    def uid(self, prefix: str = "C") -> str:
        self._uid_counter += 1
        return f"{prefix}{self._uid_counter:011x}"

    def emit(self, second: int) -> tuple[list[ConnRecord], list[CipRecord]]:
        """All benign records whose timestamps fall in ``[second, second + 1)``."""
        cfg, rng = self.cfg, self.rng
        conns: list[ConnRecord] = []
        cips: list[CipRecord] = []
        tags_per_plc = len(stage_tags(1))
        for stage in range(1, N_STAGES + 1):
            plc = plc_addr(stage)
            # sessions staggered so that one or two renew each second
            if (second + stage) % cfg.session_seconds == 0 or stage not in self._sessions:
                uid = self.uid()
                self._sessions[stage] = uid
                dur = cfg.session_seconds - 0.05 - 0.2 * rng.random()
                polls = cfg.session_seconds * tags_per_plc
                conns.append(ConnRecord(
                    ts=_ts(second, 0.001 * stage), uid=uid, orig_addr=cfg.scada_addr,
                    orig_port=int(rng.integers(49152, 65536)), resp_addr=plc, resp_port=CIP_PORT,
                    proto="tcp", service="enip", duration=round(dur, 6),
                    orig_bytes=polls * (cfg.cip_request_len + 20),
                    resp_bytes=polls * (cfg.cip_response_len + 20),
                    conn_state="SF", orig_pkts=polls + 3, resp_pkts=polls + 2,
                ))
            offsets = np.sort(rng.random(tags_per_plc)) * 0.9 + 0.05
            jitter_req = rng.integers(0, cfg.cip_jitter + 1, size=tags_per_plc)
            jitter_resp = rng.integers(-cfg.cip_jitter, cfg.cip_jitter + 1, size=tags_per_plc)
            fate = rng.random(tags_per_plc)
            for j in range(tags_per_plc):
                status, resp_len = "success", cfg.cip_response_len + int(jitter_resp[j])
                if fate[j] < cfg.cip_error_rate:
                    status, resp_len = "error", 8
                elif fate[j] < cfg.cip_error_rate + cfg.cip_unset_rate:
                    status = None
                cips.append(CipRecord(
                    ts=_ts(second, offsets[j]), uid=self._sessions[stage],
                    orig_addr=cfg.scada_addr, resp_addr=plc, command="read-tag", status=status,
                    request_len=cfg.cip_request_len + int(jitter_req[j]), response_len=resp_len,
                ))
        n_bg = int(rng.poisson(cfg.background_rate))
        for off in np.sort(rng.random(n_bg)):
            conns.append(self._background(second, float(off)))
        conns.sort(key=lambda r: r.ts)
        cips.sort(key=lambda r: r.ts)
        return conns, cips

    def _background(self, second: int, off: float) -> ConnRecord:
        cfg, rng = self.cfg, self.rng
        host = cfg.workstations[int(rng.integers(len(cfg.workstations)))]
        port = int(rng.integers(49152, 65536))
        kind = rng.random()
        if kind < 0.45:
            return ConnRecord(_ts(second, off), self.uid(), host, port, cfg.dns_addr, 53, "udp",
                              "dns", round(0.002 + 0.02 * rng.random(), 6),
                              int(rng.integers(30, 60)), int(rng.integers(60, 200)), "SF", 1, 1)
        if kind < 0.85:
            out_b = int(rng.integers(400, 3000))
            in_b = int(rng.integers(800, 20000))
            return ConnRecord(_ts(second, off), self.uid(), host, port, cfg.historian_addr, 443,
                              "tcp", "ssl", round(0.05 + 0.8 * rng.random(), 6), out_b, in_b,
                              "SF", 6 + out_b // 500, 6 + in_b // 1200)
        if kind < 0.95:
            return ConnRecord(_ts(second, off), self.uid(), host, 123, cfg.dns_addr, 123, "udp",
                              None, round(0.001 + 0.01 * rng.random(), 6), 48, 48, "SF", 1, 1)
        return ConnRecord(_ts(second, off), self.uid(), host, 8, cfg.historian_addr, 0, "icmp",
                          None, round(0.001 * rng.random(), 6), 64, 64, "OTH", 1, 1)
