"""Flow-label table: joins per-flow ground truth onto individual packets.

CSV schema (header row required, exactly)::

    src_ip,src_port,dst_ip,dst_port,protocol,start_ts,end_ts,label

A packet gets the label of the interval, under its canonical 5-tuple, that
contains its timestamp. Intervals are closed; two intervals under one key
that share any instant are rejected.
"""
from __future__ import annotations

import bisect
import csv
import ipaddress
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, TextIO

from .errors import MalformedRow, OverlappingInterval
from .pcap import FlowKey

CSV_COLUMNS = ["src_ip", "src_port", "dst_ip", "dst_port", "protocol", "start_ts", "end_ts", "label"]


@dataclass
class LabelTable:
    entries: dict = field(default_factory=dict)  # FlowKey -> [(start, end, label)]
    _starts: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def intervals(self, key: FlowKey):
        return self.entries.get(key, [])


def _parse_row(lineno: int, row: dict) -> tuple[FlowKey, float, float, str]:
    try:
        src = ipaddress.IPv4Address(row["src_ip"].strip())
        dst = ipaddress.IPv4Address(row["dst_ip"].strip())
        sport = int(row["src_port"])
        dport = int(row["dst_port"])
        proto = int(row["protocol"])
        start = float(row["start_ts"])
        end = float(row["end_ts"])
    except (ValueError, TypeError, AttributeError) as exc:
        raise MalformedRow(f"line {lineno}: {exc}") from None
    label = (row.get("label") or "").strip()
    if not (0 <= sport <= 0xFFFF and 0 <= dport <= 0xFFFF):
        raise MalformedRow(f"line {lineno}: port out of range")
    if not 0 <= proto <= 0xFF:
        raise MalformedRow(f"line {lineno}: protocol out of range")
    if not (math.isfinite(start) and math.isfinite(end)) or end < start:
        raise MalformedRow(f"line {lineno}: bad interval [{start}, {end}]")
    if not label:
        raise MalformedRow(f"line {lineno}: empty label")
    key = FlowKey(int(src), sport, int(dst), dport, proto).canonical()
    return key, start, end, label


def load_label_table(stream: TextIO) -> LabelTable:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != CSV_COLUMNS:
        raise MalformedRow(f"header must be {','.join(CSV_COLUMNS)}")
    grouped = defaultdict(list)
    for lineno, row in enumerate(reader, start=2):
        if None in row or any(v is None for v in row.values()):
            raise MalformedRow(f"line {lineno}: expected {len(CSV_COLUMNS)} fields")
        key, start, end, label = _parse_row(lineno, row)
        grouped[key].append((start, end, label))
    table = LabelTable()
    for key, ivs in grouped.items():
        ivs.sort()
        for (s0, e0, _), (s1, e1, _) in zip(ivs, ivs[1:]):
            if s1 <= e0:
                raise OverlappingInterval(f"{key}: [{s0}, {e0}] intersects [{s1}, {e1}]")
        table.entries[key] = ivs
        table._starts[key] = [iv[0] for iv in ivs]
    return table


def label_packet(key: Optional[FlowKey], ts: float, table: LabelTable, default: str = "BENIGN") -> str:
    if key is None:
        return default
    ivs = table.entries.get(key)
    if not ivs:
        return default
    starts = table._starts.get(key) or [iv[0] for iv in ivs]
    i = bisect.bisect_right(starts, ts) - 1
    if i >= 0 and ts <= ivs[i][1]:
        return ivs[i][2]
    return default
