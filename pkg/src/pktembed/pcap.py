"""Classic libpcap file reader plus the per-packet helpers the pipeline needs.

Only the classic format is handled (micro- and nanosecond magics, both byte
orders). Records are yielded lazily so arbitrarily large captures stream
through in constant memory.
"""
from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Optional

from .errors import (
    RecordTooLarge,
    TruncatedHeader,
    TruncatedRecord,
    UnknownMagic,
    UnsupportedVersion,
)

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW = 101

ETH_HEADER_LEN = 14
ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

PROTO_TCP = 6
PROTO_UDP = 17

SLICE_POLICIES = ("full", "ip_onward", "payload_only")


@dataclass(frozen=True)
class PcapHeader:
    magic: int
    byte_order: str  # "little" | "big"
    ts_resolution: str  # "micro" | "nano"
    version: tuple[int, int]
    snaplen: int
    linktype: int
    thiszone: int = 0
    sigfigs: int = 0

    @property
    def endian(self) -> str:
        return "<" if self.byte_order == "little" else ">"

    def to_bytes(self) -> bytes:
        return struct.pack(
            self.endian + "IHHiIII",
            self.magic,
            self.version[0],
            self.version[1],
            self.thiszone,
            self.sigfigs,
            self.snaplen,
            self.linktype,
        )


@dataclass(frozen=True)
class ParsedPacket:
    index: int
    ts_sec: int
    ts_frac: int
    captured_len: int
    original_len: int
    data: bytes
    linktype: int
    ts_resolution: str = "micro"

    @property
    def ts(self) -> float:
        scale = 1e-9 if self.ts_resolution == "nano" else 1e-6
        return self.ts_sec + self.ts_frac * scale

    def record_bytes(self, header: PcapHeader) -> bytes:
        """Serialize this packet back into a record (header + data)."""
        return (
            struct.pack(
                header.endian + "IIII",
                self.ts_sec,
                self.ts_frac,
                self.captured_len,
                self.original_len,
            )
            + self.data
        )


def parse_global_header(raw: bytes) -> PcapHeader:
    """Decode the 24-byte global header, inferring byte order from the magic."""
    if len(raw) < GLOBAL_HEADER_LEN:
        raise TruncatedHeader(f"global header needs 24 bytes, got {len(raw)}")
    raw = raw[:GLOBAL_HEADER_LEN]
    for endian, order in (("<", "little"), (">", "big")):
        (magic,) = struct.unpack(endian + "I", raw[:4])
        if magic in (MAGIC_MICRO, MAGIC_NANO):
            break
    else:
        raise UnknownMagic(f"not a classic pcap file (magic {raw[:4].hex()})")
    _, vmaj, vmin, thiszone, sigfigs, snaplen, linktype = struct.unpack(
        endian + "IHHiIII", raw
    )
    if (vmaj, vmin) != (2, 4):
        raise UnsupportedVersion(f"pcap version {vmaj}.{vmin} not supported")
    return PcapHeader(
        magic=magic,
        byte_order=order,
        ts_resolution="nano" if magic == MAGIC_NANO else "micro",
        version=(vmaj, vmin),
        snaplen=snaplen,
        linktype=linktype,
        thiszone=thiszone,
        sigfigs=sigfigs,
    )


def _read_exact(source: BinaryIO, n: int) -> bytes:
    buf = source.read(n)
    if len(buf) == n or not buf:
        return buf
    # short reads are legal on pipes; keep reading until EOF
    parts = [buf]
    got = len(buf)
    while got < n:
        chunk = source.read(n - got)
        if not chunk:
            break
        parts.append(chunk)
        got += len(chunk)
    return b"".join(parts)


def read_packets(source: BinaryIO, header: PcapHeader) -> Iterator[ParsedPacket]:
    """Yield packets from a stream positioned just after the global header."""
    rec = struct.Struct(header.endian + "IIII")
    snaplen = header.snaplen
    linktype = header.linktype
    res = header.ts_resolution
    index = 0
    while True:
        head = _read_exact(source, RECORD_HEADER_LEN)
        if not head:
            return
        if len(head) < RECORD_HEADER_LEN:
            raise TruncatedRecord(
                f"record {index}: EOF after {len(head)} of 16 header bytes"
            )
        ts_sec, ts_frac, incl_len, orig_len = rec.unpack(head)
        if incl_len > snaplen:
            raise RecordTooLarge(
                f"record {index}: incl_len {incl_len} exceeds snaplen {snaplen}"
            )
        data = _read_exact(source, incl_len)
        if len(data) < incl_len:
            raise TruncatedRecord(
                f"record {index}: EOF after {len(data)} of {incl_len} data bytes"
            )
        yield ParsedPacket(index, ts_sec, ts_frac, incl_len, orig_len, data, linktype, res)
        index += 1


def open_pcap(source: BinaryIO) -> tuple[PcapHeader, Iterator[ParsedPacket]]:
    header = parse_global_header(_read_exact(source, GLOBAL_HEADER_LEN))
    return header, read_packets(source, header)


def iter_pcap_file(path) -> Iterator[ParsedPacket]:
    with open(path, "rb") as fh:
        _, packets = open_pcap(fh)
        yield from packets


def write_pcap(stream: BinaryIO, header: PcapHeader, packets) -> None:
    stream.write(header.to_bytes())
    for pkt in packets:
        stream.write(pkt.record_bytes(header))


@dataclass(frozen=True, order=True)
class FlowKey:
    """Bidirectional flow identifier; IPv4 addresses are held as ints."""

    src_ip: int
    src_port: int
    dst_ip: int
    dst_port: int
    protocol: int

    def canonical(self) -> "FlowKey":
        if (self.src_ip, self.src_port) <= (self.dst_ip, self.dst_port):
            return self
        return FlowKey(self.dst_ip, self.dst_port, self.src_ip, self.src_port, self.protocol)

    @classmethod
    def make(cls, src_ip, src_port, dst_ip, dst_port, protocol) -> "FlowKey":
        """Build a canonical key from address strings or ints."""
        return cls(
            int(ipaddress.IPv4Address(src_ip)),
            int(src_port),
            int(ipaddress.IPv4Address(dst_ip)),
            int(dst_port),
            int(protocol),
        ).canonical()

    def __str__(self) -> str:
        return (
            f"{ipaddress.IPv4Address(self.src_ip)}:{self.src_port} <-> "
            f"{ipaddress.IPv4Address(self.dst_ip)}:{self.dst_port} proto {self.protocol}"
        )


def _network_offset(data: bytes, linktype: int) -> Optional[int]:
    """Offset of the IPv4 header, or None when the packet is not IPv4."""
    if linktype == LINKTYPE_ETHERNET:
        if len(data) < ETH_HEADER_LEN:
            return None
        off = 12
        ethertype = (data[off] << 8) | data[off + 1]
        if ethertype == ETHERTYPE_VLAN:
            if len(data) < ETH_HEADER_LEN + 4:
                return None
            off += 4
            ethertype = (data[off] << 8) | data[off + 1]
        if ethertype != ETHERTYPE_IPV4:
            return None
        start = off + 2
    elif linktype == LINKTYPE_RAW:
        start = 0
    else:
        return None
    if len(data) < start + 20 or data[start] >> 4 != 4:
        return None
    return start


def _transport_layout(data: bytes, linktype: int):
    """(ip_start, ihl_bytes, protocol, total_length) or None."""
    start = _network_offset(data, linktype)
    if start is None:
        return None
    ihl = (data[start] & 0x0F) * 4
    if ihl < 20 or len(data) < start + ihl:
        return None
    total_len = (data[start + 2] << 8) | data[start + 3]
    return start, ihl, data[start + 9], total_len


def extract_five_tuple(pkt: ParsedPacket) -> Optional[FlowKey]:
    """Canonical 5-tuple of an IPv4 packet, ``None`` for anything unparseable."""
    data = pkt.data
    layout = _transport_layout(data, pkt.linktype)
    if layout is None:
        return None
    start, ihl, proto, _ = layout
    src = int.from_bytes(data[start + 12 : start + 16], "big")
    dst = int.from_bytes(data[start + 16 : start + 20], "big")
    sport = dport = 0
    if proto in (PROTO_TCP, PROTO_UDP):
        t = start + ihl
        if len(data) < t + 4:
            return None
        sport = (data[t] << 8) | data[t + 1]
        dport = (data[t + 2] << 8) | data[t + 3]
    return FlowKey(src, sport, dst, dport, proto).canonical()


def slice_embedding_bytes(pkt: ParsedPacket, policy: str = "ip_onward") -> bytes:
    """Select the byte range of a packet that gets embedded.

    ``ip_onward`` starts at the IPv4 header; ``payload_only`` starts after the
    TCP/UDP header and stops at the IPv4 total length (dropping Ethernet
    padding). Either falls back to the whole packet when the layer can't be
    located.
    """
    data = pkt.data
    if policy == "full":
        return data
    if policy not in SLICE_POLICIES:
        raise ValueError(f"unknown slice policy {policy!r}")
    layout = _transport_layout(data, pkt.linktype)
    if layout is None:
        return data
    start, ihl, proto, total_len = layout
    if policy == "ip_onward":
        return data[start:]
    t = start + ihl
    if proto == PROTO_UDP:
        hdr = 8
    elif proto == PROTO_TCP:
        if len(data) < t + 13:
            return data
        hdr = (data[t + 12] >> 4) * 4
        if hdr < 20:
            return data
    else:
        return data
    end = min(len(data), start + total_len) if total_len >= ihl else len(data)
    if t + hdr > end:
        return data
    return data[t + hdr : end]
