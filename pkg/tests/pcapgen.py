"""Independent pcap fixture writer for tests (does not use pktembed.pcap)."""
import struct

MAGICS = {"micro": 0xA1B2C3D4, "nano": 0xA1B23C4D}


def pcap_bytes(packets, order="<", resolution="micro", snaplen=65535, linktype=1):
    """packets: list of (ts_sec, ts_frac, data) or (ts_sec, ts_frac, data, orig_len)."""
    out = bytearray(struct.pack(order + "IHHiIII", MAGICS[resolution], 2, 4, 0, 0, snaplen, linktype))
    for p in packets:
        ts_sec, ts_frac, data = p[:3]
        orig = p[3] if len(p) > 3 else len(data)
        out += struct.pack(order + "IIII", ts_sec, ts_frac, len(data), orig)
        out += data
    return bytes(out)


# Ethernet + IPv4 + UDP, 10.0.0.1:53 -> 10.0.0.2:999, payload "abcd", hand-assembled.
UDP_FRAME = bytes.fromhex(
    "001122334455" "66778899aabb" "0800"          # ethernet: dst, src, ethertype IPv4
    "4500" "0020" "0000" "0000" "4011" "0000"     # ipv4: ver/ihl, tos, total=32, id, flags, ttl 64, proto 17, csum
    "0a000001" "0a000002"                         # 10.0.0.1 -> 10.0.0.2
    "0035" "03e7" "000c" "0000"                   # udp: 53 -> 999, len 12, csum
    "61626364"                                    # payload "abcd"
)

UDP_REPLY = bytes.fromhex(
    "66778899aabb" "001122334455" "0800"
    "4500" "0020" "0000" "0000" "4011" "0000"
    "0a000002" "0a000001"
    "03e7" "0035" "000c" "0000"
    "61626364"
)

# Ethernet + IPv4 + TCP (data offset 5), 192.168.1.5:40000 -> 93.184.216.34:80, payload "GET /"
TCP_FRAME = bytes.fromhex(
    "001122334455" "66778899aabb" "0800"
    "4500" "002d" "1234" "4000" "4006" "0000"
    "c0a80105" "5db8d822"
    "9c40" "0050" "00000001" "00000000" "5018" "ffff" "0000" "0000"
    "474554202f"
)

ARP_FRAME = bytes.fromhex(
    "ffffffffffff" "66778899aabb" "0806"
    "0001080006040001" "66778899aabb" "0a000001" "000000000000" "0a000002"
)


def pad60(frame: bytes) -> bytes:
    return frame + b"\x00" * max(0, 60 - len(frame))
