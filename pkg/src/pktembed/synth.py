"""Synthetic packet generators for tests, benchmarks and demos.

Benign packets are uniform random bytes. Attack packets are random bytes
with a fixed motif written at a random offset.
"""
from __future__ import annotations

import struct

import numpy as np


def random_payloads(n: int, rng: np.random.Generator, min_len: int = 48, max_len: int = 96) -> list:
    lens = rng.integers(min_len, max_len + 1, size=n)
    return [rng.integers(0, 256, size=int(k), dtype=np.uint8).tobytes() for k in lens]


def plant(payload: bytes, motif: bytes, rng: np.random.Generator, align: int = 1) -> bytes:
    off = int(rng.integers(0, (len(payload) - len(motif)) // align + 1)) * align
    return payload[:off] + motif + payload[off + len(motif):]


def motif_dataset(n_benign: int, n_attack: int, motifs, seed: int = 0,
                  min_len: int = 48, max_len: int = 96, attack_label: str = "attack",
                  benign_label: str = "benign", align: int = 1) -> list:
    """Return ``[(bytes, label)]``; attack packets draw one motif from ``motifs``
    uniformly, placed at a multiple of ``align``. Order is shuffled."""
    rng = np.random.default_rng(seed)
    if isinstance(motifs, (bytes, bytearray)):
        motifs = [bytes(motifs)]
    rows = [(p, benign_label) for p in random_payloads(n_benign, rng, min_len, max_len)]
    for p in random_payloads(n_attack, rng, min_len, max_len):
        motif = motifs[int(rng.integers(0, len(motifs)))]
        rows.append((plant(p, motif, rng, align), attack_label))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


def ethernet_udp(src: str, sport: int, dst: str, dport: int, payload: bytes) -> bytes:
    """A minimal Ethernet + IPv4 + UDP frame (IP checksum left at zero)."""
    ip_src = bytes(int(x) for x in src.split("."))
    ip_dst = bytes(int(x) for x in dst.split("."))
    udp = struct.pack("!HHHH", sport, dport, 8 + len(payload), 0) + payload
    ip = struct.pack("!BBHHHBBH4s4s", 0x45, 0, 20 + len(udp), 0, 0, 64, 17, 0, ip_src, ip_dst)
    eth = b"\x00\x11\x22\x33\x44\x55" + b"\x66\x77\x88\x99\xaa\xbb" + b"\x08\x00"
    return eth + ip + udp
