import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pktembed.errors import MalformedRow, OverlappingInterval
from pktembed.labels import label_packet, load_label_table
from pktembed.pcap import FlowKey

HEADER = "src_ip,src_port,dst_ip,dst_port,protocol,start_ts,end_ts,label\n"


def table(body=""):
    return load_label_table(io.StringIO(HEADER + body))


def test_header_only():
    assert len(table()) == 0


def test_one_row():
    t = table("10.0.0.2,999,10.0.0.1,53,17,100,200,DoS\n")
    key = FlowKey.make("10.0.0.1", 53, "10.0.0.2", 999, 17)
    assert t.intervals(key) == [(100.0, 200.0, "DoS")]


def test_overlap_rejected():
    with pytest.raises(OverlappingInterval):
        table("1.1.1.1,1,2.2.2.2,2,6,0,10,A\n2.2.2.2,2,1.1.1.1,1,6,5,15,B\n")


def test_disjoint_intervals_same_key():
    t = table("1.1.1.1,1,2.2.2.2,2,6,0,10,A\n1.1.1.1,1,2.2.2.2,2,6,20,30,B\n")
    key = FlowKey.make("1.1.1.1", 1, "2.2.2.2", 2, 6)
    assert label_packet(key, 5, t) == "A"
    assert label_packet(key, 25.5, t) == "B"
    assert label_packet(key, 15, t, "BENIGN") == "BENIGN"
    assert label_packet(key, 10, t) == "A"  # closed interval


@pytest.mark.parametrize("row", [
    "1.1.1.x,1,2.2.2.2,2,6,0,10,A\n",
    "1.1.1.1,70000,2.2.2.2,2,6,0,10,A\n",
    "1.1.1.1,1,2.2.2.2,2,300,0,10,A\n",
    "1.1.1.1,1,2.2.2.2,2,6,zero,10,A\n",
    "1.1.1.1,1,2.2.2.2,2,6,10,0,A\n",
    "1.1.1.1,1,2.2.2.2,2,6,0,10\n",
    "1.1.1.1,1,2.2.2.2,2,6,0,10,\n",
])
def test_malformed_rows(row):
    with pytest.raises(MalformedRow):
        table(row)


def test_wrong_header():
    with pytest.raises(MalformedRow):
        load_label_table(io.StringIO("a,b,c\n"))


def test_lookup_rules():
    t = table("10.0.0.1,53,10.0.0.2,999,17,1.5,2.5,DoS\n")
    key = FlowKey.make("10.0.0.2", 999, "10.0.0.1", 53, 17)
    assert label_packet(key, 2.0, t) == "DoS"
    other = FlowKey.make("10.0.0.3", 1, "10.0.0.4", 2, 6)
    assert label_packet(other, 2.0, t, "BENIGN") == "BENIGN"
    assert label_packet(None, 2.0, t, "unlabeled") == "unlabeled"


@given(st.floats(-1e9, 1e9, allow_nan=False), st.one_of(st.none(), st.integers(0, 65535)))
def test_label_packet_is_total(ts, port):
    t = table("10.0.0.1,53,10.0.0.2,999,17,0,100,DoS\n")
    key = None if port is None else FlowKey.make("10.0.0.1", 53, "10.0.0.2", port, 17)
    assert isinstance(label_packet(key, ts, t, "BENIGN"), str)
