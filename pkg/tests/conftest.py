import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for the oracles module

from rawnet.synth import ClassSpec, SynthSpec, build_packet

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def one_udp_path():
    return os.path.join(DATA_DIR, "one_udp.pcap")


@pytest.fixture
def two_class_spec():
    """Small separable 2-class capture recipe reused across tests."""
    return SynthSpec(
        classes=[ClassSpec("benign", bytes.fromhex("00112233445566778899"), 0),
                 ClassSpec("malicious", bytes.fromhex("ffeeddccbbaa99887766"), 0)],
        packets_per_class=60, payload_min=32, payload_max=128,
        tuple_pool=6, proto="udp", seed=77)


def udp_packet(src="10.0.0.1", dst="10.0.0.2", sport=5000, dport=53,
               payload=b"x" * 18, ts_sec=0, ts_frac=0):
    return build_packet(src, dst, sport, dport, 17, payload, ts_sec, ts_frac)


def tcp_packet(src="10.0.0.1", dst="10.0.0.2", sport=4000, dport=80,
               payload=b"y" * 18, ts_sec=0, ts_frac=0):
    return build_packet(src, dst, sport, dport, 6, payload, ts_sec, ts_frac)
