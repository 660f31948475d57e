"""Config layering, parsing, and the artifact fingerprint."""

import pytest

from rawnet.config import ConfigError, load_config, parse_kv_file
from rawnet.encoder import HeaderCategory
from rawnet.splitter import Representation


def write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_file_parsing_and_repeated_keys(tmp_path):
    path = write(tmp_path, """
# an experiment
scenario = a.pcap, benign
scenario = b.pcap, malicious
representation = session
category = no_headers
sample_len = 256
ratios = 0.7, 0.2, 0.1
seed = 42
""")
    cfg = load_config(path)
    assert cfg.scenarios == [("a.pcap", "benign"), ("b.pcap", "malicious")]
    assert cfg.representation is Representation.SESSION
    assert cfg.category is HeaderCategory.NO_HEADERS
    assert cfg.sample_len == 256 and cfg.seed == 42
    assert cfg.ratios == (0.7, 0.2, 0.1)


def test_overrides_layer_on_top(tmp_path):
    path = write(tmp_path, "seed = 1\nepochs = 50\n")
    cfg = load_config(path, ["seed=9", "scenario=x.pcap,evil"])
    assert cfg.seed == 9 and cfg.epochs == 50
    assert cfg.scenarios == [("x.pcap", "evil")]


def test_defaults_without_file():
    cfg = load_config(None, [])
    assert cfg.epochs == 50 and cfg.batch_size == 32
    assert cfg.kernel == 64 and cfg.stride == 3 and cfg.pool == 5
    assert cfg.dropout_rate == 0.5


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(write(tmp_path, "kernal = 64\n"))


def test_malformed_line_reports_location(tmp_path):
    with pytest.raises(ConfigError, match=":2"):
        parse_kv_file(write(tmp_path, "a = 1\nnot a kv line\n"))


def test_bad_value_reported(tmp_path):
    with pytest.raises(ConfigError, match="sample_len"):
        load_config(write(tmp_path, "sample_len = many\n"))


def test_hash_covers_semantics_not_plumbing():
    base = load_config(None, ["seed=1"])
    same = load_config(None, ["seed=1", "out_dir=elsewhere", "jobs=3"])
    other_seed = load_config(None, ["seed=2"])
    other_cat = load_config(None, ["seed=1", "category=only_eth"])
    assert base.config_hash() == same.config_hash()
    assert base.config_hash() != other_seed.config_hash()
    assert base.config_hash() != other_cat.config_hash()


def test_header_lines_carry_hash_and_seed():
    cfg = load_config(None, ["seed=3"])
    lines = cfg.header_lines()
    assert lines[0].startswith("config_hash=") and lines[1] == "seed=3"


def test_synth_spec_round_trip(tmp_path):
    path = write(tmp_path, """
class = benign, 2, 00112233
class = evil, 2, ffeeddcc
packets_per_class = 12
payload_min = 16
payload_max = 32
tuple_pool = 3
proto = tcp
seed = 8
""")
    spec = load_config(path).synth_spec()
    assert [c.name for c in spec.classes] == ["benign", "evil"]
    assert spec.classes[1].signature == bytes.fromhex("ffeeddcc")
    assert spec.classes[1].signature_offset == 2
    assert (spec.packets_per_class, spec.tuple_pool) == (12, 3)


def test_scenario_validation(tmp_path):
    cfg = load_config(None, ["scenario=/does/not/exist.pcap,x"])
    with pytest.raises(FileNotFoundError, match="exist.pcap"):
        cfg.validate_scenarios()
