import pytest

from rtk5g.config import ExperimentConfig, format_config, load_config, parse_config
from rtk5g.constants import NR_BASIC_TIME_UNIT
from rtk5g.errors import ConfigError


def test_defaults_valid():
    c = ExperimentConfig()
    assert c.clock_cycle == NR_BASIC_TIME_UNIT and c.method == "gn"


def test_parse_lists_and_aliases():
    c = parse_config("""
        N_list = 4, 5
        sigma_list = 0.001,0.002   # meters
        t_c = 1e-9
        seed = 0xffffffffffffffff
        almanac = /tmp/x.alm
    """)
    assert c.N_list == [4, 5] and c.sigma_list == [0.001, 0.002]
    assert c.clock_cycle == 1e-9 and c.seed == 2**64 - 1 and c.almanac_path == "/tmp/x.alm"


def test_overrides():
    c = parse_config("trials = 5", seed=42, trials=None)
    assert c.seed == 42 and c.trials == 5


def test_round_trip():
    c = ExperimentConfig(N_list=[3], sigma_list=[0.0, 0.004], user_ecef=(1.0, 2.0, 3.0), seed=9)
    assert parse_config(format_config(c)) == c


@pytest.mark.parametrize("text", [
    "nonsense_key = 1",
    "trials = many",
    "trials = 0",
    "epsilon = 1.5",
    "seed = -1",
    "w2_norm = other",
    "method = newton",
    "baseline = 1, 2",
    "sigma_list = 0.001, -0.002",
    "no equals sign here",
])
def test_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    p = tmp_path / "ok.cfg"
    p.write_text("trials = 3\n")
    assert load_config(p).trials == 3
