from fractions import Fraction

import pytest

from config import DEFAULT_CONFIG, PipelineConfig, load_config, parse_step
from errors import ArgumentError


@pytest.mark.parametrize("text,want", [("1/32", Fraction(1, 32)), ("0.125", Fraction(1, 8)), (2 ** -5, Fraction(1, 32))])
def test_parse_step(text, want):
    assert parse_step(text) == want


@pytest.mark.parametrize("text", ["3/32", "0", "-1/8", "abc", "1/0"])
def test_parse_step_rejects(text):
    with pytest.raises(ArgumentError):
        parse_step(text)


def test_default_file_matches_builtin_defaults():
    assert load_config(DEFAULT_CONFIG) == PipelineConfig()


def test_orders_follow_regularizer():
    cfg = PipelineConfig()
    assert cfg.orders_for(cfg.regularizer_k(True)) == [6, 8]
    assert cfg.orders_for(cfg.regularizer_k(False)) == [8, 10]
    assert PipelineConfig(levels=2).orders_for(6) == [6]
    assert PipelineConfig(levels=4, richardson_orders=[6, 8, 10]).orders_for(6) == [6, 8, 10]


@pytest.mark.parametrize("kw", [
    {"working_digits": 10},
    {"levels": 1},
    {"workers": 0},
    {"k_on_diag": 5},
    {"k_off_diag": 0},
    {"levels": 3, "richardson_orders": [6, 8, 10]},
    {"h_base": "3/64"},
])
def test_invalid_settings(kw):
    with pytest.raises(ArgumentError):
        PipelineConfig(**kw)


def test_replace_ignores_unset_flags():
    cfg = PipelineConfig().replace(working_digits=None, levels=4, h_base="1/16")
    assert cfg.levels == 4
    assert cfg.h_base == Fraction(1, 16)
    assert cfg.working_digits == 50


def test_load_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.yml"
    p.write_text("working_digits: 40\nbogus: 1\n")
    with pytest.raises(ArgumentError, match="bogus"):
        load_config(str(p))


def test_load_config_bad_yaml(tmp_path):
    p = tmp_path / "c.yml"
    p.write_text("levels: [3\n")
    with pytest.raises(ArgumentError):
        load_config(str(p))


def test_load_config_values(tmp_path):
    p = tmp_path / "c.yml"
    p.write_text('working_digits: 40\nh_list: ["1/8", "1/16"]\nrichardson_orders: null\n')
    cfg = load_config(str(p))
    assert cfg.working_digits == 40
    assert cfg.h_list == [Fraction(1, 8), Fraction(1, 16)]
    assert cfg.richardson_orders is None


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(ArgumentError):
        load_config(str(tmp_path / "absent.yml"))
