"""Tests for the collapse parameter preset table."""
import pytest

from csl_sim.services.errors import ConfigError
from csl_sim.services.presets import DEFAULT_PRESETS, PresetTable, write_default_presets


def test_bundled_table_matches_defaults():
    table = PresetTable()
    assert table.names == ["adler", "dimensionless", "grw"]
    for name, values in DEFAULT_PRESETS.items():
        assert table.get(name) == pytest.approx(values)


def test_missing_file_falls_back(tmp_path):
    table = PresetTable(tmp_path / "absent.csv")
    assert table.get("grw")["lambda"] == 1e-16


def test_csv_overrides_values(tmp_path):
    path = tmp_path / "presets.csv"
    path.write_text(
        "code,description,grw\n"
        "lambda,rate,2e-16\n"
        "a,length,1e-05\n"
        "M,mass,1590.0\n"
    )
    table = PresetTable(path)
    assert table.get("grw")["lambda"] == 2e-16
    assert table.get("adler") == pytest.approx(DEFAULT_PRESETS["adler"])


def test_unknown_preset():
    with pytest.raises(ConfigError) as excinfo:
        PresetTable().get("penrose")
    assert excinfo.value.key == "preset"


def test_write_then_load(tmp_path):
    path = write_default_presets(tmp_path / "config" / "presets.csv")
    assert path.exists()
    assert PresetTable(path).get("dimensionless") == {"lambda": 1.0, "a": 1.0, "M": 1.0}


def test_returned_values_are_copies():
    table = PresetTable()
    table.get("grw")["lambda"] = 5.0
    assert table.get("grw")["lambda"] == 1e-16


if __name__ == "__main__":
    pytest.main([__file__])
