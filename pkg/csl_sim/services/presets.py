"""
Parameter presets
=================
Collapse-model constants (rate, smearing length, nucleon mass over hbar)
loaded from data/config/collapse_presets.csv, one column per preset, with
built-in values when the file or a column is missing.

Physical presets are in CGS-seconds units with hbar = 1: lambda in 1/s,
a in cm, M in s/cm^2.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import polars as pl

from .errors import ConfigError

logger = logging.getLogger(__name__)

PRESET_CSV = Path("data/config") / "collapse_presets.csv"

NUCLEON_MASS_OVER_HBAR = 1.59e3  # s/cm^2

DEFAULT_PRESETS: Dict[str, Dict[str, float]] = {
    "grw": {"lambda": 1e-16, "a": 1e-5, "M": NUCLEON_MASS_OVER_HBAR},
    "adler": {"lambda": 1e-11, "a": 1e-5, "M": NUCLEON_MASS_OVER_HBAR},
    "dimensionless": {"lambda": 1.0, "a": 1.0, "M": 1.0},
}

DESCRIPTIONS = {
    "lambda": "Collapse rate per nucleon (1/s)",
    "a": "Smearing length (cm)",
    "M": "Nucleon mass over hbar (s/cm^2)",
}


class PresetTable:
    """Preset values keyed by preset name then parameter code"""

    def __init__(self, csv_path: Optional[Path] = None):
        self.csv_path = Path(csv_path) if csv_path is not None else PRESET_CSV
        self.values: Dict[str, Dict[str, float]] = {k: dict(v) for k, v in DEFAULT_PRESETS.items()}
        self._load_from_csv()

    def _load_from_csv(self):
        if not self.csv_path.exists():
            logger.warning(f"Preset file {self.csv_path} not found, using built-in presets")
            return
        try:
            df = pl.read_csv(self.csv_path)
        except Exception as e:
            logger.warning(f"Could not read {self.csv_path}: {e}; using built-in presets")
            return
        if "code" not in df.columns:
            logger.warning(f"{self.csv_path} has no 'code' column; using built-in presets")
            return
        for name in self.values:
            if name not in df.columns:
                logger.warning(f"Preset column '{name}' missing in {self.csv_path}, using defaults")
                continue
            for row in df.select(["code", name]).iter_rows(named=True):
                code, value = row["code"], row[name]
                if code in self.values[name] and value is not None:
                    self.values[name][code] = float(value)

    @property
    def names(self) -> List[str]:
        return sorted(self.values)

    def get(self, name: str) -> Dict[str, float]:
        if name not in self.values:
            raise ConfigError("preset", f"unknown preset '{name}', expected one of {self.names}")
        return dict(self.values[name])


def write_default_presets(csv_path: Optional[Path] = None) -> Path:
    """Write the built-in presets as CSV and return the path."""
    path = Path(csv_path) if csv_path is not None else PRESET_CSV
    path.parent.mkdir(parents=True, exist_ok=True)
    codes = list(DESCRIPTIONS)
    df = pl.DataFrame(
        {
            "code": codes,
            "description": [DESCRIPTIONS[c] for c in codes],
            **{name: [DEFAULT_PRESETS[name][c] for c in codes] for name in DEFAULT_PRESETS},
        }
    )
    df.write_csv(path)
    logger.info(f"Preset table written to {path}")
    return path
