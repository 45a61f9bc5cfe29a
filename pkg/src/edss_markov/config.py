"""Flat ``key = value`` configuration files.

Lines starting with ``#`` and blank lines are ignored.  Lists are comma
separated.  Unknown keys are an error so typos do not pass silently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .cdw import DEFAULT_REPRESENTATIVE, CdwRule
from .core import DEFAULT_BOUNDARIES, StateGrouping
from .errors import InvalidConfig


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


@dataclass
class Config:
    interval_months: int = 3
    horizon_months: int = 36
    group_boundaries: tuple[float, ...] = DEFAULT_BOUNDARIES
    confirmation_months: int = 6
    # delta_for_zero, delta_mid, delta_high, high_cutoff
    cdw_rule: tuple[float, ...] = (1.5, 1.0, 0.5, 5.5)
    seed: int = 0
    average_mode: str = "mean"
    pooling: str = "none"
    threshold_mode: str = "max"
    regression_mode: str = "per_subject"
    regression_horizon_steps: int | None = None
    classify_level: str = "raw"
    n_validation: int = 200
    # simulation
    n_subjects: int = 1000
    initial_distribution: str = "reference"
    matrix: str = "calibrated"
    mobility: float = 0.2
    dropout_total: float = 0.1
    representative_edss: tuple[float, ...] = DEFAULT_REPRESENTATIVE
    base_dir: Path = field(default=Path("."), repr=False)

    def grouping(self) -> StateGrouping:
        return StateGrouping(self.group_boundaries)

    def rule(self) -> CdwRule:
        if len(self.cdw_rule) != 4:
            raise InvalidConfig("cdw_rule needs delta_for_zero, delta_mid, delta_high, high_cutoff")
        z, m, h, cut = self.cdw_rule
        return CdwRule(z, m, h, cut, self.confirmation_months)

    def snapshot(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path


_TYPES = {f.name: f.type for f in dataclasses.fields(Config) if f.name != "base_dir"}


def _convert(key: str, raw: str):
    t = _TYPES[key]
    try:
        if t == "int":
            return int(raw)
        if t == "int | None":
            return None if raw.lower() in ("", "none") else int(raw)
        if t == "float":
            return float(raw)
        if t.startswith("tuple"):
            return _floats(raw)
        return raw
    except ValueError:
        raise InvalidConfig(f"bad value for {key}: {raw!r}") from None


def parse_config(text: str, base_dir: Path = Path(".")) -> Config:
    cfg = Config(base_dir=base_dir)
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"config line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise InvalidConfig(f"config line {n}: unknown key {key!r}")
        setattr(cfg, key, _convert(key, value))
    return cfg


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {p}: {exc}") from None
    return parse_config(text, p.parent)
