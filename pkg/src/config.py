"""src/config.py

Pipeline configuration.

Defaults live in configs/pipeline.yml; the CLI loads that file (or the one given
with --config) and then applies explicit flags on top.

Step sizes are kept as exact fractions ("1/32") so that every level of the
weight pipeline is an exact power of two.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import yaml

from errors import ArgumentError

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(REPO_ROOT, "configs", "pipeline.yml")


def parse_step(text: Any) -> Fraction:
    """Parse "1/32", "0.03125" or 2**-5 into a positive dyadic Fraction."""
    try:
        h = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ArgumentError(f"bad step size {text!r}: {e}") from e
    if h <= 0:
        raise ArgumentError(f"step size must be > 0, got {text!r}")
    den = h.denominator
    if h.numerator != 1 or den & (den - 1):
        raise ArgumentError(f"step size must be 2^-m, got {text!r}")
    return h


def _default_h_list() -> List[Fraction]:
    return [Fraction(1, 2 ** m) for m in range(3, 10)]


@dataclass
class PipelineConfig:
    working_digits: int = 50
    h_base: Fraction = Fraction(1, 32)
    levels: int = 3
    richardson_orders: Optional[List[int]] = None
    k_on_diag: int = 6
    k_off_diag: int = 8
    digits_target: int = 20
    workers: int = 1
    reference_digits: int = 16
    floor_threshold: float = 1e-12
    h_list: List[Fraction] = field(default_factory=_default_h_list)
    tables_dir: str = "tables/generated"

    def __post_init__(self) -> None:
        self.h_base = parse_step(self.h_base)
        self.h_list = [parse_step(h) for h in self.h_list]
        self.floor_threshold = float(self.floor_threshold)
        if self.working_digits < 20:
            raise ArgumentError(f"working_digits must be >= 20, got {self.working_digits}")
        if self.levels < 2:
            raise ArgumentError(f"levels must be >= 2, got {self.levels}")
        if self.workers < 1:
            raise ArgumentError(f"workers must be >= 1, got {self.workers}")
        for k in (self.k_on_diag, self.k_off_diag):
            if k < 2 or k % 2:
                raise ArgumentError(f"regularizer exponent must be even and >= 2, got {k}")
        if self.richardson_orders is not None:
            self.richardson_orders = [int(o) for o in self.richardson_orders]
            if len(self.richardson_orders) >= self.levels:
                raise ArgumentError(
                    f"{len(self.richardson_orders)} Richardson order(s) need more than {self.levels} levels"
                )

    def regularizer_k(self, on_diag: bool) -> int:
        return self.k_on_diag if on_diag else self.k_off_diag

    def orders_for(self, k: int) -> List[int]:
        """Richardson orders: explicit setting, else [k, k+2] trimmed to the available levels."""
        if self.richardson_orders is not None:
            return list(self.richardson_orders)
        return [k, k + 2][: self.levels - 1]

    def replace(self, **overrides: Any) -> "PipelineConfig":
        """Copy with the non-None overrides applied (CLI flags over file values)."""
        given = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **given)


def load_config(path: Optional[str] = None) -> PipelineConfig:
    """Load a YAML config file. A missing default file yields the built-in defaults."""
    if path is None:
        path = DEFAULT_CONFIG
        if not os.path.exists(path):
            return PipelineConfig()

    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ArgumentError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ArgumentError(f"config {path} is not valid YAML: {e}") from e

    if not isinstance(raw, dict):
        raise ArgumentError(f"config {path} must be a mapping")

    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ArgumentError(f"unknown config key(s) in {path}: {unknown}")

    values: Dict[str, Any] = {k: v for k, v in raw.items() if v is not None}
    return PipelineConfig(**values)
