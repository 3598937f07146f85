"""Run-level event counters (clamps, dropped paths, redraw rounds)."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class Counters:
    velocity_clamps: int = 0
    intensity_clamps: int = 0
    dropped_paths: int = 0
    surviving_paths: int = 0
    dropped_points: int = 0
    redraw_rounds: int = 0

    def merge(self, other: "Counters") -> "Counters":
        for key, value in asdict(other).items():
            setattr(self, key, getattr(self, key) + value)
        return self

    def as_dict(self) -> dict:
        return asdict(self)
