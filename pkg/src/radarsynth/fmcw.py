"""Closed-form FMCW chirp mathematics.

The accumulated phase is 2*pi times the exact integral of the sawtooth
instantaneous frequency from the start of the frame, so it carries the
``f0 * (n*T + t_n)`` carrier term and stays continuous across chirp
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RadarConfig
from .counters import Counters

DB_MIN = -150.0
DB_MAX = 150.0


@dataclass(frozen=True)
class ChirpInstant:
    """Chirp ordinal ``n`` and time ``t_n`` elapsed inside that chirp."""

    n: int
    t_n: float

    def validate(self, cfg: RadarConfig) -> "ChirpInstant":
        if not 0 <= self.n <= cfg.N - 1:
            raise ValueError(f"chirp ordinal {self.n} outside [0, {cfg.N - 1}]")
        if not 0.0 <= self.t_n < cfg.T:
            raise ValueError(f"t_n={self.t_n} outside [0, T)")
        return self

    def time(self, cfg: RadarConfig) -> float:
        return self.n * cfg.T + self.t_n


def instant_frequency(cfg: RadarConfig, inst: ChirpInstant) -> float:
    inst.validate(cfg)
    return cfg.f0 + cfg.B * inst.t_n / cfg.T


def _phase(cfg: RadarConfig, n, t_n):
    cycles = cfg.f0 * (n * cfg.T + t_n) + cfg.B * (t_n**2 + n * cfg.T**2) / (2 * cfg.T)
    return 2 * np.pi * cycles + cfg.phi0


def accumulated_phase(cfg: RadarConfig, inst: ChirpInstant) -> float:
    inst.validate(cfg)
    return float(_phase(cfg, inst.n, inst.t_n))


def tx_signal(cfg: RadarConfig, inst: ChirpInstant) -> complex:
    return complex(cfg.A_tx * np.exp(1j * accumulated_phase(cfg, inst)))


def rx_phase(cfg: RadarConfig, inst: ChirpInstant, tau: float) -> float:
    inst.validate(cfg)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    t = inst.time(cfg)
    cycles = cfg.f0 * (t - tau) + cfg.B * ((inst.t_n - tau) ** 2 + inst.n * cfg.T**2) / (2 * cfg.T)
    return 2 * math.pi * cycles + cfg.phi0


def rx_signal(cfg: RadarConfig, inst: ChirpInstant, tau: float, a_prime: float) -> complex:
    """Received echo: the transmitted chirp delayed by ``tau`` with amplitude ``a_prime``."""
    return complex(a_prime * np.exp(1j * rx_phase(cfg, inst, tau)))


def attenuated_amplitude(cfg: RadarConfig, rcs, distance_total):
    """Radar-equation amplitude ``G_tx G_rx lambda sqrt(P R) / ((4 pi)^1.5 D^2)``.

    Accepts scalars or arrays for ``rcs`` and ``distance_total``.
    """
    rcs_arr = np.asarray(rcs, dtype=float)
    d = np.asarray(distance_total, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if np.any(rcs_arr < 0):
        raise ValueError("rcs must be non-negative")
    amp = cfg.G_tx * cfg.G_rx * cfg.wavelength * np.sqrt(cfg.P * rcs_arr) / ((4 * np.pi) ** 1.5 * d**2)
    return float(amp) if amp.ndim == 0 else amp


def to_db(amplitude, counters: Counters | None = None):
    """Amplitude to dB re 1, clamped to [-150, +150]; clamps are counted."""
    amp = np.asarray(amplitude, dtype=float)
    if np.any(amp <= 0) or np.any(~np.isfinite(amp)):
        raise ValueError("amplitude must be positive and finite")
    db = 20.0 * np.log10(amp)
    clamped = (db < DB_MIN) | (db > DB_MAX)
    if counters is not None:
        counters.intensity_clamps += int(np.count_nonzero(clamped))
    db = np.clip(db, DB_MIN, DB_MAX)
    return float(db) if db.ndim == 0 else db
