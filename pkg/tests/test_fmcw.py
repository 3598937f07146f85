import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarsynth.config import SPEED_OF_LIGHT, RadarConfig
from radarsynth.counters import Counters
from radarsynth.fmcw import (
    ChirpInstant,
    accumulated_phase,
    attenuated_amplitude,
    instant_frequency,
    rx_signal,
    to_db,
    tx_signal,
)


def trapezoid_phase(cfg, n, t_n, per_chirp=64):
    """2*pi * integral of f over [0, n*T + t_n] by the trapezoidal rule, plus phi0."""
    total = 0.0
    for k in range(n + 1):
        end = cfg.T if k < n else t_n
        if end == 0:
            continue
        x = np.linspace(0.0, end, per_chirp)
        f = cfg.f0 + cfg.B * x / cfg.T
        total += float(np.sum((f[1:] + f[:-1]) * np.diff(x)) / 2)
    return 2 * math.pi * total + cfg.phi0


def test_default_bandwidth_from_range_resolution(cfg):
    assert cfg.B == pytest.approx(SPEED_OF_LIGHT / (2 * 0.04))
    assert cfg.B == pytest.approx(3.75e9, rel=1e-3)


def test_instant_frequency_endpoints(cfg):
    assert instant_frequency(cfg, ChirpInstant(0, 0.0)) == cfg.f0
    assert instant_frequency(cfg, ChirpInstant(3, cfg.T / 2)) == pytest.approx(cfg.f0 + cfg.B / 2)
    # approaching the open end of the chirp the frequency tends to f0 + B
    near_end = instant_frequency(cfg, ChirpInstant(0, cfg.T * (1 - 1e-12)))
    assert near_end == pytest.approx(77e9 + cfg.B, rel=1e-12)


def test_instant_rejects_out_of_range(cfg):
    with pytest.raises(ValueError):
        instant_frequency(cfg, ChirpInstant(cfg.N, 0.0))
    with pytest.raises(ValueError):
        instant_frequency(cfg, ChirpInstant(0, cfg.T))


def test_phase_at_frame_start_is_phi0():
    cfg = RadarConfig(phi0=0.7)
    assert accumulated_phase(cfg, ChirpInstant(0, 0.0)) == 0.7


def test_phase_full_first_chirp_limit(cfg):
    expected = 2 * math.pi * (cfg.f0 * cfg.T + cfg.B * cfg.T / 2) + cfg.phi0
    # the second chirp's start equals the full first chirp
    assert accumulated_phase(cfg, ChirpInstant(1, 0.0)) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(0, 15), frac=st.floats(0.0, 0.999999))
def test_phase_matches_quadrature(n, frac):
    cfg = RadarConfig()
    t_n = frac * cfg.T
    assert accumulated_phase(cfg, ChirpInstant(n, t_n)) == pytest.approx(trapezoid_phase(cfg, n, t_n), rel=1e-9)


def test_phase_continuity_at_boundaries(cfg):
    for n in range(cfg.N - 1):
        end = accumulated_phase(cfg, ChirpInstant(n, cfg.T * (1 - 1e-13)))
        start = accumulated_phase(cfg, ChirpInstant(n + 1, 0.0))
        assert end == pytest.approx(start, rel=1e-9)


def test_tx_signal_special_phases():
    cfg = RadarConfig(f0=0.0, B=1.0, T=1.0, phi0=0.0, A_tx=2.0)
    assert tx_signal(cfg, ChirpInstant(0, 0.0)) == 2.0 + 0j
    cfg = RadarConfig(f0=0.0, B=1.0, T=1.0, phi0=math.pi, A_tx=2.0)
    assert tx_signal(cfg, ChirpInstant(0, 0.0)) == pytest.approx(-2.0 + 0j, abs=1e-15)


def test_tx_modulus_property(cfg, rng):
    for _ in range(1000):
        inst = ChirpInstant(int(rng.integers(0, cfg.N)), float(rng.uniform(0, cfg.T)))
        assert abs(tx_signal(cfg, inst)) == pytest.approx(cfg.A_tx, rel=1e-12)


def test_rx_zero_delay_equals_tx(cfg, rng):
    for _ in range(20):
        inst = ChirpInstant(int(rng.integers(0, cfg.N)), float(rng.uniform(0, cfg.T)))
        assert rx_signal(cfg, inst, 0.0, cfg.A_tx) == tx_signal(cfg, inst)


def test_rx_modulus(cfg):
    for tau in (0.0, 1e-9, 3.3e-8):
        assert abs(rx_signal(cfg, ChirpInstant(2, 1e-5), tau, 0.25)) == pytest.approx(0.25)


def test_beat_phase_slope_matches_finite_difference(cfg):
    inst = ChirpInstant(1, 4e-5)

    def beat(tau):
        # unwrapped beat phase: tx phase minus rx phase
        from radarsynth.fmcw import rx_phase

        return accumulated_phase(cfg, inst) - rx_phase(cfg, inst, tau)

    tau0, h = 2e-8, 1e-12
    numeric = (beat(tau0 + h) - beat(tau0 - h)) / (2 * h)
    analytic = 2 * math.pi * (cfg.f0 + cfg.B * (inst.t_n - tau0) / cfg.T)
    assert numeric == pytest.approx(analytic, rel=1e-6)
    # small-tau linearity: beat(2 tau) ~ 2 beat(tau)
    assert beat(2e-9) == pytest.approx(2 * beat(1e-9), rel=1e-6)
    # the wrapped phasor agrees with the unwrapped beat phase
    phasor = tx_signal(cfg, inst) * np.conj(rx_signal(cfg, inst, tau0, 1.0))
    assert np.angle(phasor) == pytest.approx(math.remainder(beat(tau0), 2 * math.pi), abs=1e-4)


def test_attenuated_amplitude_hand_value():
    cfg = RadarConfig(G_tx=1, G_rx=1, wavelength=0.003896, P=1.0)
    # (4 pi)^1.5 = 44.546; 0.003896 / 44.546 = 8.746e-5
    assert (4 * math.pi) ** 1.5 == pytest.approx(44.546, rel=1e-4)
    assert attenuated_amplitude(cfg, 1.0, 1.0) == pytest.approx(8.75e-5, rel=1e-3)


def test_attenuated_amplitude_laws(cfg):
    a = attenuated_amplitude(cfg, 0.3, 1.7)
    assert attenuated_amplitude(cfg, 0.3, 3.4) == a / 4
    assert attenuated_amplitude(cfg, 1.2, 1.7) == pytest.approx(2 * a, rel=1e-15)
    with pytest.raises(ValueError):
        attenuated_amplitude(cfg, 1.0, 0.0)
    with pytest.raises(ValueError):
        attenuated_amplitude(cfg, -1.0, 1.0)


@given(d1=st.floats(0.1, 10), d2=st.floats(0.1, 10), r=st.floats(1e-6, 10))
def test_attenuated_amplitude_monotone(d1, d2, r):
    cfg = RadarConfig()
    if d1 < d2:
        assert attenuated_amplitude(cfg, r, d1) > attenuated_amplitude(cfg, r, d2)
        assert attenuated_amplitude(cfg, d1, 1.0) < attenuated_amplitude(cfg, d2, 1.0)


def test_to_db():
    c = Counters()
    assert to_db(1.0, c) == 0.0
    assert to_db(10.0, c) == pytest.approx(20.0)
    assert c.intensity_clamps == 0
    assert to_db(1e-9, c) == -150.0
    assert c.intensity_clamps == 1
    with pytest.raises(ValueError):
        to_db(0.0)
    with pytest.raises(ValueError):
        to_db(-1.0)
