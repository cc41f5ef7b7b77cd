"""Cosine-modulated analysis bank: design quality and decomposition ops."""

import numpy as np
import pytest

from kronsaf.errors import DesignError
from kronsaf.filterbank import (
    analyze_inputs,
    analyze_scalar_window,
    bank_power_response,
    design_bank,
    design_prototype,
    load_bank,
    save_bank,
    subband_signals,
)


def test_bank_shape_and_unit_norm_columns():
    bank = design_bank(4, 33)
    assert bank.shape == (33, 4)
    assert np.allclose(np.linalg.norm(bank, axis=0), 1.0, atol=1e-12)


def test_power_complementarity_within_1db():
    bank = design_bank(4, 33)
    freqs, total = bank_power_response(bank)
    total_db = 10 * np.log10(total)
    assert total_db.max() - total_db.min() <= 1.0


@pytest.mark.parametrize("n_subbands,taps", [(2, 17), (4, 33), (8, 65)])
def test_power_complementarity_other_sizes(n_subbands, taps):
    bank = design_bank(n_subbands, taps)
    _, total = bank_power_response(bank)
    total_db = 10 * np.log10(total)
    assert total_db.max() - total_db.min() <= 1.0


def test_dc_separation_at_least_40db():
    bank = design_bank(4, 33)
    dc = np.abs(bank.sum(axis=0))
    assert 20 * np.log10(dc[0] / dc[-1]) >= 40.0


def test_prototype_stopband_attenuation():
    proto, cutoff = design_prototype(4, 33)
    nfft = 8192
    h = np.abs(np.fft.rfft(proto, nfft))
    freqs = np.arange(h.size) / nfft  # cycles/sample
    peak = h.max()
    # Kaiser transition width at the design's own attenuation target;
    # cutoff is in Nyquist units (firwin convention) and marks the
    # transition-band center. The floor requirement stays 60 dB.
    width = (62.0 - 7.95) / (2.285 * 2 * np.pi * (33 - 1))
    stop = freqs >= cutoff / 2.0 + width / 2.0
    assert 20 * np.log10(peak / h[stop].max()) >= 60.0


def test_analysis_is_linear():
    bank = design_bank(4, 33)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(33)
    b = rng.standard_normal(33)
    lhs = analyze_scalar_window(2.0 * a - 3.0 * b, bank)
    rhs = 2.0 * analyze_scalar_window(a, bank) - 3.0 * analyze_scalar_window(b, bank)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_constant_window_gives_coefficient_sums():
    # constant input times each column's coefficient sum
    bank = design_bank(2, 17)
    c = 3.0
    out = analyze_scalar_window(np.full(17, c), bank)
    assert np.allclose(out, c * bank.sum(axis=0), atol=1e-12)


def test_unit_window_gives_column_sums():
    bank = design_bank(2, 17)
    out = analyze_scalar_window(np.ones(17), bank)
    assert np.allclose(out, bank.sum(axis=0), atol=1e-12)


def test_analyze_inputs_matches_per_row_dot():
    bank = design_bank(4, 33)
    rng = np.random.default_rng(1)
    windows = rng.standard_normal((6, 33))
    got = analyze_inputs(windows, bank)
    assert got.shape == (4, 6)
    for j in range(4):
        for i in range(6):
            assert got[j, i] == pytest.approx(np.dot(windows[i], bank[:, j]), abs=1e-12)


def test_subband_signals_match_windowed_analysis():
    # streaming decomposition at index k equals analyzing the newest-first window
    bank = design_bank(4, 33)
    rng = np.random.default_rng(2)
    x = rng.standard_normal(120)
    sub = subband_signals(x, bank)
    assert sub.shape == (4, 120)
    ext = np.concatenate([x[::-1], np.zeros(32)])
    for k in (0, 5, 40, 119):
        window = ext[119 - k : 119 - k + 33]
        assert np.allclose(sub[:, k], analyze_scalar_window(window, bank), atol=1e-12)


def test_single_band_returns_prototype():
    bank = design_bank(1, 17)
    proto, _ = design_prototype(1, 17)
    expected = proto / np.linalg.norm(proto)
    assert np.allclose(bank[:, 0], expected, atol=1e-12)


def test_too_few_taps_rejected():
    with pytest.raises(DesignError):
        design_bank(8, 8)


def test_bank_rows_are_write_protected():
    bank = design_bank(4, 33)
    with pytest.raises((ValueError, RuntimeError)):
        bank[0, 0] = 1.0


def test_bank_file_roundtrip(tmp_path):
    bank = design_bank(4, 33)
    path = tmp_path / "bank.txt"
    save_bank(path, bank)
    assert np.allclose(load_bank(path), bank, atol=0, rtol=0)
