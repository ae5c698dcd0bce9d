"""
Tests for the antenna array module
Steering vectors, photonic/RF array gains and the beam-pattern sweep
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from config import FIG3_ANTENNAS, FIG3_WAVELENGTHS
from src.arrays import (
    BEAM_PATTERN_COLUMNS,
    ArrayGeometry,
    ArrayKind,
    BeamFocus,
    CarrierPlan,
    beam_pattern_sweep,
    half_power_beamwidth,
    photonic_array_gain,
    photonic_gain_lower_bound,
    rf_array_gain,
    squint_offset,
    squint_pattern,
    steering_vector,
    ula_steering,
    uspa_steering,
)
from src.errors import ArgumentError, DimensionError, GeometryError
from src.scenario import fig3_angle_grid


def fig3_setup():
    geom = ArrayGeometry(kind=ArrayKind.ULA, M=FIG3_ANTENNAS, d=FIG3_WAVELENGTHS[0] / 2)
    return geom, CarrierPlan(wavelengths=list(FIG3_WAVELENGTHS))


def test_steering_vectors_unit_norm():
    """ULA and USPA responses have unit norm and start at phase zero"""
    print("🧪 Testing steering vector norms...")
    lam = 0.01
    ula = ArrayGeometry(kind=ArrayKind.ULA, M=8, d=lam / 2)
    uspa = ArrayGeometry(kind=ArrayKind.USPA, M=16, d=lam / 2)

    a = ula_steering(0.3, lam, ula)
    b = uspa_steering(0.3, -0.7, lam, uspa)
    assert a.shape == (8,) and b.shape == (16,)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12
    assert abs(np.linalg.norm(b) - 1.0) < 1e-12
    assert abs(a[0] - 1 / np.sqrt(8)) < 1e-15
    print("✅ Steering vectors normalized")


def test_uspa_row_major_ordering():
    print("🧪 Testing USPA element ordering...")
    lam, az, el = 0.01, 0.4, 0.9
    geom = ArrayGeometry(kind=ArrayKind.USPA, M=9, d=lam / 2)
    vec = uspa_steering(az, el, lam, geom)
    k = 2 * np.pi / lam * geom.d
    for p in range(3):
        for q in range(3):
            expected = np.exp(1j * k * (p * np.sin(az) * np.sin(el) + q * np.cos(el))) / 3
            assert abs(vec[p * 3 + q] - expected) < 1e-12
    print("✅ Index m = p * side + q")


def test_steering_dispatch_and_geometry_errors():
    lam = 0.01
    ula = ArrayGeometry(kind=ArrayKind.ULA, M=4, d=lam / 2)
    uspa = ArrayGeometry(kind=ArrayKind.USPA, M=4, d=lam / 2)
    assert np.allclose(steering_vector(ula, lam, 0.2), ula_steering(0.2, lam, ula))
    assert np.allclose(steering_vector(uspa, lam, 0.2, 0.5), uspa_steering(0.2, 0.5, lam, uspa))

    with pytest.raises(GeometryError):
        ula_steering(0.2, lam, uspa)
    with pytest.raises(GeometryError):
        uspa_steering(0.2, 0.5, lam, ula)
    with pytest.raises(GeometryError):
        ArrayGeometry(kind=ArrayKind.USPA, M=15, d=lam / 2)
    with pytest.raises(GeometryError):
        ArrayGeometry(kind=ArrayKind.ULA, M=0, d=lam / 2)


def test_peak_gain_identity():
    """On focus the photonic gain is sqrt(N_r) times the RF gain"""
    print("🧪 Testing peak gain identity...")
    geom, plan = fig3_setup()
    photonic = photonic_array_gain(np.zeros(plan.n_r), geom, plan)
    rf = rf_array_gain(0.0, geom, plan.reference_wavelength)
    assert abs(photonic - 8.0) < 1e-12
    assert abs(rf - 4.0) < 1e-12
    assert abs(photonic / rf - 2.0) < 1e-12
    print(f"✅ Photonic {photonic:.12f}, RF {rf:.12f}")


def test_array_gains_match_direct_summation():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        M = int(rng.integers(2, 33))
        n_r = int(rng.integers(1, 5))
        wavelengths = rng.uniform(3e-3, 12e-3, n_r)
        geom = ArrayGeometry(kind=ArrayKind.ULA, M=M, d=float(rng.uniform(0.3, 1.0) * wavelengths[0]))
        plan = CarrierPlan(wavelengths=list(wavelengths))
        offsets = rng.uniform(-2.0, 2.0, n_r)

        m = np.arange(M)
        oracle = abs(sum(np.exp(1j * 2 * np.pi / lam * geom.d * x * m).sum()
                         for lam, x in zip(wavelengths, offsets))) / np.sqrt(M * n_r)
        assert np.isclose(photonic_array_gain(offsets, geom, plan), oracle, rtol=1e-10, atol=1e-12)

        rf_oracle = abs(np.exp(1j * 2 * np.pi / wavelengths[0] * geom.d * offsets[0] * m).sum()) / np.sqrt(M)
        assert np.isclose(rf_array_gain(offsets[0], geom, wavelengths[0]), rf_oracle,
                          rtol=1e-10, atol=1e-12)


def test_rf_gain_kernel_singularity():
    """A grating-lobe offset hits sin(u) = 0 and falls back to direct summation"""
    lam = 0.01
    geom = ArrayGeometry(kind=ArrayKind.ULA, M=16, d=lam)
    # pi * d * x / lam = pi at x = 1
    assert abs(rf_array_gain(1.0, geom, lam) - 4.0) < 1e-9
    assert abs(rf_array_gain(1e-9, geom, lam) - 4.0) < 1e-9


def test_photonic_gain_offset_count():
    geom, plan = fig3_setup()
    with pytest.raises(DimensionError):
        photonic_array_gain([0.0, 0.0], geom, plan)


def test_lower_bound_on_focus():
    geom, plan = fig3_setup()
    assert abs(photonic_gain_lower_bound(0.0, geom, plan) - 0.5) < 1e-15
    assert photonic_gain_lower_bound(0.01, geom, plan) > 0.5


def test_squint_offset():
    focus = BeamFocus(focus_angle=0.2, user_angle=0.2)
    assert abs(squint_offset(focus, 1.0)) < 1e-15
    assert abs(squint_offset(BeamFocus(0.0, np.pi / 2), 1.05) - 1.05) < 1e-15
    with pytest.raises(ArgumentError):
        BeamFocus(focus_angle=4.0, user_angle=0.0)


def test_fig3_beam_pattern():
    """Peak ratio 2 and a narrower photonic main lobe over a 0.1 degree sweep"""
    print("🧪 Testing beam-pattern sweep...")
    geom, plan = fig3_setup()
    table = beam_pattern_sweep(fig3_angle_grid(), 0.0, geom, plan, plan.reference_wavelength,
                               include_bound=True)
    assert list(table.columns) == BEAM_PATTERN_COLUMNS
    assert len(table) == 1801

    ratio = table["gain_photonic"].max() / table["gain_rf"].max()
    assert abs(ratio - 2.0) < 1e-9

    hpbw_photonic = half_power_beamwidth(table["angle_rad"], table["gain_photonic"])
    hpbw_rf = half_power_beamwidth(table["angle_rad"], table["gain_rf"])
    assert hpbw_photonic < hpbw_rf
    print(f"✅ Ratio {ratio:.12f}, HPBW photonic {np.rad2deg(hpbw_photonic):.2f} deg "
          f"vs RF {np.rad2deg(hpbw_rf):.2f} deg")


def test_beam_pattern_without_bound_and_empty_grid():
    geom, plan = fig3_setup()
    table = beam_pattern_sweep([0.0, 0.1], 0.0, geom, plan, plan.reference_wavelength)
    assert list(table.columns) == BEAM_PATTERN_COLUMNS[:3]
    with pytest.raises(ArgumentError):
        beam_pattern_sweep([], 0.0, geom, plan, plan.reference_wavelength)


def test_squint_pattern_reduces_to_beam_pattern():
    geom, plan = fig3_setup()
    grid = np.linspace(-0.5, 0.5, 41)
    plain = beam_pattern_sweep(grid, 0.1, geom, plan, plan.reference_wavelength)
    squinted = squint_pattern(grid, 0.1, geom, plan)
    # both sweeps take their offsets from squint_offset, so unit xi matches bit for bit
    assert np.array_equal(plain["gain_photonic"].to_numpy(), squinted["gain_photonic"].to_numpy())
    with pytest.raises(ArgumentError):
        beam_pattern_sweep(grid, 4.0, geom, plan, plan.reference_wavelength)


def test_squint_lowers_focus_gain():
    lam = 0.0107
    geom = ArrayGeometry(kind=ArrayKind.ULA, M=16, d=lam / 2)
    wide = CarrierPlan(wavelengths=[lam] * 4, xi=[1.1] * 4, frac_bw=[0.2] * 4)
    focus = 0.5
    gain = squint_pattern([focus], focus, geom, wide)["gain_photonic"][0]
    assert gain < 8.0


def test_carrier_plan_validation():
    plan = CarrierPlan.from_frequencies([28e9, 30e9], [2.8e9, 3e9], band_edge=1.0)
    assert plan.n_r == 2
    assert np.allclose(plan.xi, [1.05, 1.05])
    assert np.allclose(plan.frac_bw, [0.1, 0.1])
    assert CarrierPlan.single(0.01, 3).wavelengths == [0.01, 0.01, 0.01]

    with pytest.raises(ArgumentError):
        CarrierPlan(wavelengths=[0.01], xi=[1.2], frac_bw=[0.1])
    with pytest.raises(ArgumentError):
        CarrierPlan(wavelengths=[-0.01])
    with pytest.raises(DimensionError):
        CarrierPlan(wavelengths=[0.01, 0.02], xi=[1.0])


def test_half_power_beamwidth_interpolates():
    angles = [-2.0, -1.0, 0.0, 1.0, 2.0]
    gains = [0.0, 0.5, 1.0, 0.5, 0.0]
    expected = 2 * (1.0 - 1 / np.sqrt(2.0)) / 0.5
    assert abs(half_power_beamwidth(angles, gains) - expected) < 1e-12


def main():
    """Run all array tests"""
    print("🚀 Array Module - Test Run")
    print("=" * 50)

    tests = [
        ("Steering Norms", test_steering_vectors_unit_norm),
        ("USPA Ordering", test_uspa_row_major_ordering),
        ("Geometry Errors", test_steering_dispatch_and_geometry_errors),
        ("Peak Gain Identity", test_peak_gain_identity),
        ("Direct Summation Oracle", test_array_gains_match_direct_summation),
        ("Kernel Singularity", test_rf_gain_kernel_singularity),
        ("Offset Count", test_photonic_gain_offset_count),
        ("Lower Bound", test_lower_bound_on_focus),
        ("Squint Offset", test_squint_offset),
        ("Fig 3 Beam Pattern", test_fig3_beam_pattern),
        ("Sweep Columns", test_beam_pattern_without_bound_and_empty_grid),
        ("Squint Pattern", test_squint_pattern_reduces_to_beam_pattern),
        ("Squint Loss", test_squint_lowers_focus_gain),
        ("Carrier Plan", test_carrier_plan_validation),
        ("Half-Power Beamwidth", test_half_power_beamwidth_interpolates),
    ]

    passed = 0
    for test_name, test_func in tests:
        print(f"\n📋 {test_name}...")
        try:
            test_func()
            passed += 1
        except Exception as e:
            print(f"❌ {test_name} failed: {type(e).__name__}: {e}")

    print("\n" + "=" * 50)
    print(f"📊 Test Results: {passed}/{len(tests)} tests passed")
    return passed == len(tests)


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
