"""
Tests for hybrid precoding: photonic stage, OAWG weights, ZF/MMSE and the residual bound
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.arrays import ArrayGeometry, ArrayKind, CarrierPlan, steering_vector
from src.channel import carrier_channels, sample_paths
from src.errors import ConfigurationError, DimensionError, SingularChannelError
from src.precoding import (
    PrecoderKind,
    PrecoderSet,
    build_combiners,
    build_oawg_weights,
    build_photonic_beamformer,
    check_precoder,
    effective_channel,
    gram_deviation,
    gram_sigma,
    mmse_baseband,
    normalize_total_power,
    optimal_full_digital,
    precoder_residual,
    round_robin_assignment,
    zf_baseband,
)

LAM = 3e8 / 28e9
USPA = ArrayGeometry(kind=ArrayKind.USPA, M=16, d=LAM / 2)
RX = ArrayGeometry(kind=ArrayKind.ULA, M=1, d=LAM / 2)


def fig4_link(seed: int, n_r: int = 3, K: int = 3):
    """Effective channel of one single-cluster USPA draw"""
    plan = CarrierPlan.single(LAM, n_r)
    paths = sample_paths(np.random.default_rng(seed), K=K, L=1, geometry_kind=ArrayKind.USPA)
    channels = carrier_channels(paths, USPA, RX, plan)
    f_rof = build_photonic_beamformer(paths, USPA, plan)
    f_oawg = build_oawg_weights(n_r, K, f_rof)
    combiners = build_combiners(paths, RX, LAM)
    h_p = effective_channel(channels.matrices, combiners, f_rof, f_oawg)
    return paths, channels, f_rof, f_oawg, combiners, h_p


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_round_robin_assignment():
    assert round_robin_assignment(5, 3) == [0, 1, 2, 0, 1]
    assert round_robin_assignment(3, 3) == [0, 1, 2]
    with pytest.raises(ConfigurationError):
        round_robin_assignment(2, 3)


def test_photonic_beamformer_columns():
    print("🧪 Testing photonic beamformer...")
    paths, _, f_rof, f_oawg, _, _ = fig4_link(1, n_r=5)
    assert f_rof.shape == (16, 5)
    assert np.allclose(np.abs(f_rof), 0.25, atol=1e-12)
    for n in range(5):
        user = paths.users[n % 3]
        l = user.strongest
        expected = steering_vector(USPA, LAM, user.aod_azimuth[l], user.aod_elevation[l])
        assert np.allclose(f_rof[:, n], expected)

    assert np.allclose(f_oawg, np.sqrt(3 / 5))
    analog = f_rof * f_oawg[np.newaxis, :]
    assert abs(np.linalg.norm(analog, "fro") ** 2 - 3.0) < 1e-12
    print("✅ Constant modulus columns, analog power K")


def test_effective_channel_matches_loop():
    _, channels, f_rof, f_oawg, combiners, h_p = fig4_link(2)
    H = channels.matrices
    K, N_r = H.shape[0], H.shape[1]
    expected = np.zeros((K, N_r), dtype=complex)
    for k in range(K):
        for n in range(N_r):
            expected[k, n] = combiners[k].conj() @ H[k, n] @ f_rof[:, n] * f_oawg[n]
    assert np.allclose(h_p.h_p, expected, atol=1e-12)

    with pytest.raises(DimensionError):
        effective_channel(H[:, :, 0, :], combiners, f_rof, f_oawg)
    with pytest.raises(DimensionError):
        effective_channel(H, combiners[:2], f_rof, f_oawg)


def test_zf_nulls_interference():
    """Off-diagonal composite gains vanish on random single-cluster draws"""
    print("🧪 Testing ZF nulling...")
    worst, checked = 0.0, 0
    for seed in range(2000):
        _, _, f_rof, f_oawg, combiners, h_p = fig4_link(seed)
        try:
            f_bb = zf_baseband(h_p)
        except SingularChannelError:
            continue
        precoder = normalize_total_power(PrecoderSet(f_rof, f_oawg, f_bb, combiners, 3.0, 3))
        gains = h_p.h_p @ precoder.f_bb
        worst = max(worst, np.max(np.abs(gains - np.diag(np.diag(gains)))))
        checked += 1
    assert checked > 1900
    assert worst < 1e-9
    print(f"✅ {checked} draws, worst off-diagonal {worst:.2e}")


def test_mmse_converges_to_zf():
    for seed in range(300):
        h = fig4_link(seed)[-1].h_p
        if np.linalg.svd(h, compute_uv=False)[-1] < 1e-2:
            continue
        zf = zf_baseband(h)
        mmse = mmse_baseband(h, 1e12)
        assert np.linalg.norm(mmse - zf) / np.linalg.norm(zf) < 1e-6


def test_mmse_regularizes_singular_channel():
    h = np.array([[1.0, 2.0], [1.0, 2.0]], dtype=complex)
    with pytest.raises(SingularChannelError):
        zf_baseband(h)
    f = mmse_baseband(h, 10.0)
    assert np.all(np.isfinite(f))


def test_zf_rejects_more_users_than_carriers():
    with pytest.raises(SingularChannelError):
        zf_baseband(np.ones((3, 2), dtype=complex))


def test_power_normalization():
    _, _, f_rof, f_oawg, combiners, h_p = fig4_link(5)
    f_bb = zf_baseband(h_p)

    rof = normalize_total_power(PrecoderSet(f_rof, f_oawg, f_bb, combiners, 3.0, 3))
    assert abs(np.linalg.norm(rof.composite(), "fro") ** 2 - 9.0) < 1e-9
    assert check_precoder(rof)[0]

    rf = normalize_total_power(PrecoderSet(f_rof, np.ones(3, dtype=complex), f_bb, combiners, 3.0, 1))
    assert abs(np.linalg.norm(rf.composite(), "fro") ** 2 - 3.0) < 1e-9

    broken = PrecoderSet(f_rof * 2.0, f_oawg, rof.f_bb, combiners, 3.0, 3)
    ok, message = check_precoder(broken)
    assert not ok and "1/sqrt(M)" in message


def test_optimal_full_digital():
    rng = np.random.default_rng(12)
    H = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
    F = optimal_full_digital(H, PrecoderKind.ZF)
    assert abs(np.linalg.norm(F, "fro") ** 2 - 48.0) < 1e-9
    G = H @ F
    assert np.allclose(G - np.diag(np.diag(G)), 0.0, atol=1e-9)

    F_mmse = optimal_full_digital(H, PrecoderKind.MMSE, snr=10.0, total_power=9.0)
    assert abs(np.linalg.norm(F_mmse, "fro") ** 2 - 9.0) < 1e-9


def test_residual_bound_on_conforming_instances():
    """Residual never falls below |sqrt(N_r K) - sqrt(sigma K)|^2"""
    print("🧪 Testing residual bound...")
    rng = np.random.default_rng(21)
    M, K = 16, 3
    N_r = K
    dft = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(N_r)) / M) / np.sqrt(M)

    for i in range(100):
        sigma = float(N_r) if i % 10 == 0 else float(rng.uniform(0.2, 6.0))
        f_bb = np.sqrt(sigma) * random_unitary(rng, N_r)
        precoder = PrecoderSet(dft, np.ones(N_r, dtype=complex), f_bb, [], sigma, N_r)
        assert abs(gram_sigma(f_bb) - sigma) < 1e-9
        assert gram_deviation(f_bb, sigma) < 1e-9

        H = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
        f_opt = optimal_full_digital(H, PrecoderKind.ZF, total_power=N_r * K)
        residual, bound = precoder_residual(f_opt, precoder)
        assert residual >= bound - 1e-9
        if sigma == N_r:
            assert bound == 0.0
            assert residual >= 0.0
    print("✅ Bound holds on 100 instances")


def test_residual_shape_mismatch():
    precoder = PrecoderSet(np.ones((4, 2)) / 2, np.ones(2), np.eye(2), [], 1.0, 2)
    with pytest.raises(DimensionError):
        precoder_residual(np.ones((4, 3)), precoder)


def test_single_antenna_combiners():
    paths = sample_paths(np.random.default_rng(0), K=2, L=1, geometry_kind=ArrayKind.ULA)
    combiners = build_combiners(paths, RX, LAM)
    assert len(combiners) == 2
    assert all(np.array_equal(w, np.ones(1)) for w in combiners)

    rx4 = ArrayGeometry(kind=ArrayKind.ULA, M=4, d=LAM / 2)
    combiners = build_combiners(paths, rx4, LAM)
    assert all(abs(np.linalg.norm(w) - 1.0) < 1e-12 for w in combiners)


def main():
    """Run all precoding tests"""
    print("🚀 Precoding Module - Test Run")
    print("=" * 50)

    tests = [
        ("Round Robin", test_round_robin_assignment),
        ("Photonic Beamformer", test_photonic_beamformer_columns),
        ("Effective Channel", test_effective_channel_matches_loop),
        ("ZF Nulling", test_zf_nulls_interference),
        ("MMSE to ZF", test_mmse_converges_to_zf),
        ("MMSE Regularization", test_mmse_regularizes_singular_channel),
        ("ZF Shape Check", test_zf_rejects_more_users_than_carriers),
        ("Power Normalization", test_power_normalization),
        ("Optimal Full Digital", test_optimal_full_digital),
        ("Residual Bound", test_residual_bound_on_conforming_instances),
        ("Residual Shapes", test_residual_shape_mismatch),
        ("Combiners", test_single_antenna_combiners),
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
