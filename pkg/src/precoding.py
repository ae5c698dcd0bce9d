"""
Hybrid Precoding Module
Photonic analog stage, OAWG weights, ZF/MMSE baseband stage and residual analysis
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import NORM_TOLERANCE, RANK_TOLERANCE
from src.arrays import ArrayGeometry, CarrierPlan, steering_vector
from src.channel import PathSet
from src.errors import (
    ArgumentError,
    ConfigurationError,
    DegeneratePrecoderError,
    DimensionError,
    SingularChannelError,
)

logger = logging.getLogger(__name__)


class PrecoderKind(Enum):
    ZF = "ZF"
    MMSE = "MMSE"


@dataclass(frozen=True)
class PrecoderSet:
    """Factors of the hybrid precoder F_RoF diag(f_OAWG) F_BB"""
    f_rof: np.ndarray             # M x N_r, constant modulus 1/sqrt(M)
    f_oawg: np.ndarray            # N_r per-carrier weights
    f_bb: np.ndarray              # N_r x K
    combiners: List[np.ndarray]   # K receive combiners of length N
    sigma: float                  # Gram scaling of F_BB^H F_BB = sigma I
    power_carriers: int           # carriers counted in the power target (N_r, or 1 for RF)

    @property
    def n_r(self) -> int:
        return self.f_rof.shape[1]

    @property
    def K(self) -> int:
        return self.f_bb.shape[1]

    def analog(self) -> np.ndarray:
        """F_RoF diag(f_OAWG)"""
        return self.f_rof * self.f_oawg[np.newaxis, :]

    def composite(self) -> np.ndarray:
        """F_RoF diag(f_OAWG) F_BB"""
        return self.analog() @ self.f_bb


@dataclass(frozen=True)
class EffectiveChannel:
    """K x N_r channel seen by the digital precoder"""
    h_p: np.ndarray

    @property
    def K(self) -> int:
        return self.h_p.shape[0]


def round_robin_assignment(N_r: int, K: int) -> List[int]:
    """Carrier n serves user n mod K"""
    if N_r < K:
        raise ConfigurationError(f"Need at least as many carriers as users (K <= N_r), got K={K}, N_r={N_r}")
    return [n % K for n in range(N_r)]


def build_photonic_beamformer(paths: PathSet, tx_geom: ArrayGeometry, plan: CarrierPlan,
                              assignment: Optional[Sequence[int]] = None) -> np.ndarray:
    """Column n steers carrier n toward the strongest path of its assigned user"""
    if assignment is None:
        assignment = round_robin_assignment(plan.n_r, paths.K)
    elif plan.n_r < paths.K:
        raise ConfigurationError(f"Need K <= N_r, got K={paths.K}, N_r={plan.n_r}")
    if len(assignment) != plan.n_r:
        raise DimensionError(f"Assignment covers {len(assignment)} carriers, plan has {plan.n_r}")

    f_rof = np.zeros((tx_geom.M, plan.n_r), dtype=complex)
    for n, (lam, k) in enumerate(zip(plan.wavelengths, assignment)):
        user = paths.users[k]
        l = user.strongest
        f_rof[:, n] = steering_vector(tx_geom, lam, user.aod_azimuth[l], user.aod_elevation[l])
    return f_rof


def build_oawg_weights(N_r: int, K: int, f_rof: np.ndarray) -> np.ndarray:
    """Uniform zero-phase weights meeting ||F_RoF diag(f)||_F^2 = K"""
    column_norms = np.linalg.norm(f_rof, axis=0)
    if not np.allclose(column_norms, 1.0, atol=1e-9):
        logger.warning("Photonic beamformer columns are not unit norm; power target will drift")
    return np.full(N_r, np.sqrt(K / N_r), dtype=complex)


def effective_channel(H: np.ndarray, combiners: Sequence[np.ndarray], f_rof: np.ndarray,
                      f_oawg: np.ndarray) -> EffectiveChannel:
    """Propagate each carrier column through that carrier's channel

    H has shape (K, N_r, N, M).
    """
    H = np.asarray(H)
    if H.ndim != 4:
        raise DimensionError(f"Channel array must be (K, N_r, N, M), got shape {H.shape}")
    K, N_r, N, M = H.shape
    if f_rof.shape != (M, N_r) or f_oawg.shape != (N_r,) or len(combiners) != K:
        raise DimensionError(
            f"Shapes do not conform: H {H.shape}, F_RoF {f_rof.shape}, "
            f"f_OAWG {f_oawg.shape}, {len(combiners)} combiners"
        )
    W = np.stack([np.asarray(w, dtype=complex).reshape(N) for w in combiners])
    # h_p[k, n] = w_k^H H_k^(n) f_rof[:, n] f_oawg[n]
    h_p = np.einsum("kx,knxm,mn->kn", W.conj(), H, f_rof) * f_oawg[np.newaxis, :]
    return EffectiveChannel(h_p=h_p)


def _matrix(h_p) -> np.ndarray:
    return h_p.h_p if isinstance(h_p, EffectiveChannel) else np.atleast_2d(np.asarray(h_p))


def _check_full_row_rank(h: np.ndarray) -> None:
    s = np.linalg.svd(h, compute_uv=False)
    if s.size == 0 or s[0] == 0 or s[-1] / s[0] <= RANK_TOLERANCE or h.shape[0] > h.shape[1]:
        raise SingularChannelError(
            f"Effective channel {h.shape} is rank deficient "
            f"(sigma_min/sigma_max = {s[-1] / s[0] if s.size and s[0] else 0.0:.3e})"
        )


def zf_baseband(h_p) -> np.ndarray:
    """Right pseudoinverse of the stacked effective channel"""
    h = _matrix(h_p)
    _check_full_row_rank(h)
    return h.conj().T @ np.linalg.inv(h @ h.conj().T)


def mmse_baseband(h_p, snr: float, combiner_norm_sq: float = 1.0) -> np.ndarray:
    """Regularized inverse with ||w||^2 / snr diagonal loading"""
    if snr <= 0:
        raise ArgumentError(f"snr must be positive, got {snr}")
    h = _matrix(h_p)
    K = h.shape[0]
    return h.conj().T @ np.linalg.inv(h @ h.conj().T + (combiner_norm_sq / snr) * np.eye(K))


def normalize_total_power(precoder: PrecoderSet) -> PrecoderSet:
    """Scale F_BB so the composite precoder carries power_carriers * K"""
    norm = np.linalg.norm(precoder.composite(), "fro")
    if norm == 0 or not np.isfinite(norm):
        raise DegeneratePrecoderError("Composite precoder has zero or non-finite power")
    beta = np.sqrt(precoder.power_carriers * precoder.K) / norm
    return replace(precoder, f_bb=precoder.f_bb * beta)


def optimal_full_digital(H_stack: np.ndarray, kind: PrecoderKind, snr: float = 1.0,
                         total_power: Optional[float] = None) -> np.ndarray:
    """Unconstrained digital precoder used as the approximation target

    Normalized to ||F_opt||_F^2 = M K unless total_power is given.
    """
    H = np.atleast_2d(np.asarray(H_stack))
    K, M = H.shape
    if kind == PrecoderKind.ZF:
        F = zf_baseband(H)
    else:
        F = mmse_baseband(H, snr)
    target = M * K if total_power is None else total_power
    return F * np.sqrt(target) / np.linalg.norm(F, "fro")


def gram_sigma(f_bb: np.ndarray) -> float:
    """Least-squares sigma for F_BB^H F_BB = sigma I"""
    K = f_bb.shape[1]
    return float(np.real(np.trace(f_bb.conj().T @ f_bb)) / K)


def gram_deviation(f_bb: np.ndarray, sigma: float) -> float:
    """Relative distance of F_BB^H F_BB from sigma I"""
    K = f_bb.shape[1]
    return float(np.linalg.norm(f_bb.conj().T @ f_bb - sigma * np.eye(K), "fro") / sigma)


def precoder_residual(f_opt: np.ndarray, precoder: PrecoderSet) -> Tuple[float, float]:
    """Approximation residual against F_opt and its lower bound |sqrt(N_r K) - sqrt(sigma K)|^2"""
    composite = precoder.composite()
    if f_opt.shape != composite.shape:
        raise DimensionError(f"F_opt shape {f_opt.shape} differs from composite {composite.shape}")

    residual = float(np.linalg.norm(f_opt - composite, "fro") ** 2)
    K = precoder.K
    bound = float(abs(np.sqrt(precoder.n_r * K) - np.sqrt(precoder.sigma * K)) ** 2)

    deviation = gram_deviation(precoder.f_bb, precoder.sigma)
    if deviation > 1e-6:
        logger.debug(f"F_BB Gram deviation {deviation:.3e}: residual bound not guaranteed")
    return residual, bound


def build_combiners(paths: PathSet, rx_geom: ArrayGeometry, wavelength: float) -> List[np.ndarray]:
    """Receive combiners: [1] for single antennas, else the strongest path's a_r"""
    if rx_geom.M == 1:
        return [np.ones(1, dtype=complex) for _ in paths.users]
    combiners = []
    for user in paths.users:
        combiners.append(steering_vector(rx_geom, wavelength, user.aoa[user.strongest]))
    return combiners


def check_precoder(precoder: PrecoderSet) -> Tuple[bool, str]:
    """Validate the constant-modulus and power constraints"""
    M = precoder.f_rof.shape[0]
    modulus_error = np.max(np.abs(np.abs(precoder.f_rof) - 1 / np.sqrt(M)))
    if modulus_error > 1e-12:
        return False, f"F_RoF entries deviate from 1/sqrt(M) by {modulus_error:.3e}"
    power = np.linalg.norm(precoder.composite(), "fro") ** 2
    target = precoder.power_carriers * precoder.K
    if abs(power - target) > NORM_TOLERANCE * target:
        return False, f"Composite power {power:.12g} differs from {target}"
    return True, "Precoder constraints satisfied"
