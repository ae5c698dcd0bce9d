"""
Link Metrics Module
Instantaneous SINR and spectral efficiency, closed-form bounds and asymptotics
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.special import erfc

from src.errors import ArgumentError, DimensionError

logger = logging.getLogger(__name__)

LOG2_E = 1.0 / np.log(2.0)

METRICS_COLUMNS = [
    "snr_db", "se_mean", "se_stderr", "ber_mean", "ber_stderr",
    "se_bound_eq13", "ber_bound_eq18", "trials", "singular_trials",
]


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power per user, noise power and their ratio"""
    snr: float
    rho: float
    noise_power: float

    def __post_init__(self):
        if self.snr <= 0 or self.rho <= 0 or self.noise_power <= 0:
            raise ArgumentError(
                f"Link budget terms must be positive: snr={self.snr}, rho={self.rho}, "
                f"noise={self.noise_power}"
            )

    @classmethod
    def from_snr(cls, snr: float, K: int, total_power: float = 1.0) -> "LinkBudget":
        """rho = P_s / K, N_o = P_s / snr"""
        if snr <= 0:
            raise ArgumentError(f"snr must be positive, got {snr}")
        return cls(snr=snr, rho=total_power / K, noise_power=total_power / snr)

    def is_consistent(self, K: int) -> bool:
        return abs(self.rho * K / self.noise_power - self.snr) <= 1e-12 * self.snr


@dataclass
class MetricsRecord:
    """Aggregated results at one SNR grid point"""
    snr_db: float
    se_mean: float
    se_stderr: float
    ber_mean: float
    ber_stderr: float
    sinr_per_user: List[float]
    se_bound_eq13: float
    ber_bound_eq18: float
    trials: int
    singular_trials: int
    se_low_snr_eq14: float = float("nan")
    se_massive_eq16: float = float("nan")
    ber_per_user: List[float] = field(default_factory=list)

    def to_row(self) -> dict:
        row = asdict(self)
        return {name: row[name] for name in METRICS_COLUMNS}


def per_user_sinr(signal_gain: complex, interference_gains: Sequence[complex],
                  budget: LinkBudget, combiner_norm_sq: float = 1.0) -> float:
    """SINR of one user from its composite signal and interference gains"""
    if budget.noise_power <= 0:
        raise ArgumentError("Noise power must be positive")
    interference = sum(abs(g) ** 2 for g in interference_gains)
    denominator = budget.rho * interference + combiner_norm_sq * budget.noise_power
    return float(budget.rho * abs(signal_gain) ** 2 / denominator)


def sinr_from_gains(gains: np.ndarray, budget: LinkBudget,
                    combiner_norms_sq: Sequence[float] = None) -> np.ndarray:
    """Per-user SINR from the K x K composite gain matrix w_k^H H_k F[:, m]"""
    K = gains.shape[0]
    if gains.shape != (K, K):
        raise DimensionError(f"Composite gain matrix must be square, got {gains.shape}")
    norms = np.ones(K) if combiner_norms_sq is None else np.asarray(combiner_norms_sq, dtype=float)
    return np.array([
        per_user_sinr(gains[k, k], np.delete(gains[k], k), budget, norms[k])
        for k in range(K)
    ])


def spectral_efficiency_instant(sinr_values: Sequence[float]) -> float:
    """Sum of log2(1 + SINR_k)"""
    sinr = np.asarray(sinr_values, dtype=float)
    if np.any(sinr < 0):
        raise ArgumentError("SINR values must be non-negative")
    return float(np.sum(np.log2(1.0 + sinr)))


def spectral_efficiency_logdet(gains: np.ndarray, rho: float, noise_power: float) -> float:
    """log2 det(I + rho/N_o G G^H)"""
    K = gains.shape[0]
    matrix = np.eye(K) + (rho / noise_power) * gains @ gains.conj().T
    _, logdet = np.linalg.slogdet(matrix)
    return float(logdet * LOG2_E)


def _coding_gain(M: int, N_r: int, K: int, L: int) -> float:
    return M * N_r * (K - 1) / (L * K ** 2)


def se_bound_eq13(path_gains: Sequence[Sequence[float]], M: int, N_r: int, K: int, L: int,
                  snr: float) -> float:
    """Sum over users and paths of log2(1 + snr M N_r (K-1) |alpha|^2 / (L K^2))"""
    if K < 1:
        raise ArgumentError(f"K must be at least 1, got {K}")
    total = 0.0
    for user_gains in path_gains:
        g = np.asarray(user_gains, dtype=float)
        total += float(np.sum(np.log2(1.0 + snr * _coding_gain(M, N_r, K, L) * g)))
    return total


def se_low_snr_eq14(M: int, N_r: int, K: int, snr: float) -> float:
    """Low-SNR per-user rate (M N_r / K^2)(K - 1) snr log2(e)"""
    return float(M * N_r / K ** 2 * (K - 1) * snr * LOG2_E)


def se_massive_mimo_eq16(M: int, N_r: int, snr: float) -> float:
    """Per-user rate log2(1 + snr M N_r) when channel rows are orthogonal"""
    return float(np.log2(1.0 + snr * M * N_r))


def effective_snr_gamma(path_gains_k: Sequence[float], M: int, N_r: int, K: int, L: int,
                        snr: float) -> float:
    """Effective SNR of one user"""
    gains = np.asarray(path_gains_k, dtype=float)
    if gains.size == 0:
        raise ArgumentError("Path gain list is empty")
    if gains.size != L:
        raise DimensionError(f"Expected {L} path gains, got {gains.size}")
    return float(np.sum(snr * M * N_r * (K - 1) * gains / (L * K ** 2)))


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2"""
    value = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def ber_bound_eq18(M: int, N_r: int, K: int, L: int, snr: float) -> float:
    """High-SNR average BER bound (snr r)^(-L), diversity L and coding gain r"""
    r = _coding_gain(M, N_r, K, L)
    if K < 2 or snr * r <= 0:
        logger.warning(f"BER bound degenerate for K={K}, snr={snr}: (K-1) factor vanishes")
        return float("inf")
    return float((snr * r) ** (-L))
