"""
Monte-Carlo Engine
Seeded trials: channel draw, hybrid precoding, BPSK transmission and SNR-grid aggregation
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_BITS_PER_TRIAL, DEFAULT_DIVERSITY_WINDOW_DB
from src.arrays import ArrayGeometry, ArrayKind, CarrierPlan
from src.channel import (
    PathGainModel,
    PathSet,
    angular_orthogonality_defect,
    carrier_channels,
    orthogonality_defect,
    sample_paths,
)
from src.errors import ArgumentError, ConfigurationError, EstimationError, SingularChannelError
from src.metrics import (
    LinkBudget,
    MetricsRecord,
    ber_bound_eq18,
    se_bound_eq13,
    se_low_snr_eq14,
    se_massive_mimo_eq16,
    sinr_from_gains,
    spectral_efficiency_instant,
)
from src.precoding import (
    EffectiveChannel,
    PrecoderKind,
    PrecoderSet,
    build_combiners,
    build_oawg_weights,
    build_photonic_beamformer,
    effective_channel,
    gram_deviation,
    mmse_baseband,
    normalize_total_power,
    zf_baseband,
)

logger = logging.getLogger(__name__)


class BeamformerKind(Enum):
    ROF_MULTICARRIER = "RoF_multicarrier"
    RF_SINGLECARRIER = "RF_singlecarrier"


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a sweep needs; snr is converted to linear once, here"""
    M: int
    N: int
    K: int
    N_r: int
    L: int
    geometry: ArrayGeometry
    plan: CarrierPlan
    snr_grid_db: Tuple[float, ...]
    trials: int
    seed: int
    precoder: PrecoderKind = PrecoderKind.ZF
    beamformer: BeamformerKind = BeamformerKind.ROF_MULTICARRIER
    bits_per_trial: int = DEFAULT_BITS_PER_TRIAL
    gain_model: PathGainModel = PathGainModel.RAYLEIGH
    snr_grid_linear: Tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_grid_db)
        object.__setattr__(self, "snr_grid_db", grid)
        object.__setattr__(self, "snr_grid_linear", tuple(10.0 ** (s / 10.0) for s in grid))

    @property
    def effective_carriers(self) -> int:
        """Carriers contributing to the power gain: N_r for RoF, 1 for RF"""
        return self.N_r if self.beamformer == BeamformerKind.ROF_MULTICARRIER else 1

    def validate(self) -> Tuple[bool, str]:
        """Check the structural constraints, returning (ok, message)"""
        if not self.K <= self.N_r:
            return False, f"K ≤ N_r violated: K={self.K}, N_r={self.N_r}"
        if not self.N_r <= self.M:
            return False, f"N_r ≤ M violated: N_r={self.N_r}, M={self.M}"
        if self.K < 1 or self.L < 1:
            return False, f"K and L must be at least 1, got K={self.K}, L={self.L}"
        if self.N != 1:
            return False, f"N must be 1 for BER experiments, got N={self.N}"
        if self.geometry.M != self.M:
            return False, f"geometry.M={self.geometry.M} differs from M={self.M}"
        if self.plan.n_r != self.N_r:
            return False, f"Carrier plan has {self.plan.n_r} wavelengths, N_r={self.N_r}"
        if self.trials < 1:
            return False, f"trials must be at least 1, got {self.trials}"
        if not self.snr_grid_db:
            return False, "snr_grid_db is empty"
        if self.bits_per_trial < 1:
            return False, f"bits_per_trial must be at least 1, got {self.bits_per_trial}"
        if not 0 <= self.seed < 2 ** 64:
            return False, f"seed must be a 64-bit unsigned integer, got {self.seed}"
        return True, "Scenario valid"

    def check(self) -> None:
        ok, message = self.validate()
        if not ok:
            raise ConfigurationError(message)


@dataclass
class TrialOutcome:
    """Result of one channel draw at one SNR point"""
    se: float
    bit_errors: int
    bits: int
    sinr: List[float]
    singular: bool = False
    user_errors: List[int] = field(default_factory=list)
    path_gains: List[np.ndarray] = field(default_factory=list)


@dataclass
class _Link:
    paths: PathSet
    f_rof: np.ndarray
    f_oawg: np.ndarray
    combiners: List[np.ndarray]
    h_p: EffectiveChannel


def rng_substream(seed: int, trial_index: int) -> np.random.Generator:
    """Independent counter-based stream for one trial"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial_index])))


def arm_plan(config: ScenarioConfig) -> CarrierPlan:
    """Carrier plan of the configured beamformer arm"""
    if config.beamformer == BeamformerKind.ROF_MULTICARRIER:
        return config.plan
    return CarrierPlan.single(config.plan.reference_wavelength, config.N_r)


def _receive_geometry(config: ScenarioConfig, plan: CarrierPlan) -> ArrayGeometry:
    return ArrayGeometry(kind=ArrayKind.ULA, M=config.N, d=plan.reference_wavelength / 2)


def _prepare_link(config: ScenarioConfig, stream: np.random.Generator) -> _Link:
    paths = sample_paths(stream, config.K, config.L, config.geometry.kind, config.gain_model)
    plan = arm_plan(config)
    rx_geom = _receive_geometry(config, plan)
    channels = carrier_channels(paths, config.geometry, rx_geom, plan)

    f_rof = build_photonic_beamformer(paths, config.geometry, plan)
    if config.beamformer == BeamformerKind.ROF_MULTICARRIER:
        f_oawg = build_oawg_weights(config.N_r, config.K, f_rof)
    else:
        # No OAWG stage in the RF arm
        f_oawg = np.ones(config.N_r, dtype=complex)
    combiners = build_combiners(paths, rx_geom, plan.reference_wavelength)
    h_p = effective_channel(channels.matrices, combiners, f_rof, f_oawg)
    return _Link(paths=paths, f_rof=f_rof, f_oawg=f_oawg, combiners=combiners, h_p=h_p)


def bpsk_link(gains: np.ndarray, budget: LinkBudget, bits_per_user: int,
              stream: np.random.Generator) -> np.ndarray:
    """Send BPSK through the K x K composite gains; return bit errors per user

    Detection phase-aligns by the known composite gain and takes the sign of the real part.
    """
    K = gains.shape[0]
    bits = stream.integers(0, 2, size=(K, bits_per_user))
    symbols = 1.0 - 2.0 * bits
    noise = (stream.standard_normal((K, bits_per_user))
             + 1j * stream.standard_normal((K, bits_per_user))) * np.sqrt(budget.noise_power / 2)
    received = np.sqrt(budget.rho) * gains @ symbols + noise
    aligned = np.conj(np.diag(gains))[:, np.newaxis] * received
    decided = (aligned.real < 0).astype(int)
    return np.sum(decided != bits, axis=1)


def _transmit(config: ScenarioConfig, link: _Link, snr: float,
              stream: np.random.Generator) -> TrialOutcome:
    K = config.K
    path_gains = link.paths.power_gains()
    try:
        if config.precoder == PrecoderKind.ZF:
            f_bb = zf_baseband(link.h_p)
        else:
            f_bb = mmse_baseband(link.h_p, snr, 1.0)
    except SingularChannelError as e:
        logger.debug(f"Singular trial: {e}")
        return TrialOutcome(se=0.0, bit_errors=0, bits=0, sinr=[0.0] * K, singular=True,
                            user_errors=[0] * K, path_gains=path_gains)

    precoder = normalize_total_power(PrecoderSet(
        f_rof=link.f_rof, f_oawg=link.f_oawg, f_bb=f_bb, combiners=link.combiners,
        sigma=float(config.N_r), power_carriers=config.effective_carriers,
    ))
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(f"F_BB Gram deviation from sigma I: "
                     f"{gram_deviation(precoder.f_bb, precoder.sigma):.3e}")

    gains = link.h_p.h_p @ precoder.f_bb
    budget = LinkBudget.from_snr(snr, K)
    norms_sq = [float(np.vdot(w, w).real) for w in link.combiners]
    sinr = sinr_from_gains(gains, budget, norms_sq)
    user_errors = bpsk_link(gains, budget, config.bits_per_trial, stream)
    return TrialOutcome(
        se=spectral_efficiency_instant(sinr),
        bit_errors=int(user_errors.sum()),
        bits=K * config.bits_per_trial,
        sinr=[float(s) for s in sinr],
        user_errors=[int(e) for e in user_errors],
        path_gains=path_gains,
    )


def run_trial(config: ScenarioConfig, stream: np.random.Generator,
              snr_db: Optional[float] = None) -> TrialOutcome:
    """Full pipeline for one channel draw at one SNR point (default: first grid point)"""
    snr_db = config.snr_grid_db[0] if snr_db is None else float(snr_db)
    link = _prepare_link(config, stream)
    return _transmit(config, link, 10.0 ** (snr_db / 10.0), stream)


def _run_block(config: ScenarioConfig, start: int, stop: int) -> Dict[str, np.ndarray]:
    """Trials start..stop-1 at every SNR point, each trial reusing its stream per point"""
    T, S, K = stop - start, len(config.snr_grid_db), config.K
    block = {
        "se": np.zeros((T, S)),
        "errors": np.zeros((T, S), dtype=np.int64),
        "bits": np.zeros((T, S), dtype=np.int64),
        "user_errors": np.zeros((T, S, K), dtype=np.int64),
        "sinr": np.zeros((T, S, K)),
        "singular": np.zeros((T, S), dtype=bool),
        "eq13": np.zeros((T, S)),
    }
    n_eff = config.effective_carriers
    for i, t in enumerate(range(start, stop)):
        stream = rng_substream(config.seed, t)
        link = _prepare_link(config, stream)
        state = stream.bit_generator.state
        for s, snr in enumerate(config.snr_grid_linear):
            stream.bit_generator.state = state
            outcome = _transmit(config, link, snr, stream)
            block["se"][i, s] = outcome.se
            block["errors"][i, s] = outcome.bit_errors
            block["bits"][i, s] = outcome.bits
            block["user_errors"][i, s] = outcome.user_errors
            block["sinr"][i, s] = outcome.sinr
            block["singular"][i, s] = outcome.singular
            block["eq13"][i, s] = se_bound_eq13(outcome.path_gains, config.M, n_eff,
                                                config.K, config.L, snr)
    return block


def _chunks(trials: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, math.ceil(trials / (workers * 4)))
    return [(start, min(start + size, trials)) for start in range(0, trials, size)]


def _collect(config: ScenarioConfig, workers: int) -> Dict[str, np.ndarray]:
    if workers <= 1:
        return _run_block(config, 0, config.trials)
    spans = _chunks(config.trials, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so blocks concatenate in trial-index order
        blocks = list(pool.map(_run_block, [config] * len(spans),
                               [a for a, _ in spans], [b for _, b in spans]))
    return {key: np.concatenate([b[key] for b in blocks], axis=0) for key in blocks[0]}


def _aggregate(config: ScenarioConfig, s: int, data: Dict[str, np.ndarray]) -> MetricsRecord:
    snr_db, snr = config.snr_grid_db[s], config.snr_grid_linear[s]
    valid = ~data["singular"][:, s]
    n = int(valid.sum())
    n_eff = config.effective_carriers

    if n == 0:
        logger.warning(f"All {config.trials} trials singular at {snr_db} dB")
        se_mean, se_stderr, ber, ber_stderr = 0.0, 0.0, 0.5, 0.0
        sinr_mean, ber_users, eq13 = [0.0] * config.K, [0.5] * config.K, 0.0
    else:
        se_values = data["se"][valid, s]
        se_mean = math.fsum(se_values) / n
        se_stderr = float(np.std(se_values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        total_bits = int(data["bits"][valid, s].sum())
        ber = int(data["errors"][valid, s].sum()) / total_bits
        ber_stderr = math.sqrt(ber * (1.0 - ber) / total_bits)
        sinr_mean = [math.fsum(data["sinr"][valid, s, k]) / n for k in range(config.K)]
        ber_users = [int(data["user_errors"][valid, s, k].sum()) / (n * config.bits_per_trial)
                     for k in range(config.K)]
        eq13 = math.fsum(data["eq13"][valid, s]) / n

    return MetricsRecord(
        snr_db=snr_db,
        se_mean=se_mean,
        se_stderr=se_stderr,
        ber_mean=ber,
        ber_stderr=ber_stderr,
        sinr_per_user=sinr_mean,
        se_bound_eq13=eq13,
        ber_bound_eq18=ber_bound_eq18(config.M, n_eff, config.K, config.L, snr),
        trials=config.trials,
        singular_trials=config.trials - n,
        se_low_snr_eq14=se_low_snr_eq14(config.M, n_eff, config.K, snr),
        se_massive_eq16=se_massive_mimo_eq16(config.M, n_eff, snr),
        ber_per_user=ber_users,
    )


def run_sweep(config: ScenarioConfig, workers: int = 1) -> List[MetricsRecord]:
    """Aggregate config.trials independent trials at every SNR grid point"""
    config.check()
    logger.info(
        f"Sweep: {config.beamformer.value}, {config.precoder.value}, M={config.M}, K={config.K}, "
        f"N_r={config.N_r}, L={config.L}, {config.trials} trials x {len(config.snr_grid_db)} SNR points"
    )
    data = _collect(config, workers)
    records = []
    for s in range(len(config.snr_grid_db)):
        record = _aggregate(config, s, data)
        logger.info(f"  {record.snr_db:6.2f} dB: SE={record.se_mean:.4f} bits/s/Hz, "
                    f"BER={record.ber_mean:.3e}, singular={record.singular_trials}")
        records.append(record)
    return records


def run_paired_sweep(config: ScenarioConfig,
                     workers: int = 1) -> Tuple[List[MetricsRecord], List[MetricsRecord]]:
    """RoF and RF arms on the same seed, so both see the same channel draws"""
    rof = run_sweep(replace(config, beamformer=BeamformerKind.ROF_MULTICARRIER), workers)
    rf = run_sweep(replace(config, beamformer=BeamformerKind.RF_SINGLECARRIER), workers)
    return rof, rf


def diversity_slope(records: Sequence[MetricsRecord],
                    high_snr_window_db: Tuple[float, float] = DEFAULT_DIVERSITY_WINDOW_DB) -> float:
    """Negated least-squares slope of log10(BER) against snr_db / 10"""
    low, high = high_snr_window_db
    points = [(r.snr_db / 10.0, math.log10(r.ber_mean))
              for r in records if low <= r.snr_db <= high and r.ber_mean > 0]
    if len(points) < 2:
        raise EstimationError(
            f"Need at least 2 records with BER > 0 in [{low}, {high}] dB, got {len(points)}"
        )
    x, y = np.array(points).T
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def run_massive_mimo_study(config: ScenarioConfig, workers: int = 1) -> Dict[str, float]:
    """Orthogonality defect and simulated per-user SE against the M -> infinity rate"""
    config.check()
    if config.N != 1:
        raise ArgumentError("Massive-MIMO study needs single-antenna users")
    plan = arm_plan(config)
    rx_geom = _receive_geometry(config, plan)

    defects, angular = [], []
    for t in range(config.trials):
        paths = sample_paths(rng_substream(config.seed, t), config.K, config.L,
                             config.geometry.kind, config.gain_model)
        H = carrier_channels(paths, config.geometry, rx_geom, plan).stacked(0)
        defects.append(orthogonality_defect(H))
        angular.append(angular_orthogonality_defect(H))

    record = run_sweep(config, workers)[0]
    snr = config.snr_grid_linear[0]
    result = {
        "snr_db": config.snr_grid_db[0],
        "realizations": config.trials,
        "mean_orthogonality_defect": math.fsum(defects) / len(defects),
        "mean_angular_defect": math.fsum(angular) / len(angular),
        "se_per_user_sim": record.se_mean / config.K,
        "se_per_user_eq16": se_massive_mimo_eq16(config.M, config.effective_carriers, snr),
    }
    logger.info(f"Massive MIMO: defect={result['mean_orthogonality_defect']:.4f}, "
                f"SE/user sim={result['se_per_user_sim']:.3f} vs {result['se_per_user_eq16']:.3f}")
    return result
