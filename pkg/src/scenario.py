"""
Scenario Module
Scenario files, figure presets, CSV and manifest emission for the batch front-end
"""
import json
import logging
import os
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.constants import c

from config import (
    ARTIFACT_VERSION,
    CSV_FLOAT_FORMAT,
    DEFAULT_BITS_PER_TRIAL,
    DEFAULT_SEED,
    DEFAULT_SNR_GRID_DB,
    FIG3_ANTENNAS,
    FIG3_SWEEP_STEP_DEG,
    FIG3_WAVELENGTHS,
    FIG4_TRIALS,
    MANIFEST_SUFFIX,
    MASSIVE_MIMO_REALIZATIONS,
    OUTPUT_DIR,
    REFERENCE_FREQUENCY_HZ,
)
from src.arrays import ArrayGeometry, ArrayKind, CarrierPlan, beam_pattern_sweep
from src.channel import PathGainModel
from src.errors import (
    ScenarioFileError,
    ScenarioValidationError,
    SimulationError,
    UsageError,
)
from src.metrics import METRICS_COLUMNS, MetricsRecord
from src.montecarlo import (
    BeamformerKind,
    ScenarioConfig,
    run_massive_mimo_study,
    run_paired_sweep,
    run_sweep,
)
from src.precoding import PrecoderKind

logger = logging.getLogger(__name__)

PRESET_NAMES = ["fig3", "fig4-se", "fig4-ber", "massive-mimo"]

CONFIG_KEYS = {
    "M", "N", "K", "N_r", "L", "geometry", "plan", "snr_grid_db", "trials", "seed",
    "precoder", "beamformer", "bits_per_trial", "gain_model",
}
JOB_KEYS = {"preset", "output", "study", "focus_rad"}
GEOMETRY_KEYS = {"kind", "M", "d"}
PLAN_KEYS = {"wavelengths", "xi", "frac_bw"}
REQUIRED_WITHOUT_PRESET = ["M", "K", "N_r", "L", "geometry", "plan"]


class StudyKind(Enum):
    SWEEP = "sweep"
    PAIRED = "paired"
    BEAM_PATTERN = "beam_pattern"
    MASSIVE_MIMO = "massive_mimo"


@dataclass(frozen=True)
class ScenarioJob:
    """A resolved scenario file: configuration plus what to run and where to write"""
    config: ScenarioConfig
    output: str
    study: StudyKind = StudyKind.SWEEP
    preset: Optional[str] = None
    focus_rad: float = 0.0


def _fig4_config(trials: int = FIG4_TRIALS) -> ScenarioConfig:
    wavelength = c / REFERENCE_FREQUENCY_HZ
    return ScenarioConfig(
        M=16, N=1, K=3, N_r=3, L=1,
        geometry=ArrayGeometry(kind=ArrayKind.USPA, M=16, d=wavelength / 2),
        plan=CarrierPlan.single(wavelength, 3),
        snr_grid_db=tuple(DEFAULT_SNR_GRID_DB),
        trials=trials,
        seed=DEFAULT_SEED,
        precoder=PrecoderKind.ZF,
        beamformer=BeamformerKind.ROF_MULTICARRIER,
        bits_per_trial=DEFAULT_BITS_PER_TRIAL,
    )


def preset(name: str) -> ScenarioConfig:
    """Configuration of a named figure preset"""
    return preset_job(name).config


def preset_job(name: str) -> ScenarioJob:
    """Configuration, study kind and default output of a named preset"""
    if name == "fig3":
        config = ScenarioConfig(
            M=FIG3_ANTENNAS, N=1, K=1, N_r=len(FIG3_WAVELENGTHS), L=1,
            geometry=ArrayGeometry(kind=ArrayKind.ULA, M=FIG3_ANTENNAS, d=FIG3_WAVELENGTHS[0] / 2),
            plan=CarrierPlan(wavelengths=list(FIG3_WAVELENGTHS)),
            snr_grid_db=(0.0,), trials=1, seed=DEFAULT_SEED,
        )
        study = StudyKind.BEAM_PATTERN
    elif name in ("fig4-se", "fig4-ber"):
        config = _fig4_config()
        study = StudyKind.PAIRED
    elif name == "massive-mimo":
        wavelength = c / REFERENCE_FREQUENCY_HZ
        config = ScenarioConfig(
            M=1024, N=1, K=3, N_r=4, L=1,
            geometry=ArrayGeometry(kind=ArrayKind.ULA, M=1024, d=wavelength / 2),
            plan=CarrierPlan.single(wavelength, 4),
            snr_grid_db=(0.0,), trials=MASSIVE_MIMO_REALIZATIONS, seed=DEFAULT_SEED,
            gain_model=PathGainModel.LOS,
        )
        study = StudyKind.MASSIVE_MIMO
    else:
        raise UsageError(f"Unknown preset '{name}'. Known presets: {', '.join(PRESET_NAMES)}")

    output = os.path.join(OUTPUT_DIR, f"{name}.csv")
    logger.debug(f"Preset {name} resolved: study={study.value}, output={output}")
    return ScenarioJob(config=config, output=output, study=study, preset=name)


def validate_scenario_dict(data: dict) -> Tuple[bool, str]:
    """Reject unknown keys and missing required fields"""
    if not isinstance(data, dict):
        return False, "Scenario document must be a JSON object"
    unknown = set(data) - CONFIG_KEYS - JOB_KEYS
    if unknown:
        return False, f"Unknown keys: {', '.join(sorted(unknown))}"
    for key, allowed in (("geometry", GEOMETRY_KEYS), ("plan", PLAN_KEYS)):
        if key in data:
            if not isinstance(data[key], dict):
                return False, f"'{key}' must be an object"
            nested = set(data[key]) - allowed
            if nested:
                return False, f"Unknown keys in '{key}': {', '.join(sorted(nested))}"
    if "preset" not in data:
        missing = [key for key in REQUIRED_WITHOUT_PRESET if key not in data]
        if missing:
            return False, f"Missing required fields without a preset: {', '.join(missing)}"
    return True, "Scenario document valid"


def _geometry_from(data: dict, base: Optional[ArrayGeometry], M: int) -> ArrayGeometry:
    entry = data.get("geometry")
    if entry is None:
        return replace(base, M=M) if base.M != M else base
    if "M" in entry and entry["M"] != M:
        raise ScenarioValidationError(f"geometry.M={entry['M']} differs from M={M}")
    kind = ArrayKind(entry.get("kind", base.kind.value if base else "ULA"))
    d = entry.get("d", base.d if base else None)
    if d is None:
        raise ScenarioValidationError("geometry.d is required")
    return ArrayGeometry(kind=kind, M=M, d=float(d))


def _plan_from(data: dict, base: Optional[CarrierPlan], N_r: int) -> CarrierPlan:
    entry = data.get("plan")
    if entry is None:
        if base.n_r != N_r and len(set(base.wavelengths)) == 1:
            return CarrierPlan.single(base.reference_wavelength, N_r)
        return base
    return CarrierPlan(
        wavelengths=entry["wavelengths"],
        xi=entry.get("xi"),
        frac_bw=entry.get("frac_bw"),
    )


def scenario_from_dict(data: dict) -> ScenarioJob:
    """Resolve a scenario document, with explicit fields overriding the preset"""
    ok, message = validate_scenario_dict(data)
    if not ok:
        raise ScenarioValidationError(message)

    base = preset_job(data["preset"]) if "preset" in data else None
    cfg = base.config if base else None

    def pick(key, default=None):
        if key in data:
            return data[key]
        return getattr(cfg, key) if cfg is not None else default

    try:
        M, N_r = int(pick("M")), int(pick("N_r"))
        config = ScenarioConfig(
            M=M,
            N=int(pick("N", 1)),
            K=int(pick("K")),
            N_r=N_r,
            L=int(pick("L")),
            geometry=_geometry_from(data, cfg.geometry if cfg else None, M),
            plan=_plan_from(data, cfg.plan if cfg else None, N_r),
            snr_grid_db=tuple(pick("snr_grid_db", DEFAULT_SNR_GRID_DB)),
            trials=int(pick("trials", 1000)),
            seed=int(pick("seed", DEFAULT_SEED)),
            precoder=PrecoderKind(data["precoder"]) if "precoder" in data
            else (cfg.precoder if cfg else PrecoderKind.ZF),
            beamformer=BeamformerKind(data["beamformer"]) if "beamformer" in data
            else (cfg.beamformer if cfg else BeamformerKind.ROF_MULTICARRIER),
            bits_per_trial=int(pick("bits_per_trial", DEFAULT_BITS_PER_TRIAL)),
            gain_model=PathGainModel(data["gain_model"]) if "gain_model" in data
            else (cfg.gain_model if cfg else PathGainModel.RAYLEIGH),
        )
        study = StudyKind(data["study"]) if "study" in data else (base.study if base else StudyKind.SWEEP)
        focus_rad = float(data.get("focus_rad", 0.0))
    except ScenarioValidationError:
        raise
    except (SimulationError, ValueError, TypeError, KeyError) as e:
        raise ScenarioValidationError(f"Invalid scenario field: {e}") from e

    ok, message = config.validate()
    if not ok:
        raise ScenarioValidationError(message)

    output = data.get("output", base.output if base else os.path.join(OUTPUT_DIR, "results.csv"))
    return ScenarioJob(config=config, output=output, study=study,
                       preset=data.get("preset"), focus_rad=focus_rad)


def load_scenario(path: str, preset_name: Optional[str] = None) -> ScenarioJob:
    """Read and resolve a scenario file; preset_name replaces the file's preset"""
    file_path = Path(path)
    if not file_path.exists():
        raise ScenarioFileError(f"Scenario file does not exist: {path}")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioValidationError(f"Malformed scenario file {path}: {e}") from e
    except OSError as e:
        raise ScenarioFileError(f"Cannot read scenario file {path}: {e}") from e
    if preset_name is not None and isinstance(data, dict):
        data["preset"] = preset_name
    job = scenario_from_dict(data)
    logger.info(f"Scenario loaded from {path} (preset: {job.preset or 'none'})")
    return job


def parse_scenario(path: str) -> ScenarioConfig:
    """Validated configuration of a scenario file"""
    return load_scenario(path).config


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "M": config.M,
        "N": config.N,
        "K": config.K,
        "N_r": config.N_r,
        "L": config.L,
        "geometry": {"kind": config.geometry.kind.value, "d": config.geometry.d},
        "plan": {
            "wavelengths": list(config.plan.wavelengths),
            "xi": list(config.plan.xi),
            "frac_bw": list(config.plan.frac_bw),
        },
        "snr_grid_db": list(config.snr_grid_db),
        "trials": config.trials,
        "seed": config.seed,
        "precoder": config.precoder.value,
        "beamformer": config.beamformer.value,
        "bits_per_trial": config.bits_per_trial,
        "gain_model": config.gain_model.value,
    }


def dump_scenario(config: ScenarioConfig, path: str, **job_fields) -> None:
    """Write a configuration as a scenario file"""
    data = config_to_dict(config)
    data.update({key: value for key, value in job_fields.items() if value is not None})
    Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")


def build_manifest(config: ScenarioConfig, duration_s: float, singular_trials: int = 0,
                   **extra) -> dict:
    manifest = {
        "artifact_version": ARTIFACT_VERSION,
        "seed": config.seed,
        "config": config_to_dict(config),
        "wall_clock_s": duration_s,
        "singular_trials": singular_trials,
    }
    manifest.update(extra)
    return manifest


def emit_csv(records: Union[Sequence[MetricsRecord], pd.DataFrame], path: str,
             manifest: Optional[dict] = None) -> None:
    """Write metrics records or a sweep table as CSV, with its manifest next to it"""
    if isinstance(records, pd.DataFrame):
        frame = records
    else:
        frame = pd.DataFrame([r.to_row() for r in records], columns=METRICS_COLUMNS)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        manifest_path = f"{path}{MANIFEST_SUFFIX}"
        Path(manifest_path).write_text(
            json.dumps(manifest or {"artifact_version": ARTIFACT_VERSION}, indent=2),
            encoding="utf-8",
        )
    except OSError as e:
        raise ScenarioFileError(f"Cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")


def bounds_table(records: Sequence[MetricsRecord]) -> pd.DataFrame:
    """Analytic overlays and per-user BER that do not belong to the metrics schema"""
    rows = []
    for r in records:
        row = {
            "snr_db": r.snr_db,
            "se_low_snr_eq14_per_user": r.se_low_snr_eq14,
            "se_massive_eq16_per_user": r.se_massive_eq16,
            "ber_bound_eq18": r.ber_bound_eq18,
        }
        for k, ber in enumerate(r.ber_per_user):
            row[f"ber_user_{k}"] = ber
        rows.append(row)
    return pd.DataFrame(rows)


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}{suffix}"))


def fig3_angle_grid(step_deg: float = FIG3_SWEEP_STEP_DEG) -> np.ndarray:
    count = int(round(180.0 / step_deg)) + 1
    return np.deg2rad(np.linspace(-90.0, 90.0, count))


def execute(job: ScenarioJob, workers: int = 1) -> List[str]:
    """Run a resolved job and write its outputs; returns the written CSV paths"""
    config = job.config
    start = time.perf_counter()
    written = []

    if job.study == StudyKind.BEAM_PATTERN:
        table = beam_pattern_sweep(fig3_angle_grid(), job.focus_rad, config.geometry,
                                   config.plan, config.plan.reference_wavelength,
                                   include_bound=True)
        emit_csv(table, job.output, build_manifest(config, time.perf_counter() - start,
                                                   focus_rad=job.focus_rad))
        written.append(job.output)

    elif job.study == StudyKind.MASSIVE_MIMO:
        result = run_massive_mimo_study(config, workers)
        emit_csv(pd.DataFrame([result]), job.output,
                 build_manifest(config, time.perf_counter() - start))
        written.append(job.output)

    elif job.study == StudyKind.PAIRED:
        rof, rf = run_paired_sweep(config, workers)
        duration = time.perf_counter() - start
        for records, path, arm in ((rof, job.output, BeamformerKind.ROF_MULTICARRIER),
                                   (rf, _sibling(job.output, "_rf.csv"), BeamformerKind.RF_SINGLECARRIER)):
            arm_config = replace(config, beamformer=arm)
            singular = sum(r.singular_trials for r in records)
            emit_csv(records, path, build_manifest(arm_config, duration, singular))
            emit_csv(bounds_table(records), _sibling(path, ".bounds.csv"),
                     build_manifest(arm_config, duration, singular))
            written.append(path)

    else:
        records = run_sweep(config, workers)
        duration = time.perf_counter() - start
        singular = sum(r.singular_trials for r in records)
        emit_csv(records, job.output, build_manifest(config, duration, singular))
        emit_csv(bounds_table(records), _sibling(job.output, ".bounds.csv"),
                 build_manifest(config, duration, singular))
        written.append(job.output)

    logger.info(f"Job finished in {time.perf_counter() - start:.2f} s")
    return written


def apply_overrides(job: ScenarioJob, seed: Optional[int] = None, trials: Optional[int] = None,
                    output: Optional[str] = None) -> ScenarioJob:
    """Command-line flags take precedence over the scenario file"""
    config = job.config
    if seed is not None:
        config = replace(config, seed=seed)
    if trials is not None:
        config = replace(config, trials=trials)
    ok, message = config.validate()
    if not ok:
        raise ScenarioValidationError(message)
    return replace(job, config=config, output=output or job.output)


def job_summary(job: ScenarioJob) -> Dict[str, object]:
    c = job.config
    return {"study": job.study.value, "M": c.M, "K": c.K, "N_r": c.N_r, "L": c.L,
            "trials": c.trials, "seed": c.seed, "output": job.output}
