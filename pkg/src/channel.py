"""
Channel Module
Random path generation and per-carrier mmWave channel matrices
"""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence

import numpy as np

from src.arrays import ArrayGeometry, ArrayKind, CarrierPlan, steering_vector
from src.errors import ArgumentError, ConfigurationError, DimensionError, GeometryError

logger = logging.getLogger(__name__)


class PathGainModel(Enum):
    RAYLEIGH = "rayleigh"  # CN(0, 1)
    LOS = "los"            # unit modulus, uniform phase


@dataclass(frozen=True)
class UserPaths:
    """Propagation paths of one user"""
    gains: np.ndarray          # complex alpha_{k,l}
    aod_azimuth: np.ndarray    # radians
    aod_elevation: np.ndarray  # radians, zero for ULA
    aoa: np.ndarray            # radians

    def __post_init__(self):
        if self.gains.size < 1:
            raise ArgumentError("Every user needs at least one path")
        sizes = {a.size for a in (self.gains, self.aod_azimuth, self.aod_elevation, self.aoa)}
        if len(sizes) != 1:
            raise DimensionError("Path attribute arrays differ in length")

    @property
    def count(self) -> int:
        return int(self.gains.size)

    @property
    def strongest(self) -> int:
        """Index of the path with the largest |alpha|"""
        return int(np.argmax(np.abs(self.gains)))


@dataclass(frozen=True)
class PathSet:
    """Per-user path sets of one channel draw"""
    users: List[UserPaths]
    geometry_kind: ArrayKind

    @property
    def K(self) -> int:
        return len(self.users)

    def power_gains(self) -> List[np.ndarray]:
        """|alpha_{k,l}|^2 per user"""
        return [np.abs(u.gains) ** 2 for u in self.users]


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user, per-carrier channel matrices, shape (K, N_r, N, M)"""
    matrices: np.ndarray
    paths: PathSet

    @property
    def shape(self):
        return self.matrices.shape

    def stacked(self, carrier: int = 0) -> np.ndarray:
        """K x M matrix of single-antenna users on one carrier"""
        if self.matrices.shape[2] != 1:
            raise DimensionError("Stacking needs single-antenna users (N = 1)")
        return self.matrices[:, carrier, 0, :]


def sample_paths(rng: np.random.Generator, K: int, L: int, geometry_kind: ArrayKind,
                 gain_model: PathGainModel = PathGainModel.RAYLEIGH) -> PathSet:
    """Draw path gains and uniform angles for K users with L paths each

    RAYLEIGH gains are CN(0, 1); LOS gains have |alpha| = 1 and a uniform phase.
    """
    if K < 1 or L < 1:
        raise ArgumentError(f"K and L must be at least 1, got K={K}, L={L}")

    if gain_model == PathGainModel.LOS:
        gains = np.exp(1j * rng.uniform(0.0, 2 * np.pi, (K, L)))
    else:
        gains = (rng.normal(0.0, np.sqrt(0.5), (K, L))
                 + 1j * rng.normal(0.0, np.sqrt(0.5), (K, L)))
    azimuth = rng.uniform(0.0, 2 * np.pi, (K, L))
    if geometry_kind == ArrayKind.USPA:
        elevation = rng.uniform(-np.pi / 2, np.pi / 2, (K, L))
    else:
        elevation = np.zeros((K, L))
    aoa = rng.uniform(0.0, 2 * np.pi, (K, L))

    users = [
        UserPaths(gains=gains[k], aod_azimuth=azimuth[k], aod_elevation=elevation[k], aoa=aoa[k])
        for k in range(K)
    ]
    return PathSet(users=users, geometry_kind=geometry_kind)


def _user_channel(user: UserPaths, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry,
                  wavelength: float) -> np.ndarray:
    if rx_geom.kind != ArrayKind.ULA:
        raise GeometryError("Receive arrays are modelled as ULAs")
    H = np.zeros((rx_geom.M, tx_geom.M), dtype=complex)
    for l in range(user.count):
        a_t = steering_vector(tx_geom, wavelength, user.aod_azimuth[l], user.aod_elevation[l])
        a_r = steering_vector(rx_geom, wavelength, user.aoa[l])
        H += user.gains[l] * np.outer(a_r, a_t.conj())
    return np.sqrt(tx_geom.M * rx_geom.M / user.count) * H


def geometric_channel(paths: PathSet, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry,
                      wavelength: float) -> List[np.ndarray]:
    """Per-user N x M geometric channel on one carrier wavelength"""
    if paths.geometry_kind != tx_geom.kind:
        raise DimensionError(
            f"Paths were drawn for {paths.geometry_kind.value}, transmitter is {tx_geom.kind.value}"
        )
    return [_user_channel(user, tx_geom, rx_geom, wavelength) for user in paths.users]


def sv_single_cluster_channel(paths: PathSet, tx_geom: ArrayGeometry, wavelength: float,
                              N: int = 1) -> List[np.ndarray]:
    """Single-cluster Saleh-Valenzuela rows for single-antenna users of a USPA"""
    if N != 1:
        raise ConfigurationError(f"Single-cluster channel supports N = 1 only, got N = {N}")
    if tx_geom.kind != ArrayKind.USPA:
        raise GeometryError("Single-cluster channel needs a USPA transmitter")
    rx_geom = ArrayGeometry(kind=ArrayKind.ULA, M=1, d=wavelength / 2)
    return geometric_channel(paths, tx_geom, rx_geom, wavelength)


def carrier_channels(paths: PathSet, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry,
                     plan: CarrierPlan) -> ChannelRealization:
    """Channel matrices for every user and carrier from one shared path set"""
    matrices = np.zeros((paths.K, plan.n_r, rx_geom.M, tx_geom.M), dtype=complex)
    cache = {}
    for n, lam in enumerate(plan.wavelengths):
        if lam not in cache:
            if tx_geom.kind == ArrayKind.USPA and rx_geom.M == 1:
                cache[lam] = sv_single_cluster_channel(paths, tx_geom, lam)
            else:
                cache[lam] = geometric_channel(paths, tx_geom, rx_geom, lam)
        for k, H in enumerate(cache[lam]):
            matrices[k, n] = H
    return ChannelRealization(matrices=matrices, paths=paths)


def orthogonality_defect(H_stack: np.ndarray) -> float:
    """Frobenius distance of H H^H / M from the identity"""
    H_stack = np.atleast_2d(H_stack)
    K, M = H_stack.shape
    if K > M:
        raise DimensionError(f"Orthogonality defect needs K <= M, got K={K}, M={M}")
    gram = H_stack @ H_stack.conj().T / M
    return float(np.linalg.norm(gram - np.eye(K), "fro"))


def angular_orthogonality_defect(H_stack: np.ndarray) -> float:
    """Orthogonality defect after rescaling every row to norm sqrt(M)

    Removes the |alpha|^2 spread on the diagonal so only the overlap of the
    users' spatial signatures remains.
    """
    H_stack = np.atleast_2d(H_stack)
    norms = np.linalg.norm(H_stack, axis=1)
    if np.any(norms == 0):
        raise ArgumentError("Channel row with zero norm has no spatial signature")
    return orthogonality_defect(H_stack / norms[:, np.newaxis] * np.sqrt(H_stack.shape[1]))


def paths_to_dict(paths: PathSet) -> dict:
    return {
        "geometry_kind": paths.geometry_kind.value,
        "users": [
            {
                "paths": [
                    {
                        "re": float(u.gains[l].real),
                        "im": float(u.gains[l].imag),
                        "aod_az": float(u.aod_azimuth[l]),
                        "aod_el": float(u.aod_elevation[l]),
                        "aoa": float(u.aoa[l]),
                    }
                    for l in range(u.count)
                ]
            }
            for u in paths.users
        ],
    }


def paths_from_dict(data: dict) -> PathSet:
    users = []
    for user in data["users"]:
        entries: Sequence[dict] = user["paths"]
        users.append(UserPaths(
            gains=np.array([complex(p["re"], p["im"]) for p in entries]),
            aod_azimuth=np.array([p["aod_az"] for p in entries], dtype=float),
            aod_elevation=np.array([p.get("aod_el", 0.0) for p in entries], dtype=float),
            aoa=np.array([p["aoa"] for p in entries], dtype=float),
        ))
    return PathSet(users=users, geometry_kind=ArrayKind(data.get("geometry_kind", "ULA")))


def dump_paths(paths: PathSet, file_path: str) -> None:
    """Write a path set as a JSON regression fixture"""
    Path(file_path).write_text(json.dumps(paths_to_dict(paths), indent=2), encoding="utf-8")
    logger.info(f"Path set with {paths.K} users written to {file_path}")


def load_paths(file_path: str) -> PathSet:
    """Read a path set written by dump_paths"""
    return paths_from_dict(json.loads(Path(file_path).read_text(encoding="utf-8")))
