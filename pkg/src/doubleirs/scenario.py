"""Scenario description: arrays, per-link fading and angles, powers.

Internal units are watts, linear power ratios, radians and meters.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

# link -> (transmitting node, receiving node); 'U' is the single-antenna user
LINK_NODES = {
    "S1": ("S", "1"),
    "S2": ("S", "2"),
    "12": ("1", "2"),
    "SU": ("S", "U"),
    "1U": ("1", "U"),
    "2U": ("2", "U"),
    "S0": ("S", "0"),
    "0U": ("0", "U"),
}
DOUBLE_LINKS = ("S1", "S2", "12", "SU", "1U", "2U")
SINGLE_LINKS = ("S0", "0U")


class Regime(str, Enum):
    FINITE = "finite"
    PURE_LOS = "pure_los"
    PURE_NLOS = "pure_nlos"


@dataclass(frozen=True)
class ArraySpec:
    """Uniform rectangular array with ``rows`` x ``cols`` elements."""

    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise ValueError(f"array dimensions must be integers, got {self.rows}x{self.cols}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array dimensions must be >= 1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @classmethod
    def with_size(cls, total: int) -> "ArraySpec":
        """Most nearly square factorization ``rows <= cols`` of ``total``."""
        total = int(total)
        if total < 1:
            raise ValueError(f"array size must be >= 1, got {total}")
        rows = int(math.isqrt(total))
        while total % rows:
            rows -= 1
        return cls(rows, total // rows)


@dataclass(frozen=True)
class LinkAngles:
    """Azimuth/elevation angles of arrival and departure, in radians."""

    aoa_h: float = 0.0
    aoa_v: float = 0.0
    aod_h: float = 0.0
    aod_v: float = 0.0

    def __post_init__(self):
        for name in ("aoa_h", "aoa_v", "aod_h", "aod_v"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"angle {name} must be finite")


@dataclass(frozen=True)
class LinkFading:
    """Large-scale power and Rician factor of one link.

    ``alpha`` may be zero, which switches the link off entirely (used to
    reduce the cooperative system to the non-cooperative one).
    """

    alpha: float
    k: float = 0.0
    regime: Regime = Regime.FINITE

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValueError(f"Rician factor must be finite and >= 0, got {self.k}")
        if self.regime is not Regime.FINITE and self.k != 0.0:
            raise ValueError("a pure_los/pure_nlos link cannot also carry a finite Rician factor")

    @property
    def los_power(self) -> float:
        if self.regime is Regime.PURE_LOS:
            return self.alpha
        if self.regime is Regime.PURE_NLOS:
            return 0.0
        return self.k * self.alpha / (self.k + 1.0)

    @property
    def nlos_power(self) -> float:
        if self.regime is Regime.PURE_LOS:
            return 0.0
        if self.regime is Regime.PURE_NLOS:
            return self.alpha
        return self.alpha / (self.k + 1.0)

    @property
    def has_los(self) -> bool:
        """Whether the Rician factor is positive (infinite counts)."""
        return self.regime is Regime.PURE_LOS or (self.regime is Regime.FINITE and self.k > 0)


@dataclass(frozen=True)
class ScenarioConfig:
    arrays: Mapping[str, ArraySpec]
    fading: Mapping[str, LinkFading]
    angles: Mapping[str, LinkAngles]
    d_over_lambda: float = 0.5
    transmit_power: float = 10 ** (5 / 10) * 1e-3
    noise_power: float = 10 ** (-104 / 10) * 1e-3
    positions: Mapping[str, tuple] = field(default_factory=dict)
    exponents: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.d_over_lambda <= 0.5):
            raise ValueError(f"d_over_lambda must lie in (0, 0.5], got {self.d_over_lambda}")
        if not (self.transmit_power > 0 and self.noise_power > 0):
            raise ValueError("transmit and noise powers must be > 0")
        for node in ("S",):
            if node not in self.arrays:
                raise ValueError(f"missing array for node {node!r}")
        for link in self.fading:
            if link not in LINK_NODES:
                raise ValueError(f"unknown link {link!r}")
            for node in LINK_NODES[link]:
                if node != "U" and node not in self.arrays:
                    raise ValueError(f"link {link!r} needs an array for node {node!r}")

    def size(self, node: str) -> int:
        return 1 if node == "U" else self.arrays[node].size

    @property
    def snr_scale(self) -> float:
        return self.transmit_power / self.noise_power

    @property
    def has_double(self) -> bool:
        return all(link in self.fading for link in DOUBLE_LINKS)

    @property
    def has_single(self) -> bool:
        return all(link in self.fading for link in SINGLE_LINKS + ("SU",))

    def regime(self, links=DOUBLE_LINKS) -> Regime:
        """Pure regime iff every listed link carries that flag."""
        regimes = {self.fading[link].regime for link in links}
        if regimes == {Regime.PURE_LOS}:
            return Regime.PURE_LOS
        if regimes == {Regime.PURE_NLOS}:
            return Regime.PURE_NLOS
        return Regime.FINITE

    def angles_of(self, link: str) -> LinkAngles:
        return self.angles.get(link, LinkAngles())

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_fading(self, **links: LinkFading) -> "ScenarioConfig":
        fading = dict(self.fading)
        fading.update(links)
        return self.replace(fading=fading)

    def with_regime(self, regime: Regime | str, links=None) -> "ScenarioConfig":
        """Copy with every listed link forced to ``regime`` (alpha kept)."""
        regime = Regime(regime)
        links = self.fading.keys() if links is None else links
        fading = dict(self.fading)
        for link in links:
            f = fading[link]
            if regime is Regime.FINITE:
                raise ValueError("with_regime expects pure_los or pure_nlos")
            fading[link] = LinkFading(f.alpha, 0.0, regime)
        return self.replace(fading=fading)

    def with_rician_factor(self, k: float, links=None) -> "ScenarioConfig":
        links = self.fading.keys() if links is None else links
        fading = dict(self.fading)
        for link in links:
            fading[link] = LinkFading(fading[link].alpha, k, Regime.FINITE)
        return self.replace(fading=fading)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0) * 1e-3


def node_distance(positions: Mapping[str, tuple], link: str) -> float:
    a, b = LINK_NODES[link]
    return float(np.linalg.norm(np.subtract(positions[b], positions[a], dtype=float)))


def _array_frame(positions: Mapping[str, tuple], node: str):
    """Local frame of a vertical URA at ``node`` whose normal points horizontally
    towards the centroid of all other nodes. Rows run along z."""
    p = np.asarray(positions[node], dtype=float)
    others = [np.asarray(q, dtype=float) for k, q in positions.items() if k != node]
    target = np.mean(others, axis=0) - p
    target[2] = 0.0
    nrm = np.linalg.norm(target)
    normal = np.array([1.0, 0.0, 0.0]) if nrm == 0 else target / nrm
    e_rows = np.array([0.0, 0.0, 1.0])
    e_cols = np.cross(e_rows, normal)
    return e_rows, e_cols, normal


def direction_angles(positions: Mapping[str, tuple], node: str, towards: str) -> tuple[float, float]:
    """(azimuth, elevation) of the direction ``node -> towards`` in the URA frame of ``node``.

    Elevation is measured from the array normal and azimuth within the array
    plane from the row axis, so that ``sin(v) cos(h)`` and ``sin(v) sin(h)`` are
    the direction cosines along rows and columns.
    """
    e_rows, e_cols, normal = _array_frame(positions, node)
    u = np.subtract(positions[towards], positions[node], dtype=float)
    u /= np.linalg.norm(u)
    v = math.acos(max(-1.0, min(1.0, float(u @ normal))))
    h = math.atan2(float(u @ e_cols), float(u @ e_rows)) % (2 * math.pi)
    return h, v


def derived_link_angles(positions: Mapping[str, tuple], link: str) -> LinkAngles:
    a, b = LINK_NODES[link]
    aod_h, aod_v = direction_angles(positions, a, b)
    if b == "U":
        return LinkAngles(0.0, 0.0, aod_h, aod_v)
    aoa_h, aoa_v = direction_angles(positions, b, a)
    return LinkAngles(aoa_h, aoa_v, aod_h, aod_v)


TWO_PI = 2.0 * math.pi


def _check_phases(name: str, phi) -> np.ndarray | None:
    if phi is None:
        return None
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if not np.all(np.isfinite(phi)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(phi < 0) or np.any(phi >= TWO_PI):
        raise ValueError(f"{name} entries must lie in [0, 2*pi)")
    phi.setflags(write=False)
    return phi


@dataclass(frozen=True)
class PhaseShifts:
    """Reflection phases of IRS 1 and 2 (or of the lone IRS 0), radians in [0, 2*pi).

    The reflection coefficient of element t is ``exp(-1j * phi[t])``.
    """

    phi1: np.ndarray | None = None
    phi2: np.ndarray | None = None
    phi0: np.ndarray | None = None

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi0"):
            object.__setattr__(self, name, _check_phases(name, getattr(self, name)))

    @classmethod
    def zeros(cls, cfg: ScenarioConfig) -> "PhaseShifts":
        if cfg.has_double:
            return cls(np.zeros(cfg.size("1")), np.zeros(cfg.size("2")))
        return cls(phi0=np.zeros(cfg.size("0")))

    @classmethod
    def random(cls, cfg: ScenarioConfig, rng: np.random.Generator) -> "PhaseShifts":
        if cfg.has_double:
            phi1 = rng.uniform(0.0, TWO_PI, cfg.size("1"))
            phi2 = rng.uniform(0.0, TWO_PI, cfg.size("2"))
            return cls(phi1 % TWO_PI, phi2 % TWO_PI)
        return cls(phi0=rng.uniform(0.0, TWO_PI, cfg.size("0")) % TWO_PI)

    @property
    def v1(self) -> np.ndarray:
        return np.exp(-1j * self.phi1)

    @property
    def v2(self) -> np.ndarray:
        return np.exp(-1j * self.phi2)

    @property
    def v0(self) -> np.ndarray:
        return np.exp(-1j * self.phi0)

    def to_dict(self) -> dict:
        out = {}
        for name in ("phi1", "phi2", "phi0"):
            phi = getattr(self, name)
            if phi is not None:
                out[name] = [float(x) for x in phi]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "PhaseShifts":
        return cls(data.get("phi1"), data.get("phi2"), data.get("phi0"))
