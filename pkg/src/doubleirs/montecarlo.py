"""Monte-Carlo estimates of average channel power and rate.

Batch ``i`` draws from the counter-based stream ``(seed, i)``, and the
per-batch moments are merged in batch order, so results do not depend on how
batches are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import assemble_rician, link_shape, equivalent_channel, equivalent_channel_single, rng_stream
from .scenario import PhaseShifts, ScenarioConfig

SYSTEMS = ("dirs_c", "dirs_nc", "sirs", "no_irs")
# complex entries drawn per batch when the batch size is left automatic
BATCH_ENTRIES = 2_000_000


@dataclass(frozen=True)
class McConfig:
    num_samples: int = 100_000
    seed: int = 0
    batch_size: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    num_samples: int


def _channel_power(cfg: ScenarioConfig, ph: PhaseShifts, system: str, batch: int, rng) -> np.ndarray:
    """``||h_e||^2`` for ``batch`` independent slots."""
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")
    if system == "no_irs":
        cfg = cfg.replace(fading={"SU": cfg.fading["SU"]}, arrays={"S": cfg.arrays["S"]})
    elif system == "dirs_nc":
        cfg = cfg.replace(fading={k: v for k, v in cfg.fading.items() if k != "12"})
    real = assemble_rician(cfg, rng, batch)
    if system == "no_irs":
        he = real["SU"].conj()
    elif system == "sirs":
        he = equivalent_channel_single(real, ph)
    else:
        he = equivalent_channel(real, ph, cascade=(system == "dirs_c"))
    return np.sum(he.real**2 + he.imag**2, axis=-1)


def batch_size_for(cfg: ScenarioConfig, mc: McConfig) -> int:
    """Explicit batch size, or one sized to the scenario's channel dimensions.

    Depends only on the scenario and ``mc``, so results stay reproducible.
    """
    if mc.batch_size is not None:
        return mc.batch_size
    entries = sum(int(np.prod(link_shape(cfg, link))) for link in cfg.fading)
    return max(1, min(10_000, BATCH_ENTRIES // max(entries, 1)))


def _batches(cfg: ScenarioConfig, mc: McConfig):
    size = batch_size_for(cfg, mc)
    full, rest = divmod(mc.num_samples, size)
    sizes = [size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _estimate(cfg, ph, system, mc: McConfig, transform) -> McEstimate:
    def run(item):
        index, size = item
        x = transform(_channel_power(cfg, ph, system, size, rng_stream(mc.seed, index)))
        mean = float(np.mean(x))
        return size, mean, float(np.sum((x - mean) ** 2))

    items = _batches(cfg, mc)
    if mc.workers > 1:
        with ThreadPoolExecutor(mc.workers) as pool:
            parts = list(pool.map(run, items))
    else:
        parts = [run(item) for item in items]
    # merge centered moments in batch order (Chan et al. pairwise update)
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        total = n + nb
        delta = mb - mean
        mean += delta * nb / total
        m2 += m2b + delta * delta * n * nb / total
        n = total
    std_error = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return McEstimate(mean, std_error, n)


def estimate_gamma_mc(cfg: ScenarioConfig, ph: PhaseShifts, system: str = "dirs_c", mc: McConfig = McConfig()) -> McEstimate:
    """Sample mean of ``||h_e||^2``."""
    return _estimate(cfg, ph, system, mc, lambda p: p)


def estimate_rate_mc(cfg: ScenarioConfig, ph: PhaseShifts, system: str = "dirs_c", mc: McConfig = McConfig()) -> McEstimate:
    """Sample mean of ``log2(1 + P_S / sigma^2 * ||h_e||^2)`` (MRT at the BS)."""
    snr = cfg.snr_scale
    return _estimate(cfg, ph, system, mc, lambda p: np.log2(1.0 + snr * p))


@dataclass(frozen=True)
class RandomPhaseReport:
    mean: float
    best: float
    values: np.ndarray


def random_phase_baseline(cfg: ScenarioConfig, num_draws: int, seed: int, evaluate) -> RandomPhaseReport:
    """Analytic power at ``num_draws`` uniformly random phase configurations.

    ``evaluate`` maps ``PhaseShifts`` to the analytic average power.
    """
    if num_draws < 1:
        raise ValueError("num_draws must be >= 1")
    rng = rng_stream(seed, 0)
    values = np.array([evaluate(PhaseShifts.random(cfg, rng)) for _ in range(num_draws)])
    return RandomPhaseReport(float(values.mean()), float(values.max()), values)


@dataclass(frozen=True)
class Verification:
    analytic: float
    estimate: McEstimate
    z: float
    passed: bool
    exact: bool

    @property
    def rel_error(self) -> float:
        return abs(self.analytic - self.estimate.mean) / max(abs(self.analytic), 1e-300)


def verify_analytic(
    analytic: float,
    cfg: ScenarioConfig,
    ph: PhaseShifts,
    system: str = "dirs_c",
    mc: McConfig = McConfig(),
    z_max: float = 3.0,
    exact_rtol: float = 1e-10,
) -> Verification:
    """Compare an analytic average power with its Monte-Carlo estimate.

    Passes iff ``|analytic - mean| / std_error <= z_max``. A deterministic
    channel (zero sample variance) is instead checked for equality to
    ``exact_rtol``.
    """
    est = estimate_gamma_mc(cfg, ph, system, mc)
    diff = abs(analytic - est.mean)
    scale = max(abs(analytic), abs(est.mean))
    if est.std_error <= 1e-13 * scale or est.std_error == 0.0:
        passed = diff <= exact_rtol * scale
        z = 0.0 if passed else math.inf
        return Verification(analytic, est, z, passed, True)
    z = diff / est.std_error
    return Verification(analytic, est, z, z <= z_max, False)
