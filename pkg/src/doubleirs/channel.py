"""URA steering vectors, Rician channel synthesis and the equivalent channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import LINK_NODES, TWO_PI, ArraySpec, PhaseShifts, ScenarioConfig


def wrap_phase(x):
    """Map ``x`` into ``[0, 2*pi)`` as ``x - 2*pi*floor(x / 2*pi)``.

    Works on scalars and arrays. Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap_phase expects finite input")
    out = arr - TWO_PI * np.floor(arr / TWO_PI)
    # rounding can land exactly on 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    out = np.where(out < 0.0, 0.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


def phase_offset(x_h: float, x_v: float, m: int, n: int, d_over_lambda: float) -> float:
    """Phase of element (m, n) (1-based) relative to element (1, 1)."""
    if m < 1 or n < 1:
        raise ValueError(f"element indices are 1-based, got ({m}, {n})")
    return 2.0 * math.pi * d_over_lambda * math.sin(x_v) * ((m - 1) * math.cos(x_h) + (n - 1) * math.sin(x_h))


def steering_vector(x_h: float, x_v: float, arr: ArraySpec, d_over_lambda: float) -> np.ndarray:
    """Unit-modulus URA response, vectorized column-major (row index fastest)."""
    m = np.arange(arr.rows)[:, None]
    n = np.arange(arr.cols)[None, :]
    f = 2.0 * np.pi * d_over_lambda * np.sin(x_v) * (m * np.cos(x_h) + n * np.sin(x_h))
    return np.exp(1j * f).ravel(order="F")


def departure_vector(cfg: ScenarioConfig, link: str) -> np.ndarray:
    node = LINK_NODES[link][0]
    ang = cfg.angles_of(link)
    return steering_vector(ang.aod_h, ang.aod_v, cfg.arrays[node], cfg.d_over_lambda)


def arrival_vector(cfg: ScenarioConfig, link: str) -> np.ndarray:
    node = LINK_NODES[link][1]
    if node == "U":
        return np.ones(1, dtype=complex)
    ang = cfg.angles_of(link)
    return steering_vector(ang.aoa_h, ang.aoa_v, cfg.arrays[node], cfg.d_over_lambda)


def los_components(cfg: ScenarioConfig) -> dict[str, np.ndarray]:
    """Normalized LoS part of every configured link.

    Matrices ``H[ab] = a_A a_D^H`` (receiver x transmitter); for links ending
    at the user the entry is the departure steering vector ``h[ab] = a_D``.
    """
    out = {}
    for link in cfg.fading:
        a_d = departure_vector(cfg, link)
        if LINK_NODES[link][1] == "U":
            out[link] = a_d
        else:
            out[link] = np.outer(arrival_vector(cfg, link), a_d.conj())
    return out


def path_loss(distance: float, exponent: float) -> float:
    """Large-scale power gain ``1 / (1000 d^exponent)`` (-30 dB at 1 m)."""
    if not (math.isfinite(distance) and distance > 0):
        raise ValueError(f"distance must be positive and finite, got {distance}")
    return 1.0 / (1000.0 * distance**exponent)


def rng_stream(seed: int, stream_index: int = 0) -> np.random.Generator:
    """Counter-based generator for one independent stream of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream_index)])))


def draw_nlos(shape, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2)."""
    z = rng.standard_normal((*tuple(np.atleast_1d(shape)), 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def link_shape(cfg: ScenarioConfig, link: str) -> tuple[int, ...]:
    tx, rx = LINK_NODES[link]
    if rx == "U":
        return (cfg.size(tx),)
    return (cfg.size(rx), cfg.size(tx))


@dataclass(frozen=True)
class ChannelRealization:
    """Channels of one slot (or a batch of slots along a leading axis).

    ``links`` maps link names to arrays: matrices are receiver x transmitter,
    user-side links are stored as column vectors ``h`` with ``h^H`` the row
    that multiplies the transmitter side.
    """

    links: dict

    def __getitem__(self, link: str) -> np.ndarray:
        return self.links[link]

    @property
    def batch_shape(self) -> tuple:
        arr = self.links["SU"]
        return arr.shape[:-1]


def assemble_rician(cfg: ScenarioConfig, rng: np.random.Generator | None, batch: int | None = None) -> ChannelRealization:
    """Draw one (or ``batch``) Rician realization(s) of every configured link.

    Links without an NLoS part (pure LoS or alpha = 0) consume no random
    numbers, so their draws are skipped rather than scaled by zero.
    """
    los = los_components(cfg)
    lead = () if batch is None else (int(batch),)
    links = {}
    for link in cfg.fading:
        fad = cfg.fading[link]
        shape = lead + link_shape(cfg, link)
        h = np.zeros(shape, dtype=complex)
        if fad.los_power > 0:
            h = h + math.sqrt(fad.los_power) * los[link]
        if fad.nlos_power > 0:
            if rng is None:
                raise ValueError(f"link {link!r} has an NLoS part; an rng is required")
            h = h + math.sqrt(fad.nlos_power) * draw_nlos(shape, rng)
        links[link] = h
    return ChannelRealization(links)


def _reflect(h_lu: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row ``h^H diag(v^H)`` (batched over leading axes)."""
    return h_lu.conj() * v.conj()


def _rowmat(row: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """``row @ mat`` for a single or a batch of rows/matrices."""
    if mat.ndim == 2:
        return row @ mat
    if row.ndim == 1:
        return np.einsum("j,bjk->bk", row, mat)
    return np.einsum("bj,bjk->bk", row, mat)


def equivalent_channel(real: ChannelRealization, ph: PhaseShifts, cascade: bool = True) -> np.ndarray:
    """Row ``h_e^H`` (length T_S, batched if the realization is).

    ``h_e^H = h_SU^H + sum_l h_lU^H diag(v_l^H) H_Sl
    + h_2U^H diag(v_2^H) H_12 diag(v_1^H) H_S1``; ``cascade=False`` drops the
    inter-IRS path.
    """
    v1, v2 = ph.v1, ph.v2
    if real["S1"].shape[-2] != v1.size or real["S2"].shape[-2] != v2.size:
        raise ValueError("phase vector lengths do not match the IRS sizes")
    w1 = _reflect(real["1U"], v1)
    w2 = _reflect(real["2U"], v2)
    he = real["SU"].conj() + _rowmat(w1, real["S1"]) + _rowmat(w2, real["S2"])
    if cascade:
        through = _rowmat(w2, real["12"]) * v1.conj()
        he = he + _rowmat(through, real["S1"])
    return he


def equivalent_channel_single(real: ChannelRealization, ph: PhaseShifts) -> np.ndarray:
    """Row ``h_SU^H + h_0U^H diag(v_0^H) H_S0``."""
    v0 = ph.v0
    if real["S0"].shape[-2] != v0.size:
        raise ValueError("phase vector length does not match the IRS size")
    return real["SU"].conj() + _rowmat(_reflect(real["0U"], v0), real["S0"])
