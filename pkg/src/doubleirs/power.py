"""Average channel power of the cooperative double-IRS link.

All quantities are expectations over the NLoS fading for fixed phases. The
evaluator below covers every combination of Rician factors with a single
expression whose coefficients vanish when the corresponding LoS or NLoS
power is zero, so the four cases (and both pure regimes) fall out as
special cases of one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .channel import arrival_vector, departure_vector, los_components
from .scenario import DOUBLE_LINKS, LinkFading, PhaseShifts, Regime, ScenarioConfig


class Case(IntEnum):
    CASE0 = 0
    CASE1 = 1
    CASE2 = 2
    CASE3 = 3


@dataclass(frozen=True)
class CaseLabel:
    case: Case
    regime: Regime

    def __str__(self):
        regime = "general" if self.regime is Regime.FINITE else self.regime.value
        return f"Case{int(self.case)} ({regime})"


def _has_los(cfg: ScenarioConfig, link: str) -> bool:
    return cfg.fading[link].has_los


def classify_case(cfg: ScenarioConfig) -> CaseLabel:
    """Which phase vectors influence the average power.

    IRS 1 matters iff S1 has LoS and at least one of 1U/12 has LoS; IRS 2
    matters iff 2U has LoS and at least one of 12/S2 has LoS.
    """
    k = {link: _has_los(cfg, link) for link in DOUBLE_LINKS}
    irs1 = k["S1"] and (k["1U"] or k["12"])
    irs2 = k["2U"] and (k["12"] or k["S2"])
    case = Case(int(irs1) + 2 * int(irs2))
    return CaseLabel(case, cfg.regime(DOUBLE_LINKS))


@dataclass(frozen=True)
class FadingPowers:
    """LoS and NLoS large-scale powers per link."""

    los: dict
    nlos: dict

    def product(self, *terms: str) -> float:
        """Cascaded power, e.g. ``product('S1~', '12-', '2U-')``.

        A trailing ``-`` selects the LoS power, ``~`` the NLoS power.
        """
        out = 1.0
        for term in terms:
            link, kind = term[:-1], term[-1]
            out *= self.los[link] if kind == "-" else self.nlos[link]
        return out


def fading_powers(cfg: ScenarioConfig) -> FadingPowers:
    los = {link: f.los_power for link, f in cfg.fading.items()}
    nlos = {link: f.nlos_power for link, f in cfg.fading.items()}
    return FadingPowers(los, nlos)


@dataclass(frozen=True)
class LosGeometry:
    """Steering vectors plus the phase-sum vectors and correlations built from them."""

    a_d: dict
    a_a: dict
    delta: dict
    r: dict


def _delta(a_arrive: np.ndarray, a_depart: np.ndarray) -> np.ndarray:
    return np.angle(a_depart.conj() * a_arrive)


def los_geometry(cfg: ScenarioConfig) -> LosGeometry:
    a_d = {link: departure_vector(cfg, link) for link in cfg.fading}
    a_a = {link: arrival_vector(cfg, link) for link in cfg.fading}
    delta, r = {}, {}
    if cfg.has_double:
        delta["S1,1U"] = _delta(a_a["S1"], a_d["1U"])
        delta["S1,12"] = _delta(a_a["S1"], a_d["12"])
        delta["12,2U"] = _delta(a_a["12"], a_d["2U"])
        delta["S2,2U"] = _delta(a_a["S2"], a_d["2U"])
        r["S1,SU"] = np.vdot(a_d["S1"], a_d["SU"])
        r["S2,SU"] = np.vdot(a_d["S2"], a_d["SU"])
        r["S1,S2"] = np.vdot(a_d["S1"], a_d["S2"])
        r["S2,12"] = np.vdot(a_a["S2"], a_a["12"])
        r["12,1U"] = np.vdot(a_d["12"], a_d["1U"])
    if "S0" in cfg.fading:
        delta["S0,0U"] = _delta(a_a["S0"], a_d["0U"])
        r["S0,SU"] = np.vdot(a_d["S0"], a_d["SU"])
    return LosGeometry(a_d, a_a, delta, r)


@dataclass(frozen=True)
class CouplingMatrices:
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    A3: np.ndarray
    b11: np.ndarray
    b12: np.ndarray
    b21: np.ndarray
    b22: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    B5: np.ndarray


def coupling_matrices(cfg: ScenarioConfig) -> CouplingMatrices:
    """LoS coupling matrices of the double-IRS link, assembled term by term."""
    los = los_components(cfg)
    geo_a_d12 = departure_vector(cfg, "12")
    geo_a_a12 = arrival_vector(cfg, "12")
    geo_a_as1 = arrival_vector(cfg, "S1")
    hs1, hs2, h12 = los["S1"], los["S2"], los["12"]
    hsu, h1u, h2u = los["SU"], los["1U"], los["2U"]

    def diag_h(x):
        return np.diag(x.conj())

    g11 = hs1 @ hs1.conj().T
    A11 = diag_h(h1u) @ g11 @ np.diag(h1u)
    A12 = diag_h(geo_a_d12) @ g11 @ np.diag(geo_a_d12)
    A21 = diag_h(h2u) @ hs2 @ hs2.conj().T @ np.diag(h2u)
    A22 = diag_h(h2u) @ h12 @ h12.conj().T @ np.diag(h2u)
    B1 = diag_h(h2u) @ h12
    A3 = B1 @ np.diag(geo_a_as1)
    b11 = h1u.conj() * (hs1 @ hsu)
    b12 = geo_a_d12.conj() * (hs1 @ (hs2.conj().T @ geo_a_a12))
    b21 = h2u.conj() * (hs2 @ hsu)
    b22 = h2u.conj() * (h12 @ h1u)
    B2 = g11 @ np.diag(h1u)
    B3 = hs1 @ hs2.conj().T @ np.diag(h2u)
    B4 = B1 @ np.diag(hs1 @ hsu)
    B5 = diag_h(h2u) @ hs2 @ hs1.conj().T @ np.diag(h1u)
    return CouplingMatrices(A11, A12, A21, A22, A3, b11, b12, b21, b22, B1, B2, B3, B4, B5)


@dataclass(frozen=True)
class PowerCoefficients:
    """Scalar weights multiplying each coupling term."""

    gamma0: float
    a11: float  # on A11
    a12: float  # on A12
    a21: float
    a22: float
    b11: float
    b12: float
    b21: float
    b22: float
    quartic: float
    B2: float
    B3: float
    B4: float
    B5: float


def power_coefficients(cfg: ScenarioConfig) -> PowerCoefficients:
    fp = fading_powers(cfg)
    L, N = fp.los, fp.nlos
    ts, t1, t2 = cfg.size("S"), cfg.size("1"), cfg.size("2")
    alpha_su = cfg.fading["SU"].alpha
    mixed = lambda l: N["S" + l] * L[l + "U"] + L["S" + l] * N[l + "U"] + N["S" + l] * N[l + "U"]  # noqa: E731
    cascade_mixed = (
        N["S1"] * L["12"] * N["2U"]
        + L["S1"] * N["12"] * L["2U"]
        + L["S1"] * N["12"] * N["2U"]
        + N["S1"] * N["12"] * L["2U"]
        + N["S1"] * N["12"] * N["2U"]
    )
    gamma0 = alpha_su * ts + mixed("1") * ts * t1 + mixed("2") * ts * t2 + cascade_mixed * ts * t1 * t2
    l_s1_1u = L["S1"] * L["1U"]
    l_s2_2u = L["S2"] * L["2U"]
    l_casc = L["S1"] * L["12"] * L["2U"]
    return PowerCoefficients(
        gamma0=gamma0,
        a11=l_s1_1u,
        a12=L["S1"] * L["12"] * N["2U"] * t2,
        a21=l_s2_2u,
        a22=N["S1"] * L["12"] * L["2U"] * ts,
        b11=math.sqrt(L["SU"] * l_s1_1u),
        b12=math.sqrt(L["S2"] * N["2U"] * L["S1"] * L["12"] * N["2U"]),
        b21=math.sqrt(L["SU"] * l_s2_2u),
        b22=math.sqrt(N["S1"] * L["1U"] * N["S1"] * L["12"] * L["2U"]) * ts,
        quartic=l_casc * ts,
        B2=math.sqrt(l_s1_1u * l_casc),
        B3=math.sqrt(l_s2_2u * l_casc),
        B4=math.sqrt(L["SU"] * l_casc),
        B5=math.sqrt(l_s1_1u * l_s2_2u),
    )


def _quad(v: np.ndarray, M: np.ndarray) -> float:
    return float(np.real(np.vdot(v, M @ v)))


def _quad_rows(V: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``Re(v^H M v)`` for every row ``v`` of ``V``."""
    return np.real(np.sum(V.conj() * (V @ M.T), axis=1))


class DoubleIrsPower:
    """Average channel power for one scenario, with its LoS data cached.

    Phases only enter through ``v1``/``v2``; constructing the object does the
    O(T^2) work once so repeated evaluations during optimization are cheap.
    ``cascade=False`` switches off the inter-IRS link (the non-cooperative
    counterpart), which is the same as setting its large-scale power to zero.
    """

    def __init__(self, cfg: ScenarioConfig, cascade: bool = True):
        if not cfg.has_double:
            raise ValueError("scenario lacks one of the double-IRS links")
        if not cascade:
            cfg = cfg.with_fading(**{"12": LinkFading(0.0, 0.0, cfg.fading["12"].regime)})
        self.cfg = cfg
        self.label = classify_case(cfg)
        self.geometry = los_geometry(cfg)
        self.mats = coupling_matrices(cfg)
        self.coef = power_coefficients(cfg)
        c, m = self.coef, self.mats
        # Matrices and vectors of the single-IRS quadratic parts
        self.A1 = c.a11 * m.A11 + c.a12 * m.A12
        self.b1 = c.b11 * m.b11 + c.b12 * m.b12
        self.A2 = c.a21 * m.A21 + c.a22 * m.A22
        self.b2 = c.b21 * m.b21 + c.b22 * m.b22

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.cfg.size("S"), self.cfg.size("1"), self.cfg.size("2")

    def terms(self, v1: np.ndarray, v2: np.ndarray) -> dict:
        """Individual contributions to the average power (all real)."""
        c, m = self.coef, self.mats
        out = {
            "gamma0": c.gamma0,
            "irs1_quad": _quad(v1, self.A1),
            "irs1_lin": 2.0 * float(np.real(np.vdot(v1, self.b1))),
            "irs2_quad": _quad(v2, self.A2),
            "irs2_lin": 2.0 * float(np.real(np.vdot(v2, self.b2))),
            "quartic": 0.0,
            "cross": 0.0,
        }
        if c.quartic > 0:
            out["quartic"] = c.quartic * abs(np.vdot(v2, m.A3 @ v1.conj())) ** 2
        if c.B2 > 0 or c.B3 > 0 or c.B4 > 0 or c.B5 > 0:
            g = v2.conj() @ m.B1  # v2^H B1
            inner = c.B2 * (m.B2 @ v1) + c.B3 * (m.B3 @ v2)
            total = np.vdot(v1, g * inner)
            total += np.vdot(v2, c.B4 * (m.B4 @ v1.conj()) + c.B5 * (m.B5 @ v1))
            out["cross"] = 2.0 * float(np.real(total))
        return out

    def value(self, v1: np.ndarray, v2: np.ndarray) -> float:
        return float(sum(self.terms(v1, v2).values()))

    def value_batch(self, V1: np.ndarray, V2: np.ndarray) -> np.ndarray:
        """``value`` for each row pair of ``V1`` (N x T1) and ``V2`` (N x T2)."""
        c, m = self.coef, self.mats
        V1, V2 = np.atleast_2d(V1), np.atleast_2d(V2)
        out = np.full(V1.shape[0], c.gamma0)
        out += _quad_rows(V1, self.A1) + 2.0 * np.real(V1.conj() @ self.b1)
        out += _quad_rows(V2, self.A2) + 2.0 * np.real(V2.conj() @ self.b2)
        if c.quartic > 0:
            out += c.quartic * np.abs(np.einsum("ni,ni->n", V2.conj(), V1.conj() @ m.A3.T)) ** 2
        if c.B2 > 0 or c.B3 > 0 or c.B4 > 0 or c.B5 > 0:
            g = V2.conj() @ m.B1
            inner = c.B2 * (V1 @ m.B2.T) + c.B3 * (V2 @ m.B3.T)
            total = np.sum(V1.conj() * g * inner, axis=1)
            total += np.sum(V2.conj() * (c.B4 * (V1.conj() @ m.B4.T) + c.B5 * (V1 @ m.B5.T)), axis=1)
            out += 2.0 * np.real(total)
        return out

    def __call__(self, ph: PhaseShifts) -> float:
        return self.value(ph.v1, ph.v2)


def gamma(cfg: ScenarioConfig, ph: PhaseShifts) -> tuple[float, CaseLabel]:
    """Average channel power for finite (or mixed) Rician factors."""
    regime = cfg.regime(DOUBLE_LINKS)
    if regime is not Regime.FINITE:
        raise ValueError(f"scenario is in the {regime.value} regime; use gamma_{regime.value}")
    model = DoubleIrsPower(cfg)
    return model(ph), model.label


def gamma_pure_los(cfg: ScenarioConfig, ph: PhaseShifts) -> float:
    """Average channel power when every link is pure LoS (a deterministic channel)."""
    if cfg.regime(DOUBLE_LINKS) is not Regime.PURE_LOS:
        raise ValueError("gamma_pure_los needs every link flagged pure_los")
    return DoubleIrsPower(cfg)(ph)


def gamma_pure_nlos(cfg: ScenarioConfig) -> float:
    """Average channel power when every link is pure NLoS; phases are irrelevant."""
    if cfg.regime(DOUBLE_LINKS) is not Regime.PURE_NLOS:
        raise ValueError("gamma_pure_nlos needs every link flagged pure_nlos")
    a = {link: cfg.fading[link].alpha for link in DOUBLE_LINKS}
    ts, t1, t2 = cfg.size("S"), cfg.size("1"), cfg.size("2")
    return (
        a["SU"] * ts
        + a["S1"] * a["1U"] * ts * t1
        + a["S2"] * a["2U"] * ts * t2
        + a["S1"] * a["12"] * a["2U"] * ts * t1 * t2
    )


def average_power(cfg: ScenarioConfig, ph: PhaseShifts) -> float:
    """Dispatch to the finite, pure-LoS or pure-NLoS evaluator."""
    regime = cfg.regime(DOUBLE_LINKS)
    if regime is Regime.PURE_NLOS:
        return gamma_pure_nlos(cfg)
    if regime is Regime.PURE_LOS:
        return gamma_pure_los(cfg, ph)
    return gamma(cfg, ph)[0]


def rate_bound(cfg: ScenarioConfig, gamma_value: float) -> float:
    """Jensen upper bound ``log2(1 + P_S / sigma^2 * gamma)`` in bit/s/Hz."""
    if gamma_value < 0:
        raise ValueError("average power must be >= 0")
    return math.log2(1.0 + cfg.snr_scale * gamma_value)


def asymptotic_gamma_dirc(cfg: ScenarioConfig, label: CaseLabel | None = None) -> float:
    """Leading term of the optimal average power for large IRSs."""
    label = classify_case(cfg) if label is None else label
    fp = fading_powers(cfg)
    ts, t1, t2 = cfg.size("S"), cfg.size("1"), cfg.size("2")
    a = {link: cfg.fading[link].alpha for link in DOUBLE_LINKS}
    if label.regime is Regime.PURE_LOS:
        return a["S1"] * a["12"] * a["2U"] * ts * t1**2 * t2**2
    if label.regime is Regime.PURE_NLOS:
        return a["S1"] * a["12"] * a["2U"] * ts * t1 * t2
    if label.case is Case.CASE3:
        return fp.product("S1-", "12-", "2U-") * ts * t1**2 * t2**2
    if label.case is Case.CASE1:
        return fp.product("S1-", "12-", "2U~") * ts * t1**2 * t2
    if label.case is Case.CASE2:
        return fp.product("S1~", "12-", "2U-") * ts * t1 * t2**2
    cascade_mixed = sum(
        fp.product(*terms)
        for terms in (
            ("S1~", "12-", "2U~"),
            ("S1-", "12~", "2U-"),
            ("S1-", "12~", "2U~"),
            ("S1~", "12~", "2U-"),
            ("S1~", "12~", "2U~"),
        )
    )
    return cascade_mixed * ts * t1 * t2


__all__ = [
    "Case",
    "CaseLabel",
    "CouplingMatrices",
    "DoubleIrsPower",
    "FadingPowers",
    "LosGeometry",
    "PowerCoefficients",
    "asymptotic_gamma_dirc",
    "average_power",
    "classify_case",
    "coupling_matrices",
    "fading_powers",
    "gamma",
    "gamma_pure_los",
    "gamma_pure_nlos",
    "los_geometry",
    "power_coefficients",
    "rate_bound",
]
