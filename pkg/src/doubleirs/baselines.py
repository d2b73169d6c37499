"""Counterpart systems: two IRSs without the inter-IRS link, a single IRS, and no IRS."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import ChannelRealization, equivalent_channel, equivalent_channel_single, path_loss, wrap_phase
from .power import Case, CaseLabel, _quad_rows, fading_powers, los_geometry
from .scenario import (
    ArraySpec,
    LinkFading,
    PhaseShifts,
    Regime,
    ScenarioConfig,
    derived_link_angles,
    node_distance,
)

NC_LINKS = ("S1", "S2", "SU", "1U", "2U")
SINGLE_LINKS = ("S0", "0U", "SU")


class BaselineKind(str, Enum):
    DIRS_NC = "dirs_nc"
    SIRS_POS1 = "sirs_pos1"
    SIRS_POS2 = "sirs_pos2"
    SIRS_POS_MID = "sirs_pos_mid"
    NO_IRS = "no_irs"


# ------------------------------------------------------------ two IRSs, no 12


def classify_case_dnc(cfg: ScenarioConfig) -> CaseLabel:
    """IRS ``l`` matters iff both Sl and lU carry LoS."""
    los = {link: cfg.fading[link].has_los for link in NC_LINKS}
    irs1 = los["S1"] and los["1U"]
    irs2 = los["S2"] and los["2U"]
    return CaseLabel(Case(int(irs1) + 2 * int(irs2)), cfg.regime(NC_LINKS))


class NonCooperativePower:
    """Average power with two IRSs reflecting independently (no inter-IRS path)."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.label = classify_case_dnc(cfg)
        self.geometry = geo = los_geometry(cfg)
        fp = fading_powers(cfg)
        L, N = fp.los, fp.nlos
        ts, t1, t2 = cfg.size("S"), cfg.size("1"), cfg.size("2")

        def mixed(l):
            return N["S" + l] * L[l + "U"] + L["S" + l] * N[l + "U"] + N["S" + l] * N[l + "U"]

        self.gamma0 = cfg.fading["SU"].alpha * ts + mixed("1") * ts * t1 + mixed("2") * ts * t2
        self.c1 = L["S1"] * L["1U"]
        self.c2 = L["S2"] * L["2U"]
        self.c1_lin = math.sqrt(L["SU"] * self.c1)
        self.c2_lin = math.sqrt(L["SU"] * self.c2)
        self.c12 = math.sqrt(self.c1 * self.c2)
        a_d, a_a = geo.a_d, geo.a_a
        hs1 = np.outer(a_a["S1"], a_d["S1"].conj())
        hs2 = np.outer(a_a["S2"], a_d["S2"].conj())
        self.A11 = np.diag(a_d["1U"].conj()) @ hs1 @ hs1.conj().T @ np.diag(a_d["1U"])
        self.A21 = np.diag(a_d["2U"].conj()) @ hs2 @ hs2.conj().T @ np.diag(a_d["2U"])
        self.b11 = a_d["1U"].conj() * (hs1 @ a_d["SU"])
        self.b21 = a_d["2U"].conj() * (hs2 @ a_d["SU"])
        self.B5 = np.diag(a_d["2U"].conj()) @ hs2 @ hs1.conj().T @ np.diag(a_d["1U"])

    def value(self, v1: np.ndarray, v2: np.ndarray) -> float:
        out = self.gamma0
        out += self.c1 * float(np.real(np.vdot(v1, self.A11 @ v1)))
        out += self.c2 * float(np.real(np.vdot(v2, self.A21 @ v2)))
        cross = self.c1_lin * np.vdot(v1, self.b11) + self.c2_lin * np.vdot(v2, self.b21)
        cross += self.c12 * np.vdot(v2, self.B5 @ v1)
        return out + 2.0 * float(np.real(cross))

    def value_batch(self, V1: np.ndarray, V2: np.ndarray) -> np.ndarray:
        V1, V2 = np.atleast_2d(V1), np.atleast_2d(V2)
        out = np.full(V1.shape[0], self.gamma0)
        out += self.c1 * _quad_rows(V1, self.A11) + self.c2 * _quad_rows(V2, self.A21)
        cross = self.c1_lin * (V1.conj() @ self.b11) + self.c2_lin * (V2.conj() @ self.b21)
        cross += self.c12 * np.sum(V2.conj() * (V1 @ self.B5.T), axis=1)
        return out + 2.0 * np.real(cross)

    def __call__(self, ph: PhaseShifts) -> float:
        return self.value(ph.v1, ph.v2)


def gamma_dnc(cfg: ScenarioConfig, ph: PhaseShifts) -> float:
    return NonCooperativePower(cfg)(ph)


def _cophase(model: NonCooperativePower, theta1: float, theta2: float) -> PhaseShifts:
    geo = model.geometry
    return PhaseShifts(
        wrap_phase(-geo.delta["S1,1U"] + theta1),
        wrap_phase(-geo.delta["S2,2U"] + theta2),
    )


def optimal_phases_dnc(cfg: ScenarioConfig, method: str = "exact") -> PhaseShifts | None:
    """Phases maximizing the non-cooperative average power.

    Each IRS co-phases its own cascade (``phi_l = -Delta_l + theta_l``); only
    the common offsets ``theta_l`` remain. With one active IRS the offset
    aligns it with the direct link. With both active, ``method='exact'``
    maximizes jointly over the two offsets, while ``method='closed_form'``
    returns the explicit formula that aligns IRS 1 with the direct link and
    sets ``theta_2 = angle(r_S1,S2) - angle(r_S2,SU)``. The explicit formula
    is not optimal in general: the three pairwise alignments (IRS 1 vs
    direct, IRS 2 vs direct, IRS 1 vs IRS 2) cannot all hold with two free
    offsets.
    Returns ``None`` when no phase matters.
    """
    model = NonCooperativePower(cfg)
    geo = model.geometry
    label = model.label
    if label.regime is Regime.PURE_NLOS or label.case is Case.CASE0:
        return None
    t1, t2 = cfg.size("1"), cfg.size("2")
    th1 = -np.angle(geo.r["S1,SU"])
    th2 = -np.angle(geo.r["S2,SU"])
    if label.case is Case.CASE1:
        return PhaseShifts(wrap_phase(-geo.delta["S1,1U"] + th1), np.zeros(t2))
    if label.case is Case.CASE2:
        return PhaseShifts(np.zeros(t1), wrap_phase(-geo.delta["S2,2U"] + th2))
    if method == "closed_form":
        return _cophase(model, th1, th2 + np.angle(geo.r["S1,S2"]))
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    return _cophase(model, *_best_offsets(model))


def _best_offsets(model: NonCooperativePower) -> tuple[float, float]:
    """Global maximizer of the offset-dependent part of the average power.

    With full co-phasing the phase-dependent part is
    ``2 Re{p1 e^{j t1} + p2 e^{j t2} + p12 e^{j(t1 - t2)}}``; for fixed
    ``t1`` the best ``t2`` is explicit, leaving a smooth 1-D problem that a
    dense grid plus bounded refinement solves to machine precision.
    """
    geo, cfg = model.geometry, model.cfg
    t1, t2 = cfg.size("1"), cfg.size("2")
    p1 = model.c1_lin * t1 * geo.r["S1,SU"]
    p2 = model.c2_lin * t2 * geo.r["S2,SU"]
    p12 = model.c12 * t1 * t2 * geo.r["S1,S2"]

    def best_theta2(theta1):
        return -np.angle(p2 + np.conj(p12 * np.exp(1j * theta1)))

    def objective(theta1):
        theta2 = best_theta2(theta1)
        val = p1 * np.exp(1j * theta1) + p2 * np.exp(1j * theta2) + p12 * np.exp(1j * (theta1 - theta2))
        return float(np.real(val))

    grid = np.linspace(0.0, 2 * np.pi, 2049)[:-1]
    values = np.array([objective(x) for x in grid])
    k = int(np.argmax(values))
    step = grid[1] - grid[0]
    res = minimize_scalar(lambda x: -objective(x), bounds=(grid[k] - step, grid[k] + step), method="bounded",
                          options={"xatol": 1e-12})
    theta1 = float(res.x) if -res.fun >= values[k] else float(grid[k])
    return theta1, float(best_theta2(theta1))


# ------------------------------------------------------------------ one IRS


def single_irs_scenario(cfg: ScenarioConfig, placement: str = "pos1") -> ScenarioConfig:
    """Single-IRS counterpart with ``T_1 + T_2`` elements.

    ``pos1``/``pos2`` reuse the fading and angles of IRS 1/IRS 2's links;
    ``mid`` sits halfway between the two IRSs, with path losses and angles
    recomputed from the node positions.
    """
    total = cfg.size("1") + cfg.size("2")
    arrays = {"S": cfg.arrays["S"], "0": ArraySpec.with_size(total)}
    if placement in ("pos1", "pos2"):
        l = "1" if placement == "pos1" else "2"
        fading = {"S0": cfg.fading["S" + l], "0U": cfg.fading[l + "U"], "SU": cfg.fading["SU"]}
        angles = {"S0": cfg.angles_of("S" + l), "0U": cfg.angles_of(l + "U"), "SU": cfg.angles_of("SU")}
        positions = dict(cfg.positions)
        if l in positions:
            positions["0"] = positions[l]
    elif placement == "mid":
        positions = dict(cfg.positions)
        missing = [n for n in ("S", "U", "1", "2") if n not in positions]
        if missing:
            raise ValueError(f"mid placement needs node positions; missing {missing}")
        positions["0"] = tuple(0.5 * (np.asarray(positions["1"], float) + np.asarray(positions["2"], float)))
        fading = {"SU": cfg.fading["SU"]}
        angles = {"SU": cfg.angles_of("SU")}
        for link, ref in (("S0", "S1"), ("0U", "1U")):
            exponent = cfg.exponents.get(link, cfg.exponents.get(ref, 2.3))
            src = cfg.fading[ref]
            fading[link] = LinkFading(path_loss(node_distance(positions, link), exponent), src.k, src.regime)
            angles[link] = derived_link_angles({k: positions[k] for k in ("S", "U", "0")}, link)
    else:
        raise ValueError(f"unknown placement {placement!r}; expected pos1, pos2 or mid")
    return cfg.replace(arrays=arrays, fading=fading, angles=angles, positions=positions)


class SingleIrsPower:
    """Average power of the single-IRS link; valid for any Rician factors."""

    def __init__(self, cfg: ScenarioConfig):
        if not cfg.has_single:
            raise ValueError("scenario lacks the S0/0U/SU links")
        self.cfg = cfg
        self.geometry = geo = los_geometry(cfg)
        fp = fading_powers(cfg)
        L, N = fp.los, fp.nlos
        ts, t0 = cfg.size("S"), cfg.size("0")
        self.regime = cfg.regime(SINGLE_LINKS)
        self.gamma0 = cfg.fading["SU"].alpha * ts + (N["S0"] * L["0U"] + L["S0"] * N["0U"] + N["S0"] * N["0U"]) * ts * t0
        self.c_quad = L["S0"] * L["0U"]
        self.c_lin = math.sqrt(L["SU"] * self.c_quad)
        hs0 = np.outer(geo.a_a["S0"], geo.a_d["S0"].conj())
        h0u = geo.a_d["0U"]
        self.A0 = np.diag(h0u.conj()) @ hs0 @ hs0.conj().T @ np.diag(h0u)
        self.b0 = h0u.conj() * (hs0 @ geo.a_d["SU"])

    def value(self, v0: np.ndarray) -> float:
        quad = float(np.real(np.vdot(v0, self.A0 @ v0)))
        return self.gamma0 + self.c_quad * quad + 2.0 * self.c_lin * float(np.real(np.vdot(v0, self.b0)))

    def value_batch(self, V0: np.ndarray) -> np.ndarray:
        V0 = np.atleast_2d(V0)
        return self.gamma0 + self.c_quad * _quad_rows(V0, self.A0) + 2.0 * self.c_lin * np.real(V0.conj() @ self.b0)

    def __call__(self, ph: PhaseShifts) -> float:
        return self.value(ph.v0)


def gamma_sgl(cfg: ScenarioConfig, ph: PhaseShifts) -> float:
    return SingleIrsPower(cfg)(ph)


def gamma_sgl_pure_nlos(cfg: ScenarioConfig) -> float:
    a = {link: cfg.fading[link].alpha for link in SINGLE_LINKS}
    ts, t0 = cfg.size("S"), cfg.size("0")
    return a["SU"] * ts + a["S0"] * a["0U"] * ts * t0


def optimal_phases_sgl(cfg: ScenarioConfig) -> PhaseShifts | None:
    """Co-phase the reflected path with the direct link; ``None`` if no phase matters."""
    fad = cfg.fading
    if not (fad["S0"].has_los and fad["0U"].has_los):
        return None
    geo = los_geometry(cfg)
    return PhaseShifts(phi0=wrap_phase(-geo.delta["S0,0U"] - np.angle(geo.r["S0,SU"])))


# ------------------------------------------------------------- asymptotics


def asymptotic_gamma_baseline(kind: BaselineKind | str, cfg: ScenarioConfig, exact_coupling: bool = False) -> float:
    """Leading term of the (optimal) average power for large IRSs.

    For two active non-cooperative IRSs the default form
    ``T_S (sum_l sqrt(c_l) T_l)^2`` assumes the BS departure vectors towards
    the two IRSs coincide. ``exact_coupling=True`` weights the cross term by
    ``|r_S1,S2|`` instead, which is the actual leading term when they differ.
    """
    kind = BaselineKind(kind)
    ts = cfg.size("S")
    if kind is BaselineKind.NO_IRS:
        return cfg.fading["SU"].alpha * ts
    if kind is BaselineKind.DIRS_NC:
        label = classify_case_dnc(cfg)
        fp = fading_powers(cfg)
        L, N = fp.los, fp.nlos
        a = {link: cfg.fading[link].alpha for link in NC_LINKS}
        sizes = {"1": cfg.size("1"), "2": cfg.size("2")}
        if label.regime is Regime.PURE_NLOS:
            return sum(a["S" + l] * a[l + "U"] * ts * sizes[l] for l in "12")
        if label.regime is Regime.PURE_LOS:
            w = {l: math.sqrt(a["S" + l] * a[l + "U"]) * sizes[l] for l in "12"}
            return _two_irs_leading(cfg, w, exact_coupling)
        if label.case is Case.CASE0:
            return sum(
                (N["S" + l] * L[l + "U"] + L["S" + l] * N[l + "U"] + N["S" + l] * N[l + "U"]) * ts * sizes[l]
                for l in "12"
            )
        if label.case is Case.CASE1:
            return L["S1"] * L["1U"] * ts * sizes["1"] ** 2
        if label.case is Case.CASE2:
            return L["S2"] * L["2U"] * ts * sizes["2"] ** 2
        w = {l: math.sqrt(L["S" + l] * L[l + "U"]) * sizes[l] for l in "12"}
        return _two_irs_leading(cfg, w, exact_coupling)
    scfg = cfg if cfg.has_single else single_irs_scenario(cfg, _PLACEMENT[kind])
    t0 = scfg.size("0")
    regime = scfg.regime(SINGLE_LINKS)
    a = {link: scfg.fading[link].alpha for link in SINGLE_LINKS}
    if regime is Regime.PURE_NLOS:
        return a["S0"] * a["0U"] * ts * t0
    if regime is Regime.PURE_LOS:
        return a["S0"] * a["0U"] * ts * t0**2
    fp = fading_powers(scfg)
    return fp.los["S0"] * fp.los["0U"] * ts * t0**2


def _two_irs_leading(cfg: ScenarioConfig, w: dict, exact_coupling: bool) -> float:
    ts = cfg.size("S")
    if not exact_coupling:
        return ts * (w["1"] + w["2"]) ** 2
    corr = abs(los_geometry(cfg).r["S1,S2"])
    return ts * (w["1"] ** 2 + w["2"] ** 2) + 2.0 * corr * w["1"] * w["2"]


_PLACEMENT = {
    BaselineKind.SIRS_POS1: "pos1",
    BaselineKind.SIRS_POS2: "pos2",
    BaselineKind.SIRS_POS_MID: "mid",
}


def placement_of(kind: BaselineKind | str) -> str:
    return _PLACEMENT[BaselineKind(kind)]


def equivalent_channel_baseline(kind: BaselineKind | str, real: ChannelRealization, ph: PhaseShifts | None) -> np.ndarray:
    """Equivalent BS-user row channel of a counterpart system."""
    kind = BaselineKind(kind)
    if kind is BaselineKind.NO_IRS:
        return real["SU"].conj()
    if kind is BaselineKind.DIRS_NC:
        if "S1" not in real.links:
            raise ValueError("dirs_nc needs a double-IRS realization")
        return equivalent_channel(real, ph, cascade=False)
    if "S0" not in real.links:
        raise ValueError(f"{kind.value} needs a single-IRS realization")
    return equivalent_channel_single(real, ph)
