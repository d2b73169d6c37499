"""Phase-shift design for the cooperative double-IRS link.

Closed-form optima are used where the Rician factors admit one; otherwise
coordinate ascent (each phase maximized exactly with the rest fixed) or the
block variant for all-LoS channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import wrap_phase
from .power import Case, CaseLabel, DoubleIrsPower
from .scenario import PhaseShifts, Regime, ScenarioConfig

# Relative size below which a coordinate's driving term counts as zero
ZERO_ARGUMENT_RTOL = 1e-12
# Allowed relative decrease of the objective between accepted updates
ASCENT_SLACK = 1e-10


class NotApplicable(ValueError):
    """The requested closed form does not apply to this scenario."""


class InitMode(str, Enum):
    ZEROS = "zeros"
    RANDOM = "random"
    GIVEN = "given"


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 500
    rel_tolerance: float = 1e-8
    init_mode: InitMode = InitMode.ZEROS
    seed: int = 0
    initial: PhaseShifts | None = None
    psi: float = 0.0
    check_ascent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "init_mode", InitMode(self.init_mode))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be > 0")
        if self.init_mode is InitMode.GIVEN and self.initial is None:
            raise ValueError("init_mode 'given' needs initial phases")


@dataclass
class OptimizerTrace:
    """Objective after initialization (entry 0) and after every outer pass."""

    objectives: list
    phases: PhaseShifts
    converged: bool
    iterations_used: int
    method: str
    label: CaseLabel | None = None
    updates: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objectives[-1]


class CdMode(str, Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3_IRS1 = "case3_irs1"
    CASE3_IRS2 = "case3_irs2"
    PURE_LOS_IRS2 = "pure_los_irs2"


@dataclass(frozen=True)
class CdCoefficients:
    """Quadratic model ``v^H M v + 2 Re(v^H d)`` of one IRS's phase vector."""

    mode: CdMode
    matrix: np.ndarray
    vector: np.ndarray


def initial_phases(cfg: ScenarioConfig, opt: OptimizerConfig) -> PhaseShifts:
    if opt.init_mode is InitMode.GIVEN:
        return opt.initial
    if opt.init_mode is InitMode.RANDOM:
        return PhaseShifts.random(cfg, np.random.default_rng(opt.seed))
    return PhaseShifts.zeros(cfg)


# ---------------------------------------------------------------- closed forms


def closed_form_case1(model: DoubleIrsPower) -> np.ndarray:
    """Globally optimal IRS-1 phases when only IRS 1 matters and 1U or 12 has no LoS."""
    cfg, geo = model.cfg, model.geometry
    if model.label.case is not Case.CASE1:
        raise NotApplicable(f"scenario is {model.label}, not Case1")
    if not cfg.fading["1U"].has_los:
        return wrap_phase(-geo.delta["S1,12"] - np.angle(geo.r["S1,S2"] * geo.r["S2,12"]))
    if not cfg.fading["12"].has_los:
        return wrap_phase(-geo.delta["S1,1U"] - np.angle(geo.r["S1,SU"]))
    raise NotApplicable("both 1U and 12 carry LoS; use coordinate ascent")


def closed_form_case2(model: DoubleIrsPower) -> np.ndarray:
    """Globally optimal IRS-2 phases when only IRS 2 matters and S2 or 12 has no LoS."""
    cfg, geo = model.cfg, model.geometry
    if model.label.case is not Case.CASE2:
        raise NotApplicable(f"scenario is {model.label}, not Case2")
    if not cfg.fading["S2"].has_los:
        return wrap_phase(-geo.delta["12,2U"] - np.angle(geo.r["12,1U"]))
    if not cfg.fading["12"].has_los:
        return wrap_phase(-geo.delta["S2,2U"] - np.angle(geo.r["S2,SU"]))
    raise NotApplicable("both S2 and 12 carry LoS; use coordinate ascent")


def closed_form_case3(model: DoubleIrsPower, psi: float = 0.0) -> PhaseShifts:
    """One member (indexed by ``psi``) of the family of joint optima, where available."""
    cfg, geo = model.cfg, model.geometry
    if model.label.case is not Case.CASE3:
        raise NotApplicable(f"scenario is {model.label}, not Case3")
    los = {link: cfg.fading[link].has_los for link in cfg.fading}
    if not los["S2"] and not los["1U"]:
        half = 0.5 * np.angle(geo.r["S1,SU"])
        phi1 = wrap_phase(-geo.delta["S1,12"] + psi - half)
        phi2 = wrap_phase(-geo.delta["12,2U"] - psi - half)
        return PhaseShifts(phi1, phi2)
    if not los["12"] and not los["SU"]:
        phi1 = wrap_phase(-geo.delta["S1,1U"] + psi)
        phi2 = wrap_phase(-geo.delta["S2,2U"] + psi + np.angle(geo.r["S1,S2"]))
        return PhaseShifts(phi1, phi2)
    raise NotApplicable("no closed form for this Case3 scenario; use coordinate ascent")


def closed_form_name(model: DoubleIrsPower) -> str | None:
    """Which closed form applies, if any."""
    fad = model.cfg.fading
    case = model.label.case
    if model.label.regime is not Regime.FINITE:
        return None
    if case is Case.CASE1 and not (fad["1U"].has_los and fad["12"].has_los):
        return "closed-form case 1"
    if case is Case.CASE2 and not (fad["S2"].has_los and fad["12"].has_los):
        return "closed-form case 2"
    if case is Case.CASE3:
        if not fad["S2"].has_los and not fad["1U"].has_los:
            return "closed-form case 3 (no S2/1U LoS)"
        if not fad["12"].has_los and not fad["SU"].has_los:
            return "closed-form case 3 (no 12/SU LoS)"
    return None


# --------------------------------------------------------- coordinate ascent


def build_cd_coefficients(model: DoubleIrsPower, ph: PhaseShifts, mode: CdMode | str) -> CdCoefficients:
    """Quadratic model of the average power in one IRS's phases, the other held at ``ph``."""
    mode = CdMode(mode)
    c, m = model.coef, model.mats
    if mode is CdMode.CASE1:
        return CdCoefficients(mode, model.A1, model.b1)
    if mode is CdMode.CASE2:
        return CdCoefficients(mode, model.A2, model.b2)
    v1, v2 = ph.v1, ph.v2
    if mode is CdMode.CASE3_IRS1:
        g = v2.conj() @ m.B1
        u = m.A3.T @ v2.conj()
        mixed = g[:, None] * m.B2
        C = model.A1 + c.quartic * np.outer(u, u.conj()) + c.B2 * (mixed + mixed.conj().T)
        d = model.b1 + c.B3 * g * (m.B3 @ v2) + c.B4 * (m.B4.T @ v2.conj()) + c.B5 * (m.B5.conj().T @ v2)
        return CdCoefficients(mode, C, d)
    # IRS-2 block; the pure-LoS variant is the same construction at pure-LoS powers
    u = m.A3 @ v1.conj()
    mixed = (m.B1 * v1.conj()[None, :]) @ m.B3
    C = model.A2 + c.quartic * np.outer(u, u.conj()) + c.B3 * (mixed + mixed.conj().T)
    d = (
        model.b2
        + c.B2 * (m.B1 @ (v1.conj() * (m.B2 @ v1)))
        + c.B4 * (m.B4 @ v1.conj())
        + c.B5 * (m.B5 @ v1)
    )
    return CdCoefficients(mode, C, d)


def _zero_threshold(row: np.ndarray, d_t: complex) -> float:
    return ZERO_ARGUMENT_RTOL * (float(np.sum(np.abs(row))) + abs(d_t))


def cd_update(coeffs: CdCoefficients, v: np.ndarray, t: int, phi_t: float) -> float:
    """Exact maximizer over phase ``t`` of ``v^H M v + 2 Re(v^H d)``.

    ``v`` holds the current reflection coefficients ``exp(-1j * phi)``. When
    the driving term is numerically zero every phase is optimal and
    ``phi_t`` is returned unchanged.
    """
    M, d = coeffs.matrix, coeffs.vector
    if not 0 <= t < v.size:
        raise IndexError(f"coordinate {t} out of range for length {v.size}")
    s = M[t] @ v - M[t, t] * v[t] + d[t]
    if abs(s) <= _zero_threshold(M[t], d[t]):
        return phi_t
    return wrap_phase(-np.angle(s))


def _sweep(coeffs: CdCoefficients, phi: np.ndarray, on_update=None) -> np.ndarray:
    """One pass of exact coordinate updates over every entry of ``phi``."""
    M, d = coeffs.matrix, coeffs.vector
    phi = phi.copy()
    v = np.exp(-1j * phi)
    z = M @ v
    row_norms = np.sum(np.abs(M), axis=1)
    for t in range(phi.size):
        s = z[t] - M[t, t] * v[t] + d[t]
        if abs(s) <= ZERO_ARGUMENT_RTOL * (row_norms[t] + abs(d[t])):
            continue
        new_phi = wrap_phase(-np.angle(s))
        new_v = np.exp(-1j * new_phi)
        z += M[:, t] * (new_v - v[t])
        v[t] = new_v
        phi[t] = new_phi
        if on_update is not None:
            on_update(phi)
    return phi


def bcd_block_phi1(model: DoubleIrsPower, phi2: np.ndarray, phi1_current: np.ndarray | None = None) -> np.ndarray:
    """Exact maximizer over all of IRS 1's phases for all-LoS channels, IRS 2 fixed.

    The power is ``||x + s a_D,S1||^2`` with ``s`` a sum of unit-modulus
    terms, so every term is co-phased with the rest of the channel.
    """
    cfg, geo, m = model.cfg, model.geometry, model.mats
    a = {link: cfg.fading[link].alpha for link in cfg.fading}
    v2 = np.exp(-1j * np.asarray(phi2, dtype=float))
    a_as1 = geo.a_a["S1"]
    h1u, h2u, hsu = geo.a_d["1U"], geo.a_d["2U"], geo.a_d["SU"]
    w = (math.sqrt(a["S1"] * a["1U"]) * h1u.conj() + math.sqrt(a["S1"] * a["12"] * a["2U"]) * (v2.conj() @ m.B1)) * a_as1
    hs2 = np.outer(geo.a_a["S2"], geo.a_d["S2"].conj())
    x = math.sqrt(a["SU"]) * hsu + math.sqrt(a["S2"] * a["2U"]) * (hs2.conj().T @ (v2 * h2u))
    c = np.vdot(geo.a_d["S1"], x)
    shift = 0.0 if abs(c) <= ZERO_ARGUMENT_RTOL * np.linalg.norm(x) * math.sqrt(x.size) else np.angle(c)
    phi1 = wrap_phase(-np.angle(w) - shift)
    if phi1_current is not None:
        tiny = np.abs(w) <= ZERO_ARGUMENT_RTOL * max(float(np.max(np.abs(w))), 1e-300)
        phi1 = np.where(tiny, phi1_current, phi1)
    return phi1


# ------------------------------------------------------------------- driver


def _converged(prev: float, new: float, tol: float) -> bool:
    return new - prev <= tol * max(abs(new), 1e-300)


class _AscentGuard:
    """Evaluates the true objective after every update when checking is enabled."""

    def __init__(self, model: DoubleIrsPower, enabled: bool, record: list):
        self.model, self.enabled, self.record = model, enabled, record
        self.last = None

    def start(self, phi1, phi2):
        if self.enabled:
            self.last = self.model.value(np.exp(-1j * phi1), np.exp(-1j * phi2))

    def check(self, phi1, phi2):
        if not self.enabled:
            return
        value = self.model.value(np.exp(-1j * phi1), np.exp(-1j * phi2))
        self.record.append(value)
        if value < self.last - ASCENT_SLACK * max(abs(self.last), 1e-300):
            raise AssertionError(f"update decreased the objective: {self.last!r} -> {value!r}")
        self.last = value


def _coordinate_ascent_single(model: DoubleIrsPower, ph: PhaseShifts, opt: OptimizerConfig, irs: int) -> OptimizerTrace:
    coeffs = build_cd_coefficients(model, ph, CdMode.CASE1 if irs == 1 else CdMode.CASE2)
    phi1, phi2 = ph.phi1.copy(), ph.phi2.copy()
    updates: list = []
    guard = _AscentGuard(model, opt.check_ascent, updates)
    guard.start(phi1, phi2)
    objectives = [model.value(np.exp(-1j * phi1), np.exp(-1j * phi2))]
    converged = False
    it = 0
    for it in range(1, opt.max_iterations + 1):
        if irs == 1:
            phi1 = _sweep(coeffs, phi1, lambda p: guard.check(p, phi2) if guard.enabled else None)
        else:
            phi2 = _sweep(coeffs, phi2, lambda p: guard.check(phi1, p) if guard.enabled else None)
        objectives.append(model.value(np.exp(-1j * phi1), np.exp(-1j * phi2)))
        if _converged(objectives[-2], objectives[-1], opt.rel_tolerance):
            converged = True
            break
    return OptimizerTrace(objectives, PhaseShifts(phi1, phi2), converged, it, "coordinate ascent", model.label, updates)


def _coordinate_ascent_joint(model: DoubleIrsPower, ph: PhaseShifts, opt: OptimizerConfig, pure_los: bool) -> OptimizerTrace:
    phi1, phi2 = ph.phi1.copy(), ph.phi2.copy()
    updates: list = []
    guard = _AscentGuard(model, opt.check_ascent, updates)
    guard.start(phi1, phi2)
    objectives = [model.value(np.exp(-1j * phi1), np.exp(-1j * phi2))]
    converged = False
    it = 0
    for it in range(1, opt.max_iterations + 1):
        if pure_los:
            phi1 = bcd_block_phi1(model, phi2, phi1)
            guard.check(phi1, phi2)
            mode2 = CdMode.PURE_LOS_IRS2
        else:
            coeffs = build_cd_coefficients(model, PhaseShifts(phi1, phi2), CdMode.CASE3_IRS1)
            phi1 = _sweep(coeffs, phi1, (lambda p: guard.check(p, phi2)) if guard.enabled else None)
            mode2 = CdMode.CASE3_IRS2
        coeffs = build_cd_coefficients(model, PhaseShifts(phi1, phi2), mode2)
        phi2 = _sweep(coeffs, phi2, (lambda p: guard.check(phi1, p)) if guard.enabled else None)
        objectives.append(model.value(np.exp(-1j * phi1), np.exp(-1j * phi2)))
        if _converged(objectives[-2], objectives[-1], opt.rel_tolerance):
            converged = True
            break
    method = "block coordinate ascent (all LoS)" if pure_los else "coordinate ascent (joint)"
    return OptimizerTrace(objectives, PhaseShifts(phi1, phi2), converged, it, method, model.label, updates)


def run_optimizer(
    cfg_or_model: ScenarioConfig | DoubleIrsPower,
    opt: OptimizerConfig = OptimizerConfig(),
    force_iterative: bool = False,
) -> OptimizerTrace:
    """Maximize the average channel power over both IRSs' phases.

    Dispatch: nothing to do when no phase matters (Case 0, all NLoS);
    closed forms where they exist; otherwise coordinate ascent (single IRS
    or joint), and block coordinate ascent when every link is pure LoS.
    ``force_iterative`` skips the closed forms (used to cross-check them).
    """
    model = cfg_or_model if isinstance(cfg_or_model, DoubleIrsPower) else DoubleIrsPower(cfg_or_model)
    cfg, label = model.cfg, model.label
    start = initial_phases(cfg, opt)

    def single(ph, method):
        value = model(ph)
        return OptimizerTrace([value], ph, True, 0, method, label)

    if label.regime is Regime.PURE_LOS:
        return _coordinate_ascent_joint(model, start, opt, pure_los=True)
    if label.case is Case.CASE0:
        return single(start, "no optimization needed")
    closed = None if force_iterative else closed_form_name(model)
    if closed is not None:
        if label.case is Case.CASE1:
            ph = PhaseShifts(closed_form_case1(model), start.phi2)
        elif label.case is Case.CASE2:
            ph = PhaseShifts(start.phi1, closed_form_case2(model))
        else:
            ph = closed_form_case3(model, opt.psi)
        trace = single(ph, closed)
        trace.objectives.insert(0, model(start))
        trace.iterations_used = 1
        return trace
    if label.case is Case.CASE1:
        return _coordinate_ascent_single(model, start, opt, irs=1)
    if label.case is Case.CASE2:
        return _coordinate_ascent_single(model, start, opt, irs=2)
    return _coordinate_ascent_joint(model, start, opt, pure_los=False)
