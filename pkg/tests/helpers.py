"""Random scenario generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from doubleirs.scenario import (
    DOUBLE_LINKS,
    ArraySpec,
    LinkAngles,
    LinkFading,
    Regime,
    ScenarioConfig,
)

# Rician factor 0 switches a link's LoS part off; these pick out the sub-cases
SUBCASE_ZERO_K = {
    "case0": ("S1", "2U"),
    "case1_k12": ("12", "2U"),
    "case1_k1u": ("1U", "2U"),
    "case1": ("2U",),
    "case2_ks2": ("S1", "S2"),
    "case2_k12": ("S1", "12"),
    "case2": ("S1",),
    "case3_ks2_k1u": ("S2", "1U"),
    "case3_k12_ksu": ("12", "SU"),
    "case3": (),
}


def random_angles(rng) -> LinkAngles:
    return LinkAngles(*rng.uniform(0.0, np.pi, 4))


def random_scenario(
    rng,
    sizes=((1, 2), (1, 2), (1, 2)),
    zero_k=(),
    regime: Regime | str = Regime.FINITE,
    alpha=(0.3, 2.0),
    k=(0.3, 5.0),
    links=DOUBLE_LINKS,
) -> ScenarioConfig:
    """Scenario with random angles, path losses and Rician factors.

    ``sizes`` holds (rows, cols) of the BS, IRS 1 and IRS 2; ``zero_k``
    lists links whose Rician factor is set to 0.
    """
    regime = Regime(regime)
    fading, angles = {}, {}
    for link in links:
        a = float(rng.uniform(*alpha))
        if regime is Regime.FINITE:
            kk = 0.0 if link in zero_k else float(rng.uniform(*k))
            fading[link] = LinkFading(a, kk)
        else:
            fading[link] = LinkFading(a, 0.0, regime)
        angles[link] = random_angles(rng)
    arrays = {"S": ArraySpec(*sizes[0]), "1": ArraySpec(*sizes[1]), "2": ArraySpec(*sizes[2])}
    d = float(rng.choice([0.5, rng.uniform(0.1, 0.5)]))
    return ScenarioConfig(arrays=arrays, fading=fading, angles=angles, d_over_lambda=d)


def random_single_scenario(rng, sizes=((1, 2), (2, 2)), regime: Regime | str = Regime.FINITE, zero_k=()) -> ScenarioConfig:
    regime = Regime(regime)
    fading, angles = {}, {}
    for link in ("S0", "0U", "SU"):
        a = float(rng.uniform(0.3, 2.0))
        if regime is Regime.FINITE:
            fading[link] = LinkFading(a, 0.0 if link in zero_k else float(rng.uniform(0.3, 5.0)))
        else:
            fading[link] = LinkFading(a, 0.0, regime)
        angles[link] = random_angles(rng)
    arrays = {"S": ArraySpec(*sizes[0]), "0": ArraySpec(*sizes[1])}
    return ScenarioConfig(arrays=arrays, fading=fading, angles=angles)
