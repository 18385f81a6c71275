"""Per-unit transport emissions (NTM constants) and emission-unit laws.

Emissions are kg CO2 per shipped unit: ``w * (a_m + b_m * d)`` for a unit of
``w`` kg moved ``d`` km with mode ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ParameterError
from .rand_dist import DistSpec, _as_generator, sample

MODES = ("sea", "air", "road")
ASSORTMENT_TYPES = (1, 2, 3)


@dataclass(frozen=True)
class EmissionCoeffs:
    a: float  # kg CO2 per kg
    b: float  # kg CO2 per kg per km

    def __post_init__(self):
        if self.a < 0:
            raise ParameterError("fixed emission term must be nonnegative", "a")
        if self.b <= 0:
            raise ParameterError("variable emission term must be positive", "b")


NTM_COEFFS = {
    "sea": EmissionCoeffs(0.0, 1.996e-5),
    "air": EmissionCoeffs(1.525e-1, 4.938e-4),
    "road": EmissionCoeffs(3.214e-4, 4.836e-5),
}

# route distances in km
DISTANCES = {
    "haiphong_rotterdam_sea": 17798.0,
    "shanghai_rotterdam_sea": 19492.0,
    "tan_son_nhat_rotterdam_air": 10073.0,
    "stuttgart_rotterdam_road": 633.0,
}


@dataclass(frozen=True)
class TripSpec:
    mode: str
    distance_km: float
    unit_weight_kg: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}", "mode")
        if not self.distance_km > 0:
            raise ParameterError("distance_km must be positive", "distance_km")
        if not self.unit_weight_kg > 0:
            raise ParameterError("unit_weight_kg must be positive", "unit_weight_kg")


def unit_emission(trip):
    """kg CO2 emitted by shipping one unit on ``trip``."""
    c = NTM_COEFFS[trip.mode]
    return trip.unit_weight_kg * (c.a + c.b * trip.distance_km)


def emission_coefficients():
    """kg CO2 per kg for the two industries' slow and fast routes."""
    return {
        ("apparel", "slow"): unit_emission(TripSpec("sea", DISTANCES["haiphong_rotterdam_sea"])),
        ("apparel", "fast"): unit_emission(TripSpec("air", DISTANCES["tan_son_nhat_rotterdam_air"])),
        ("industrial", "slow"): unit_emission(TripSpec("sea", DISTANCES["shanghai_rotterdam_sea"])),
        ("industrial", "fast"): unit_emission(TripSpec("road", DISTANCES["stuttgart_rotterdam_road"])),
    }


# fitted emission-unit laws per assortment type
EMISSION_LAWS = {
    1: {"slow": DistSpec.gamma(0.35, 0.21), "fast_extra": DistSpec.lognormal(1.52, 0.21)},
    2: {"fast": DistSpec.gamma(0.19, 1.27), "slow_extra": DistSpec.gamma(2.19, 1.27)},
    3: {"fast": DistSpec.weibull(0.87, 0.77), "slow": DistSpec.gamma(3.31, 1.34)},
}


def check_assortment_type(assortment_type):
    try:
        t = int(assortment_type)
    except (TypeError, ValueError):
        t = None
    if t not in ASSORTMENT_TYPES or t != assortment_type:
        raise ParameterError(f"assortment type must be one of {ASSORTMENT_TYPES}", "assortment_type")
    return t


def sample_emission_pair(assortment_type, stream, size=None):
    """Draw ``(e_slow, e_fast)`` in kg CO2 per unit.

    Type 1 (apparel): the fast mode is always dirtier.  Type 2 (industrial):
    the slow mode is always dirtier.  Type 3: both drawn independently.
    ``stream`` may be an RngStream (its two child streams feed the two
    components) or a Generator (used sequentially).
    """
    t = check_assortment_type(assortment_type)
    if hasattr(stream, "generator"):
        g1, g2 = stream.generator(0), stream.generator(1)
    else:
        g1 = g2 = _as_generator(stream)
    laws = EMISSION_LAWS[t]
    if t == 1:
        e_s = sample(laws["slow"], g1, size)
        e_f = e_s + sample(laws["fast_extra"], g2, size)
    elif t == 2:
        e_f = sample(laws["fast"], g1, size)
        e_s = e_f + sample(laws["slow_extra"], g2, size)
    else:
        e_f = sample(laws["fast"], g1, size)
        e_s = sample(laws["slow"], g2, size)
    return e_s, e_f
