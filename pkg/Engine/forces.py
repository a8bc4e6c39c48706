"""
Force Model Module

Anisotropic pair interaction F(d, T) = f_s(|d|)(s.d)s + f_l(|d|)(l.d)l:
- KCLaw: exponential repulsion f_R and attraction f_A, with a chi-weighted
  s-channel and an attraction_scale-weighted l-channel
- PiecewiseLaw: the KC l-channel linearly interpolated to a repulsive tail
- HarmonicLaw: damped trigonometric coefficient ansatz

Every law is evaluated at the rescaled argument eta*d and cut off hard at
the unrescaled separation `cutoff`.
"""

import logging
import math
from dataclasses import dataclass, fields, replace
from typing import Union

import numpy as np
import pandas as pd

from direction_field import Frame, UnknownPresetError
from torus import TorusVector


logger = logging.getLogger(__name__)

MAX_CUTOFF = 0.5


# --- Parameter sets ---

@dataclass(frozen=True)
class KCParams:
    alpha: float
    beta: float
    gamma: float
    e_a: float
    e_r: float
    chi: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"KCParams.{f.name} must be a nonnegative real, got {value!r}")
        if self.chi > 1.0:
            raise ValueError(f"KCParams.chi must lie in [0, 1], got {self.chi!r}")


@dataclass(frozen=True)
class HarmonicParams:
    c: float
    c_s: float
    c_l: float
    e_s1: float
    e_s2: float
    e_l1: float
    e_l2: float
    a_s: float
    a_l: float

    def __post_init__(self):
        if self.a_s == 0 or self.a_l == 0:
            raise ValueError("HarmonicParams.a_s and a_l must be nonzero")


# --- Laws ---

@dataclass(frozen=True)
class KCLaw:
    params: KCParams
    attraction_scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.attraction_scale) or self.attraction_scale < 0:
            raise ValueError(f"attraction_scale must be nonnegative, got {self.attraction_scale!r}")


@dataclass(frozen=True)
class PiecewiseLaw:
    params: KCParams
    c1: float = 0.06
    c2: float = 0.07

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2 < MAX_CUTOFF):
            raise ValueError(f"Piecewise law needs 0 < c1 < c2 < 0.5, got c1={self.c1}, c2={self.c2}")


@dataclass(frozen=True)
class HarmonicLaw:
    params: HarmonicParams


ForceLaw = Union[KCLaw, PiecewiseLaw, HarmonicLaw]


@dataclass(frozen=True)
class ForceModel:
    """A force law with its rescaling factor and hard cutoff radius."""
    law: ForceLaw
    eta: float = 1.0
    cutoff: float = 0.1
    name: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"ForceModel.eta must be positive, got {self.eta!r}")
        if not (0.0 < self.cutoff <= MAX_CUTOFF):
            raise ValueError(f"ForceModel.cutoff must lie in (0, 0.5], got {self.cutoff!r}")


# --- Coefficient functions ---

def repulsion(params: KCParams, r):
    """f_R(r) = (alpha r^2 + beta) exp(-e_R r)."""
    r = np.asarray(r, dtype=np.float64)
    return (params.alpha * r * r + params.beta) * np.exp(-params.e_r * r)


def attraction(params: KCParams, r):
    """f_A(r) = -gamma r exp(-e_A r)."""
    r = np.asarray(r, dtype=np.float64)
    return -params.gamma * r * np.exp(-params.e_a * r)


def _kc_mix(params: KCParams, r, weight: float):
    return weight * attraction(params, r) + repulsion(params, r)


def coefficient_arrays(model: ForceModel, r) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorised coefficients at (already rescaled) separations r.

    Returns:
        (f_l, f_s) arrays shaped like r
    """
    r = np.asarray(r, dtype=np.float64)
    law = model.law

    if isinstance(law, KCLaw):
        f_a = attraction(law.params, r)
        f_r = repulsion(law.params, r)
        return law.attraction_scale * f_a + f_r, law.params.chi * f_a + f_r

    if isinstance(law, PiecewiseLaw):
        params, c1, c2 = law.params, law.c1, law.c2
        near = _kc_mix(params, r, 1.0)
        at_c1 = float(_kc_mix(params, c1, 1.0))
        at_c2 = float(_kc_mix(params, c2, 1.0))
        bridge = at_c1 + (r - c1) / (c2 - c1) * (-at_c2 - at_c1)
        f_l = np.where(r < c1, near, np.where(r <= c2, bridge, -near))
        return f_l, _kc_mix(params, r, params.chi)

    if isinstance(law, HarmonicLaw):
        p = law.params
        f_s = p.c * np.exp(p.e_s1 * r) + p.c_s * np.sin(np.pi * r / p.a_s) * np.exp(p.e_s2 * r)
        f_l = (p.c * np.cos(np.pi * r / p.a_l) * np.exp(p.e_l1 * r)
               + p.c_l * np.sin(np.pi * r / p.a_l) * np.exp(p.e_l2 * r))
        return f_l, f_s

    raise TypeError(f"Unsupported force law: {type(law).__name__}")


def coefficients(model: ForceModel, r: float) -> tuple[float, float]:
    """
    Scalar coefficients (f_l, f_s) at separation r.

    r is the argument the law sees; callers pass eta*|d|. Positive values
    repel, negative values attract.
    """
    if r < 0:
        raise ValueError(f"Separation must be nonnegative, got {r!r}")
    f_l, f_s = coefficient_arrays(model, r)
    return float(f_l), float(f_s)


# --- Pair forces ---

def pair_force_components(model: ForceModel, dx, dy, sx, sy, lx, ly) -> tuple[np.ndarray, np.ndarray]:
    """
    Component-wise pair force kernel.

    dx, dy must be C-contiguous; frame components broadcast against them.
    Pairs at separation >= cutoff contribute exact zeros.
    """
    r = np.hypot(dx, dy)
    ex = model.eta * dx
    ey = model.eta * dy
    f_l, f_s = coefficient_arrays(model, model.eta * r)

    along_s = f_s * (sx * ex + sy * ey)
    along_l = f_l * (lx * ex + ly * ey)
    fx = along_s * sx + along_l * lx
    fy = along_s * sy + along_l * ly

    inside = r < model.cutoff
    return np.where(inside, fx, 0.0), np.where(inside, fy, 0.0)


def pair_forces(model: ForceModel, d, s, l) -> np.ndarray:
    """Vectorised pair_force over (..., 2) arrays of displacements and frames."""
    d = np.asarray(d, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    dx, dy = d[..., 0], d[..., 1]
    if d.ndim > 1:
        dx, dy = np.ascontiguousarray(dx), np.ascontiguousarray(dy)
    fx, fy = pair_force_components(model, dx, dy, s[..., 0], s[..., 1], l[..., 0], l[..., 1])
    return np.stack([fx, fy], axis=-1)


def pair_force(model: ForceModel, d: TorusVector, frame: Frame) -> np.ndarray:
    """Force exerted on a particle at displacement d from its partner, in the frame at the particle."""
    return pair_forces(model, d.as_array(), frame.s, frame.l)


# --- Presets ---

KC_ORIGINAL_PARAMS = KCParams(alpha=270.0, beta=0.1, gamma=35.0, e_a=95.0, e_r=100.0, chi=0.2)
KC_STATIONARY_PARAMS = replace(KC_ORIGINAL_PARAMS, gamma=10.5)
BIO_HARMONIC_PARAMS = HarmonicParams(
    c=0.1, c_s=-0.05, c_l=0.005,
    e_s1=-65.0, e_s2=-100.0, e_l1=-160.0, e_l2=-40.0,
    a_s=0.03, a_l=0.022,
)

FORCE_PRESETS = {
    "kc_original": lambda: ForceModel(law=KCLaw(KC_ORIGINAL_PARAMS), name="kc_original"),
    "kc_stationary": lambda: ForceModel(law=KCLaw(KC_STATIONARY_PARAMS), name="kc_stationary"),
    "kc_adapted": lambda: ForceModel(
        law=KCLaw(KC_ORIGINAL_PARAMS, attraction_scale=0.3), name="kc_adapted"
    ),
    "kc_piecewise": lambda: ForceModel(
        law=PiecewiseLaw(KC_STATIONARY_PARAMS, c1=0.06, c2=0.07), name="kc_piecewise"
    ),
    "bio_harmonic": lambda: ForceModel(law=HarmonicLaw(BIO_HARMONIC_PARAMS), name="bio_harmonic"),
}


def preset(name: str) -> ForceModel:
    """Named force model with eta = 1 and cutoff = 0.1."""
    factory = FORCE_PRESETS.get(name)
    if factory is None:
        raise UnknownPresetError("force", name, sorted(FORCE_PRESETS))
    return factory()


def with_overrides(model: ForceModel, **overrides) -> ForceModel:
    """
    Copy of a model with selected fields replaced.

    Accepts eta, cutoff and name, the law's own fields (attraction_scale,
    c1, c2) and any parameter of the law's parameter set.

    Raises:
        ValueError for names the law does not have, or invalid values
    """
    if not overrides:
        return model

    top = {k: overrides.pop(k) for k in ("eta", "cutoff", "name") if k in overrides}

    law = model.law
    law_names = {f.name for f in fields(law)} - {"params"}
    param_names = {f.name for f in fields(law.params)}
    law_updates = {k: v for k, v in overrides.items() if k in law_names}
    param_updates = {k: v for k, v in overrides.items() if k in param_names}

    unknown = set(overrides) - law_names - param_names
    if unknown:
        raise ValueError(
            f"Unknown override(s) for {type(law).__name__}: {', '.join(sorted(unknown))}"
        )

    if param_updates:
        law = replace(law, params=replace(law.params, **param_updates))
    if law_updates:
        law = replace(law, **law_updates)
    return replace(model, law=law, **top)


def coefficient_curve(model: ForceModel, samples: int = 501) -> pd.DataFrame:
    """Coefficients sampled on [0, 0.5] as a table with columns r, f_l, f_s."""
    if samples < 2:
        raise ValueError("coefficient_curve needs at least two samples")
    r = np.linspace(0.0, MAX_CUTOFF, samples)
    f_l, f_s = coefficient_arrays(model, r)
    return pd.DataFrame({"r": r, "f_l": f_l, "f_s": f_s})
