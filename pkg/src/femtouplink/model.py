"""Network parameter set, power control arithmetic, and normalization.

Power control inverts pathloss exactly: a transmitter at ``x`` served at
``b`` with target received power ``P_T`` sends ``P_T * A * |x-b|^gamma``.  The
propagation constant ``A`` cancels from every signal-to-interference ratio,
so it is accepted for fidelity but never used numerically.  Configs may be
stated in dBm; everything internal is linear mW.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .geometry import IntensityProfile, Point


class DegenerateGeometryError(ValueError):
    """Raised when victim and transmitter coincide."""


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


@dataclass(frozen=True)
class NetworkConfig:
    """All physical and statistical parameters of the two-tier network.

    Lengths in meters, densities per square meter, powers in mW.  ``rho`` is
    the power-enhancement factor: handed-off UEs target ``rho * P`` at their
    femto BS.
    """

    R_c: float          # macrocell circumradius
    R: float            # femtocell radius
    lam: float          # macro-UE density
    mu: float           # femto-BS density
    nu: IntensityProfile  # femto-UE intensity inside a femtocell
    P: float            # macro target received power
    Q: float            # femto target received power
    rho: float          # open-access power enhancement P'/P
    gamma: float        # pathloss exponent
    T: float            # SIR threshold
    A: float = 1.0      # propagation constant; cancels in every SIR

    def __post_init__(self) -> None:
        if not self.gamma > 2.0:
            raise ValueError(f"gamma must exceed 2 for integral convergence, got {self.gamma}")
        if not (self.R_c > 0 and self.R > 0):
            raise ValueError("R_c and R must be positive")
        if not self.R < self.R_c:
            raise ValueError(f"femtocell radius R={self.R} must be smaller than R_c={self.R_c}")
        if self.R / self.R_c >= 0.5:
            warnings.warn(
                f"R/R_c = {self.R / self.R_c:.3g}; the model assumes femtocells "
                "much smaller than macrocells",
                stacklevel=2,
            )
        if self.lam < 0 or self.mu < 0:
            raise ValueError("densities must be >= 0")
        if not (self.P > 0 and self.Q > 0 and self.rho > 0 and self.T > 0):
            raise ValueError("P, Q, rho, T must be positive")
        if not math.isclose(self.nu.radius, self.R, rel_tol=1e-12):
            raise ValueError(
                f"intensity profile radius {self.nu.radius} must equal femtocell radius {self.R}"
            )


@dataclass(frozen=True)
class NormalizedConfig(NetworkConfig):
    """A :class:`NetworkConfig` rescaled to R_c = 1 and P = 1.

    ``R`` is then the femto/macro radius ratio, ``Q`` and ``rho`` are power
    ratios, densities are per unit normalized area.  ``length_scale`` and
    ``power_scale`` record the original R_c (meters) and P (mW).
    """

    length_scale: float = 1.0
    power_scale: float = 1.0


def normalize(cfg: NetworkConfig) -> NormalizedConfig:
    """Rescale lengths by 1/R_c and powers by 1/P; an already-normalized
    config passes through unchanged (up to float rounding)."""
    if isinstance(cfg, NormalizedConfig):
        return cfg
    rc = cfg.R_c
    return NormalizedConfig(
        R_c=1.0,
        R=cfg.R / rc,
        lam=cfg.lam * rc * rc,
        mu=cfg.mu * rc * rc,
        nu=cfg.nu.scaled(1.0 / rc, rc * rc),
        P=1.0,
        Q=cfg.Q / cfg.P,
        rho=cfg.rho,
        gamma=cfg.gamma,
        T=cfg.T,
        A=cfg.A,
        length_scale=rc,
        power_scale=cfg.P,
    )


def denormalize(ncfg: NormalizedConfig) -> NetworkConfig:
    """Invert :func:`normalize` using the recorded scales."""
    rc = ncfg.length_scale
    p = ncfg.power_scale
    return NetworkConfig(
        R_c=rc,
        R=ncfg.R * rc,
        lam=ncfg.lam / (rc * rc),
        mu=ncfg.mu / (rc * rc),
        nu=ncfg.nu.scaled(rc, 1.0 / (rc * rc)),
        P=p,
        Q=ncfg.Q * p,
        rho=ncfg.rho,
        gamma=ncfg.gamma,
        T=ncfg.T,
        A=ncfg.A,
    )


@dataclass(frozen=True)
class DerivedQuantities:
    """Mean local femto UEs (nu_bar) and open-access UEs (lambda_bar) per femtocell."""

    nu_bar: float
    lambda_bar: float


def derived_quantities(cfg: NetworkConfig) -> DerivedQuantities:
    return DerivedQuantities(
        nu_bar=cfg.nu.nu_bar,
        lambda_bar=math.pi * cfg.R**2 * cfg.lam,
    )


def interference_term(
    victim: Point,
    tx: Point,
    served_at: Point,
    target_power: float,
    h: float,
    gamma: float,
) -> float:
    """Received interference power at ``victim`` from a power-controlled UE.

    The UE at ``tx`` is power-controlled toward ``served_at`` with target
    received power ``target_power``, so the interference seen at ``victim``
    is ``target_power * |tx-served_at|^gamma * h / |tx-victim|^gamma``.  The
    propagation constant cancels.  Homogeneous of degree 0 in the three
    positions and linear in ``target_power`` and ``h``.
    """
    if h < 0:
        raise ValueError(f"fading must be >= 0, got {h}")
    d_victim = math.hypot(tx.x - victim.x, tx.y - victim.y)
    if d_victim == 0.0:
        raise DegenerateGeometryError("victim and transmitter coincide")
    d_serve = math.hypot(tx.x - served_at.x, tx.y - served_at.y)
    if d_serve == 0.0:
        return 0.0
    return target_power * (d_serve / d_victim) ** gamma * h


def draw_fading(rng: np.random.Generator, size: int | None = None):
    """Unit-mean exponential fast-fading draw(s) (Rayleigh power)."""
    return rng.exponential(1.0, size=size)


# --- JSON serialization -----------------------------------------------------
#
# Canonical keys mirror the config field names in base units (meters, per m^2,
# mW).  Convenience forms: "P_dbm"/"Q_dbm", "rho_db", and "<name>_per_km2" for
# lambda, mu, and a constant nu.  "nu" may be a constant density or a list of
# [break_radius_m, density_per_m2] steps.

_PER_KM2 = 1e-6  # per km^2 -> per m^2


def config_to_json_dict(cfg: NetworkConfig) -> dict:
    return {
        "R_c": cfg.R_c,
        "R": cfg.R,
        "lambda": cfg.lam,
        "mu": cfg.mu,
        "nu": [[r, d] for r, d in zip(cfg.nu.break_radii, cfg.nu.densities)],
        "P": cfg.P,
        "Q": cfg.Q,
        "rho": cfg.rho,
        "gamma": cfg.gamma,
        "T": cfg.T,
        "A": cfg.A,
    }


def config_from_json_dict(doc: dict) -> NetworkConfig:
    doc = dict(doc)

    def density(name: str) -> float:
        if f"{name}_per_km2" in doc:
            return float(doc[f"{name}_per_km2"]) * _PER_KM2
        return float(doc[name])

    r_c = float(doc["R_c"])
    r = float(doc["R"])
    if "nu_per_km2" in doc:
        nu = IntensityProfile.constant(float(doc["nu_per_km2"]) * _PER_KM2, r)
    else:
        raw = doc["nu"]
        if isinstance(raw, (int, float)):
            nu = IntensityProfile.constant(float(raw), r)
        else:
            nu = IntensityProfile(
                tuple(float(step[0]) for step in raw),
                tuple(float(step[1]) for step in raw),
            )
    p = dbm_to_mw(float(doc["P_dbm"])) if "P_dbm" in doc else float(doc["P"])
    q = dbm_to_mw(float(doc["Q_dbm"])) if "Q_dbm" in doc else float(doc["Q"])
    rho = 10.0 ** (float(doc["rho_db"]) / 10.0) if "rho_db" in doc else float(doc["rho"])
    return NetworkConfig(
        R_c=r_c,
        R=r,
        lam=density("lambda"),
        mu=density("mu"),
        nu=nu,
        P=p,
        Q=q,
        rho=rho,
        gamma=float(doc["gamma"]),
        T=float(doc["T"]),
        A=float(doc.get("A", 1.0)),
    )


def load_config(path) -> NetworkConfig:
    with open(path) as f:
        return config_from_json_dict(json.load(f))


def save_config(cfg: NetworkConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(config_to_json_dict(cfg), f, indent=2)


def with_rho(cfg: NetworkConfig, rho: float):
    """Copy of ``cfg`` with a different power-enhancement factor."""
    return replace(cfg, rho=rho)
