"""Seeded random C-RAN snapshots.

RRHs and UEs are dropped uniformly in one hexagon. Link gains combine
COST-231-Hata path loss, log-normal shadowing and a static Rayleigh power
factor. Demands are drawn as relative weights and then scaled so that the
non-CoMP baseline exactly reaches the load limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .comp import best_rrh_association
from .network import Association, NetworkInstance
from .solver import ScalingProblem, solve_max_alpha

__all__ = [
    "ScenarioConfig",
    "Scenario",
    "cost231_hata",
    "sample_hexagon",
    "generate",
    "generate_scenario",
    "calibrate_demand",
]


@dataclass(frozen=True)
class ScenarioConfig:
    hexagon_radius: float = 500.0  # m
    carrier_freq: float = 2000.0  # MHz
    num_ues: int = 100
    num_rrhs: int = 10
    shadowing_sigma: float = 3.0  # dB
    noise_psd: float = -173.0  # dBm/Hz
    rb_bandwidth: float = 180e3  # Hz
    total_bandwidth: float = 20e6  # Hz
    power_per_rb: float = 400.0  # mW
    load_limit: float = 1.0
    rng_seed: int = 0
    bs_height: float = 30.0  # m
    ue_height: float = 1.5  # m
    city_correction: float = 0.0  # dB, 0 for medium city
    min_distance: float = 10.0  # m
    demand_low: float = 0.5
    demand_high: float = 1.5
    demand_unit: float = 1e6  # bit/s, removed by calibration
    calibrate: bool = True
    calibration_epsilon: float = 1e-12

    def __post_init__(self):
        positive = ("hexagon_radius", "carrier_freq", "shadowing_sigma", "rb_bandwidth",
                    "total_bandwidth", "power_per_rb", "bs_height", "ue_height",
                    "min_distance", "demand_low", "demand_unit", "calibration_epsilon")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.num_ues < 1 or self.num_rrhs < 1:
            raise ValueError("num_ues and num_rrhs must be at least 1")
        if not 0 < self.load_limit <= 1:
            raise ValueError("load_limit must lie in (0, 1]")
        if self.demand_high < self.demand_low:
            raise ValueError("demand_high must be >= demand_low")
        if self.num_rbs < 1:
            raise ValueError("total_bandwidth must hold at least one RB")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def num_rbs(self) -> int:
        return int(math.floor(self.total_bandwidth / self.rb_bandwidth + 1e-9))

    @property
    def noise_power(self) -> float:
        """Noise per RB in watts."""
        return 10.0 ** ((self.noise_psd - 30.0) / 10.0) * self.rb_bandwidth

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scenario config keys: {sorted(unknown)}")
        return cls(**doc)

    def replace(self, **changes) -> "ScenarioConfig":
        doc = asdict(self)
        doc.update(changes)
        return ScenarioConfig(**doc)


def cost231_hata(distance_km, freq_mhz=2000.0, bs_height=30.0, ue_height=1.5, city_correction=0.0):
    """COST-231-Hata path loss in dB (urban mobile-antenna correction)."""
    d = np.asarray(distance_km, dtype=float)
    lf = math.log10(freq_mhz)
    a_hm = (1.1 * lf - 0.7) * ue_height - (1.56 * lf - 0.8)
    return (46.3 + 33.9 * lf - 13.82 * math.log10(bs_height) - a_hm
            + (44.9 - 6.55 * math.log10(bs_height)) * np.log10(d) + city_correction)


def in_hexagon(xy, radius):
    """Flat-topped regular hexagon of circumradius ``radius`` centred at the origin."""
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    s3 = math.sqrt(3.0)
    return (y <= s3 / 2 * radius) & (s3 * x + y <= s3 * radius)


def sample_hexagon(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    out = np.empty((0, 2))
    half_h = math.sqrt(3.0) / 2 * radius
    while len(out) < count:
        batch = rng.uniform((-radius, -half_h), (radius, half_h), size=(2 * count, 2))
        out = np.vstack([out, batch[in_hexagon(batch, radius)]])
    return out[:count]


@dataclass
class Scenario:
    instance: NetworkInstance
    baseline: Association
    rrh_positions: np.ndarray
    ue_positions: np.ndarray
    config: ScenarioConfig

    def sidecar(self) -> dict:
        return {
            "seed": int(self.config.rng_seed),
            "config": asdict(self.config),
            "rrh_positions": self.rrh_positions.tolist(),
            "ue_positions": self.ue_positions.tolist(),
        }

    def write(self, out_dir, stem: str = "instance"):
        from .network import save_instance

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_instance(out / f"{stem}.json", self.instance, self.baseline)
        (out / f"{stem}.scenario.json").write_text(json.dumps(self.sidecar(), indent=1))
        return out / f"{stem}.json"


def generate_scenario(config: ScenarioConfig) -> Scenario:
    rng = np.random.default_rng(int(config.rng_seed))
    m, n = config.num_rrhs, config.num_ues
    rrh_xy = sample_hexagon(rng, m, config.hexagon_radius)
    ue_xy = sample_hexagon(rng, n, config.hexagon_radius)
    dist = np.linalg.norm(rrh_xy[:, None, :] - ue_xy[None, :, :], axis=-1)
    dist = np.maximum(dist, config.min_distance)
    pl_db = cost231_hata(dist / 1000.0, config.carrier_freq, config.bs_height,
                         config.ue_height, config.city_correction)
    shadow_db = rng.normal(0.0, config.shadowing_sigma, size=(m, n))
    rayleigh = rng.exponential(1.0, size=(m, n))
    power_gain = 10.0 ** ((-pl_db + shadow_db) / 10.0) * rayleigh
    weights = rng.uniform(config.demand_low, config.demand_high, size=n)

    instance = NetworkInstance(
        power=np.full(m, config.power_per_rb / 1000.0),
        amp_gain=np.sqrt(power_gain),
        noise_power=config.noise_power,
        num_rbs=config.num_rbs,
        rb_bandwidth=config.rb_bandwidth,
        demand=weights * config.demand_unit,
        load_limit=config.load_limit,
    )
    baseline = best_rrh_association(instance)
    if config.calibrate:
        instance = calibrate_demand(instance, baseline, config.calibration_epsilon)
    return Scenario(instance, baseline, rrh_xy, ue_xy, config)


def generate(config: ScenarioConfig) -> tuple[NetworkInstance, Association]:
    """Deterministic instance and best-RRH baseline association for ``config``."""
    sc = generate_scenario(config)
    return sc.instance, sc.baseline


def calibrate_demand(instance: NetworkInstance, baseline: Association, epsilon: float = 1e-12,
                     max_iters: int = 100_000) -> NetworkInstance:
    """Scale all demands so the baseline fixed point has max load exactly ``load_limit``."""
    problem = ScalingProblem(tuple(range(instance.num_ues)), epsilon)
    res = solve_max_alpha(instance, baseline, problem, max_iters)
    return instance.with_demand(instance.demand * res.alpha_star)
