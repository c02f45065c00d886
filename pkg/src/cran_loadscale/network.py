"""Load-coupling model of a C-RAN.

Holds the static network description, the RRH/UE association matrix and the
pure evaluation maps built on top of them: SINR, capacity, RRH load, the
interference map ``f`` (resource fraction each UE needs), its
target-weighted variant ``F_alpha`` and the normalized max-load ``H``.

Vectors are plain ``numpy`` float arrays: an allocation ``mu`` has one entry
per UE, a load ``rho`` one entry per RRH. Indices are 0-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UnservedUeError, ZeroCapacityError

__all__ = [
    "NetworkInstance",
    "Association",
    "target_mask",
    "sinr",
    "capacity",
    "load_from_allocation",
    "interference_map",
    "f_alpha",
    "scaled_demand_map",
    "h_max_load",
    "allocation_from_load",
    "save_instance",
    "load_instance",
]


@dataclass(frozen=True)
class NetworkInstance:
    """Static physics of one network snapshot.

    Parameters
    ----------
    power : array, shape (m,)
        Transmit power per RB of each RRH, watts.
    amp_gain : array, shape (m, n)
        Non-negative channel amplitude magnitudes ``sqrt(|h_ij|^2)``.
    noise_power : float
        Noise power per RB, watts.
    num_rbs, rb_bandwidth : int, float
        ``M`` and ``B``; capacity is ``M * B * log2(1 + sinr)``.
    demand : array, shape (n,)
        Bits demand per UE (bit/s, or normalized by ``M * B``).
    load_limit : float
        Maximum admissible RRH load, in ``(0, 1]``.
    """

    power: np.ndarray
    amp_gain: np.ndarray
    noise_power: float
    num_rbs: int
    rb_bandwidth: float
    demand: np.ndarray
    load_limit: float = 1.0

    def __post_init__(self):
        power = np.asarray(self.power, dtype=float).reshape(-1)
        amp = np.atleast_2d(np.asarray(self.amp_gain, dtype=float))
        demand = np.asarray(self.demand, dtype=float).reshape(-1)
        if amp.shape != (power.size, demand.size):
            raise ValueError(
                f"amp_gain shape {amp.shape} does not match "
                f"(num_rrhs={power.size}, num_ues={demand.size})"
            )
        if power.size == 0 or demand.size == 0:
            raise ValueError("need at least one RRH and one UE")
        if not np.all(power > 0):
            raise ValueError("all RRH powers must be positive")
        if not np.all(np.isfinite(amp)) or np.any(amp < 0):
            raise ValueError("amp_gain entries must be finite and non-negative")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not np.all(demand > 0):
            raise ValueError("all demands must be positive")
        if not 0 < self.load_limit <= 1:
            raise ValueError("load_limit must lie in (0, 1]")
        if int(self.num_rbs) < 1 or not self.rb_bandwidth > 0:
            raise ValueError("num_rbs and rb_bandwidth must be positive")
        for name, arr in (("power", power), ("amp_gain", amp), ("demand", demand)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "num_rbs", int(self.num_rbs))
        object.__setattr__(self, "rb_bandwidth", float(self.rb_bandwidth))
        object.__setattr__(self, "load_limit", float(self.load_limit))

    @property
    def num_rrhs(self) -> int:
        return self.power.size

    @property
    def num_ues(self) -> int:
        return self.demand.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.amp_gain.shape

    @cached_property
    def signal_amplitude(self) -> np.ndarray:
        """``sqrt(p_i) * |h_ij|``, the coherent per-link amplitude."""
        return np.sqrt(self.power)[:, None] * self.amp_gain

    @cached_property
    def rx_power(self) -> np.ndarray:
        """``p_i * |h_ij|^2``, received power at full load."""
        return self.power[:, None] * self.amp_gain**2

    @property
    def bandwidth(self) -> float:
        return self.num_rbs * self.rb_bandwidth

    def with_demand(self, demand) -> "NetworkInstance":
        return NetworkInstance(
            power=self.power,
            amp_gain=self.amp_gain,
            noise_power=self.noise_power,
            num_rbs=self.num_rbs,
            rb_bandwidth=self.rb_bandwidth,
            demand=demand,
            load_limit=self.load_limit,
        )

    def with_load_limit(self, load_limit: float) -> "NetworkInstance":
        return NetworkInstance(
            power=self.power,
            amp_gain=self.amp_gain,
            noise_power=self.noise_power,
            num_rbs=self.num_rbs,
            rb_bandwidth=self.rb_bandwidth,
            demand=self.demand,
            load_limit=load_limit,
        )

    def to_dict(self) -> dict:
        m, n = self.shape
        return {
            "m": m,
            "n": n,
            "power": self.power.tolist(),
            "amp_gain": self.amp_gain.tolist(),
            "noise_power": self.noise_power,
            "num_rbs": self.num_rbs,
            "rb_bandwidth": self.rb_bandwidth,
            "demand": self.demand.tolist(),
            "load_limit": self.load_limit,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkInstance":
        missing = {"power", "amp_gain", "noise_power", "num_rbs",
                   "rb_bandwidth", "demand", "load_limit"} - set(doc)
        if missing:
            raise ValueError(f"instance document missing keys: {sorted(missing)}")
        inst = cls(
            power=doc["power"],
            amp_gain=doc["amp_gain"],
            noise_power=doc["noise_power"],
            num_rbs=doc["num_rbs"],
            rb_bandwidth=doc["rb_bandwidth"],
            demand=doc["demand"],
            load_limit=doc["load_limit"],
        )
        if "m" in doc and int(doc["m"]) != inst.num_rrhs:
            raise ValueError(f"m={doc['m']} but power has {inst.num_rrhs} entries")
        if "n" in doc and int(doc["n"]) != inst.num_ues:
            raise ValueError(f"n={doc['n']} but demand has {inst.num_ues} entries")
        return inst


@dataclass(frozen=True)
class Association:
    """Binary RRH x UE CoMP-selection matrix ``kappa``.

    ``kappa[i, j]`` is True when RRH ``i`` serves UE ``j``. Construction only
    checks shape and binarity; call :meth:`require_served` (the solvers do)
    to enforce that every UE has a serving RRH.
    """

    kappa: np.ndarray = field(repr=False)

    def __post_init__(self):
        raw = np.atleast_2d(np.asarray(self.kappa))
        if raw.ndim != 2:
            raise ValueError("kappa must be a 2-D matrix")
        if raw.dtype != bool and not np.all((raw == 0) | (raw == 1)):
            raise ValueError("kappa entries must be 0 or 1")
        k = raw.astype(bool)
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)

    @classmethod
    def from_serving(cls, shape: tuple[int, int], serving: Sequence[Iterable[int]]):
        """Build from per-UE lists of serving RRH indices."""
        k = np.zeros(shape, dtype=bool)
        for j, rrhs in enumerate(serving):
            for i in rrhs:
                k[i, j] = True
        return cls(k)

    @property
    def shape(self) -> tuple[int, int]:
        return self.kappa.shape

    def serving_rrhs(self, ue: int) -> list[int]:
        return np.flatnonzero(self.kappa[:, ue]).tolist()

    def served_ues(self, rrh: int) -> list[int]:
        return np.flatnonzero(self.kappa[rrh]).tolist()

    def unserved_ues(self) -> list[int]:
        return np.flatnonzero(~self.kappa.any(axis=0)).tolist()

    def require_served(self) -> "Association":
        missing = self.unserved_ues()
        if missing:
            raise UnservedUeError(missing)
        return self

    def with_link(self, rrh: int, ue: int) -> "Association":
        k = self.kappa.copy()
        k[rrh, ue] = True
        return Association(k)

    def comp_ues(self) -> list[int]:
        """UEs served by two or more RRHs."""
        return np.flatnonzero(self.kappa.sum(axis=0) >= 2).tolist()

    def to_list(self) -> list[list[int]]:
        return self.kappa.astype(int).tolist()

    def __eq__(self, other):
        if not isinstance(other, Association):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.kappa, other.kappa))

    def __hash__(self):
        return hash((self.shape, self.kappa.tobytes()))


def target_mask(num_ues: int, target_set) -> np.ndarray:
    """Boolean mask of the target UE set ``S``."""
    idx = np.asarray(sorted(set(int(j) for j in target_set)), dtype=int)
    if idx.size == 0:
        raise ValueError("target set must be non-empty")
    if idx[0] < 0 or idx[-1] >= num_ues:
        raise ValueError(f"target set indices must lie in [0, {num_ues})")
    mask = np.zeros(num_ues, dtype=bool)
    mask[idx] = True
    return mask


def _check_shapes(instance: NetworkInstance, assoc: Association):
    if assoc.shape != instance.shape:
        raise ValueError(f"association shape {assoc.shape} != instance shape {instance.shape}")


def _sinr_vector(instance: NetworkInstance, kappa: np.ndarray, rho: np.ndarray) -> np.ndarray:
    unserved = ~kappa.any(axis=0)
    if unserved.any():
        raise UnservedUeError(np.flatnonzero(unserved))
    # amplitudes add before squaring: coherent joint transmission
    signal = np.where(kappa, instance.signal_amplitude, 0.0).sum(axis=0) ** 2
    interference = rho @ np.where(kappa, 0.0, instance.rx_power)
    return signal / (interference + instance.noise_power)


def sinr(instance: NetworkInstance, assoc: Association, rho, ue: int | None = None):
    """SINR of one UE (or of all UEs when ``ue`` is None) under loads ``rho``.

    Interference from a non-serving RRH ``k`` is ``p_k |h_kj|^2 rho_k``.
    """
    _check_shapes(instance, assoc)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (instance.num_rrhs,) or np.any(rho < 0):
        raise ValueError("rho must have one non-negative entry per RRH")
    if ue is None:
        return _sinr_vector(instance, assoc.kappa, rho)
    col = assoc.kappa[:, ue]
    if not col.any():
        raise UnservedUeError([ue])
    signal = instance.signal_amplitude[col, ue].sum() ** 2
    interference = float(rho[~col] @ instance.rx_power[~col, ue])
    return float(signal / (interference + instance.noise_power))


def capacity(instance: NetworkInstance, assoc: Association, rho, ue: int | None = None):
    """Achievable rate ``M * B * log2(1 + sinr)``."""
    return instance.bandwidth * np.log2(1.0 + sinr(instance, assoc, rho, ue))


def load_from_allocation(assoc: Association, mu) -> np.ndarray:
    """``rho_i = sum of mu_j over UEs served by i``. No clamping."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (assoc.shape[1],):
        raise ValueError("mu must have one entry per UE")
    return assoc.kappa @ mu


def allocation_from_load(instance: NetworkInstance, kappa: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``d_j / C_j(rho)`` with SINR evaluated under association ``kappa``.

    Works directly in the load domain, so the loads that set interference
    need not come from the same association that sets the serving sets.
    """
    cap = instance.bandwidth * np.log2(1.0 + _sinr_vector(instance, kappa, rho))
    zero = cap <= 0
    if zero.any():
        raise ZeroCapacityError(np.flatnonzero(zero))
    return instance.demand / cap


def interference_map(instance: NetworkInstance, assoc: Association, mu) -> np.ndarray:
    """The SIF ``f(mu)_j = d_j / C_j(rho(mu))``."""
    _check_shapes(instance, assoc)
    rho = load_from_allocation(assoc, mu)
    return allocation_from_load(instance, assoc.kappa, rho)


def _pi(mask: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(mask, 1.0, alpha)


def f_alpha(instance: NetworkInstance, assoc: Association, mu, alpha: float, target_set) -> np.ndarray:
    """``F_alpha(mu)_j = f_j(mu) / pi_j(alpha)``, ``pi_j = 1`` on ``S`` and ``alpha`` off it."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    mask = _as_mask(instance.num_ues, target_set)
    return interference_map(instance, assoc, mu) / _pi(mask, alpha)


def scaled_demand_map(instance: NetworkInstance, assoc: Association, mu, alpha: float, target_set) -> np.ndarray:
    """``alpha * F_alpha(mu)``: demands of ``S`` scaled by ``alpha``, others unscaled.

    Its fixed points are exactly the allocations that meet the scaled
    demands with equality.
    """
    mask = _as_mask(instance.num_ues, target_set)
    return interference_map(instance, assoc, mu) * np.where(mask, alpha, 1.0)


def _as_mask(n: int, target_set) -> np.ndarray:
    arr = np.asarray(target_set)
    if arr.dtype == bool and arr.shape == (n,):
        if not arr.any():
            raise ValueError("target set must be non-empty")
        return arr
    return target_mask(n, target_set)


def h_max_load(assoc: Association, mu, load_limit: float) -> float:
    """Normalized max RRH load ``max_i rho_i / load_limit``."""
    return float(load_from_allocation(assoc, mu).max() / load_limit)


def save_instance(path, instance: NetworkInstance, assoc: Association | None = None, **extra):
    doc = instance.to_dict()
    if assoc is not None:
        _check_shapes(instance, assoc)
        doc["kappa"] = assoc.to_list()
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_instance(path) -> tuple[NetworkInstance, Association | None]:
    doc = json.loads(Path(path).read_text())
    inst = NetworkInstance.from_dict(doc)
    assoc = None
    if doc.get("kappa") is not None:
        assoc = Association(np.asarray(doc["kappa"]))
        _check_shapes(inst, assoc)
    return inst, assoc
