import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cran_loadscale import (
    Association,
    NetworkInstance,
    UnservedUeError,
    ZeroCapacityError,
    capacity,
    f_alpha,
    h_max_load,
    interference_map,
    load_from_allocation,
    sinr,
)
from cran_loadscale.network import load_instance, save_instance, target_mask

from conftest import assoc, random_case, single_ue

TWO_OVER_LOG2_13 = 0.5404763088546395
ONE_OVER_LOG2_175 = 1.2386126258466668


def unit_instance(m, n, power, gain2, demand, noise=1.0):
    return NetworkInstance(power=power, amp_gain=np.sqrt(np.asarray(gain2, float)),
                           noise_power=noise, num_rbs=1, rb_bandwidth=1.0, demand=demand)


class TestSinr:
    def test_single_serving_rrh(self):
        assert sinr(single_ue(), assoc([[1]]), [0.0], 0) == pytest.approx(3.0, abs=1e-12)

    def test_two_serving_rrhs_add_coherently(self):
        inst = unit_instance(2, 1, [3.0, 3.0], [[1.0], [1.0]], [2.0])
        assert sinr(inst, assoc([[1], [1]]), [0.0, 0.0], 0) == pytest.approx(12.0, abs=1e-12)

    def test_three_unit_interferers(self):
        # each interferer: p=3, gain^2=1/3, load 1 -> w = 1
        inst = unit_instance(4, 1, [3.0] * 4, [[1.0], [1 / 3], [1 / 3], [1 / 3]], [1.0])
        a = assoc([[1], [0], [0], [0]])
        assert sinr(inst, a, [0.0, 1.0, 1.0, 1.0], 0) == pytest.approx(0.75, abs=1e-12)

    def test_vector_form_matches_per_ue(self):
        inst, a, _ = random_case(3)
        rho = np.linspace(0.1, 0.9, inst.num_rrhs)
        full = sinr(inst, a, rho)
        assert np.allclose(full, [sinr(inst, a, rho, j) for j in range(inst.num_ues)], rtol=1e-14)

    def test_unserved_ue_is_an_error(self):
        inst = unit_instance(1, 2, [1.0], [[1.0, 1.0]], [1.0, 1.0])
        with pytest.raises(UnservedUeError):
            sinr(inst, assoc([[1, 0]]), [0.5])
        with pytest.raises(UnservedUeError):
            sinr(inst, assoc([[1, 0]]), [0.5], ue=1)

    def test_negative_load_rejected(self):
        with pytest.raises(ValueError):
            sinr(single_ue(), assoc([[1]]), [-0.1])


class TestCapacity:
    def test_normalized(self):
        assert capacity(single_ue(), assoc([[1]]), [0.0], 0) == pytest.approx(2.0, abs=1e-12)

    def test_zero_serving_gain(self):
        assert capacity(single_ue(gain2=0.0), assoc([[1]]), [0.0], 0) == 0.0

    def test_physical_units(self):
        inst = NetworkInstance(power=[3.0], amp_gain=[[1.0]], noise_power=1.0, num_rbs=100,
                               rb_bandwidth=180e3, demand=[1.0])
        assert capacity(inst, assoc([[1]]), [0.0], 0) == pytest.approx(3.6e7, rel=1e-12)


class TestLoads:
    def test_idle_rrh(self):
        rho = load_from_allocation(assoc([[1, 1], [0, 0]]), [0.3, 0.9])
        assert rho[1] == 0.0

    def test_identity(self):
        rho = load_from_allocation(assoc([[1, 0], [0, 1]]), [0.3, 0.9])
        assert np.allclose(rho, [0.3, 0.9])

    def test_overload_is_representable(self):
        rho = load_from_allocation(assoc([[1, 1]]), [0.3, 0.9])
        assert rho[0] == pytest.approx(1.2)

    def test_h_examples(self):
        a = assoc([[1, 0], [0, 1]])
        assert h_max_load(a, [0.0, 0.0], 1.0) == 0.0
        assert h_max_load(a, [0.3, 1.0], 1.0) == 1.0
        assert h_max_load(a, [0.3, 0.4], 0.5) == pytest.approx(0.8)


class TestInterferenceMap:
    def test_unit_gadget_full_load(self):
        assert interference_map(single_ue(demand=2.0), assoc([[1]]), [0.0])[0] == pytest.approx(1.0)

    def test_dual_serving(self):
        inst = unit_instance(2, 1, [3.0, 3.0], [[1.0], [1.0]], [2.0])
        f = interference_map(inst, assoc([[1], [1]]), [0.0])
        assert f[0] == pytest.approx(TWO_OVER_LOG2_13, abs=1e-12)
        assert TWO_OVER_LOG2_13 == pytest.approx(2 / math.log2(13), abs=1e-15)

    def test_clause_overload(self):
        # three interfering RRHs, each fully loaded through its own UE
        gain2 = [[1.0, 0, 0, 0], [1 / 3, 1, 0, 0], [1 / 3, 0, 1, 0], [1 / 3, 0, 0, 1]]
        inst = unit_instance(4, 4, [3.0] * 4, gain2, [1.0, 2.0, 2.0, 2.0])
        a = assoc(np.eye(4))
        f = interference_map(inst, a, [0.0, 1.0, 1.0, 1.0])
        assert f[0] == pytest.approx(ONE_OVER_LOG2_175, abs=1e-12)
        assert f[0] > 1.0

    def test_zero_capacity_error(self):
        with pytest.raises(ZeroCapacityError):
            interference_map(single_ue(gain2=0.0), assoc([[1]]), [0.0])


class TestFAlpha:
    def decoupled(self):
        inst = unit_instance(2, 2, [3.0, 3.0], [[1.0, 0.0], [0.0, 1.0]], [0.8, 1.2])
        return inst, assoc([[1, 0], [0, 1]])

    def test_toy_division(self):
        inst, a = self.decoupled()
        assert np.allclose(interference_map(inst, a, [0, 0]), [0.4, 0.6])
        assert np.allclose(f_alpha(inst, a, [0, 0], 2.0, [0]), [0.4, 0.3])

    def test_full_target_set_is_f(self):
        inst, a, _ = random_case(7)
        mu = np.full(inst.num_ues, 0.1)
        f = interference_map(inst, a, mu)
        assert np.array_equal(f_alpha(inst, a, mu, 3.7, range(inst.num_ues)), f)
        assert np.array_equal(f_alpha(inst, a, mu, 1.0, [0]), f)

    def test_alpha_must_be_positive(self):
        inst, a = self.decoupled()
        with pytest.raises(ValueError):
            f_alpha(inst, a, [0, 0], 0.0, [0])

    def test_mask_or_indices(self):
        inst, a = self.decoupled()
        mask = np.array([True, False])
        assert np.array_equal(f_alpha(inst, a, [0.1, 0.1], 2.0, mask), f_alpha(inst, a, [0.1, 0.1], 2.0, [0]))

    def test_target_mask_validation(self):
        with pytest.raises(ValueError):
            target_mask(3, [])
        with pytest.raises(ValueError):
            target_mask(3, [3])


class TestValidation:
    @pytest.mark.parametrize("field,value", [
        ("power", [0.0]), ("amp_gain", [[-1.0]]), ("noise_power", 0.0),
        ("demand", [0.0]), ("load_limit", 1.5), ("load_limit", 0.0), ("num_rbs", 0),
    ])
    def test_rejects_bad_fields(self, field, value):
        kw = dict(power=[1.0], amp_gain=[[1.0]], noise_power=1.0, num_rbs=1, rb_bandwidth=1.0,
                  demand=[1.0], load_limit=1.0)
        kw[field] = value
        with pytest.raises(ValueError):
            NetworkInstance(**kw)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            NetworkInstance(power=[1.0, 1.0], amp_gain=[[1.0]], noise_power=1.0, num_rbs=1,
                            rb_bandwidth=1.0, demand=[1.0])

    def test_arrays_are_frozen(self):
        inst = single_ue()
        with pytest.raises(ValueError):
            inst.demand[0] = 5.0

    def test_association_views(self):
        a = assoc([[1, 0, 1], [1, 1, 0]])
        assert a.serving_rrhs(0) == [0, 1]
        assert a.served_ues(0) == [0, 2]
        assert a.comp_ues() == [0]
        assert Association.from_serving((2, 3), [[0, 1], [1], [0]]) == a
        with pytest.raises(UnservedUeError):
            assoc([[1, 0], [0, 0]]).require_served()
        with pytest.raises(ValueError):
            Association(np.array([[2, 0]]))


def test_json_round_trip(tmp_path):
    inst, a, _ = random_case(11)
    save_instance(tmp_path / "x.json", inst, a)
    inst2, a2 = load_instance(tmp_path / "x.json")
    assert a2 == a
    assert np.array_equal(inst2.amp_gain, inst.amp_gain)
    assert np.array_equal(inst2.demand, inst.demand)
    assert inst2.load_limit == inst.load_limit
    save_instance(tmp_path / "y.json", inst)
    assert load_instance(tmp_path / "y.json")[1] is None


# -- standard interference function properties -----------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(1.01, 10.0))
def test_f_monotone_and_scalable(seed, beta):
    inst, a, target = random_case(seed)
    rng = np.random.default_rng(seed + 1)
    mu = rng.uniform(0, 0.5, inst.num_ues)
    mu_hi = mu + rng.uniform(0, 0.5, inst.num_ues)
    f = interference_map(inst, a, mu)
    assert np.all(interference_map(inst, a, mu_hi) >= f)
    assert np.all(beta * f > interference_map(inst, a, beta * mu))
    alpha = float(rng.uniform(0.2, 5.0))
    fa = f_alpha(inst, a, mu, alpha, target)
    assert np.all(f_alpha(inst, a, mu_hi, alpha, target) >= fa)
    assert np.all(beta * fa > f_alpha(inst, a, beta * mu, alpha, target))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_interference_linear_in_load(seed):
    inst, a, _ = random_case(seed)
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 1.0, inst.num_rrhs)

    def interference(r):
        g = sinr(inst, a, r)
        signal = np.where(a.kappa, inst.signal_amplitude, 0).sum(axis=0) ** 2
        return signal / g - inst.noise_power

    k = int(rng.integers(inst.num_rrhs))
    doubled = rho.copy()
    doubled[k] *= 2
    base = interference(rho)
    w_k = np.where(a.kappa[k], 0.0, inst.rx_power[k] * rho[k])
    assert np.allclose(interference(doubled) - base, w_k, rtol=1e-9, atol=1e-12)
    silent = rho.copy()
    silent[k] = 0.0
    assert np.allclose(base - interference(silent), w_k, rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.0, 50.0))
def test_h_positively_homogeneous(seed, c):
    inst, a, _ = random_case(seed)
    mu = np.random.default_rng(seed).uniform(0, 1, inst.num_ues)
    assert h_max_load(a, c * mu, inst.load_limit) == pytest.approx(c * h_max_load(a, mu, inst.load_limit),
                                                                   rel=1e-12, abs=1e-15)
