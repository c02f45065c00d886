import numpy as np
import pytest

from cran_loadscale import Association, NetworkInstance, best_rrh_association


def random_instance(rng, m, n, load_limit=None, noise=0.1, cross=0.3):
    """Small normalized instance (M*B = 1) with a dominant diagonal-ish gain pattern."""
    gain2 = rng.uniform(0.01, cross, size=(m, n))
    home = rng.integers(0, m, size=n)
    gain2[home, np.arange(n)] = rng.uniform(0.5, 1.0, size=n)
    if load_limit is None:
        load_limit = float(rng.uniform(0.4, 1.0))
    return NetworkInstance(
        power=rng.uniform(0.5, 2.0, size=m),
        amp_gain=np.sqrt(gain2),
        noise_power=noise,
        num_rbs=1,
        rb_bandwidth=1.0,
        demand=rng.uniform(0.05, 0.4, size=n),
        load_limit=load_limit,
    )


def random_target(rng, n):
    size = int(rng.integers(1, n + 1))
    return tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))


def random_case(seed, m=None, n=None):
    rng = np.random.default_rng(seed)
    m = m or int(rng.integers(2, 4))
    n = n or int(rng.integers(2, 6))
    inst = random_instance(rng, m, n)
    return inst, best_rrh_association(inst), random_target(rng, n)


def single_ue(demand=1.0, power=3.0, gain2=1.0):
    """One RRH, one UE, unit noise and bandwidth."""
    return NetworkInstance(power=[power], amp_gain=[[np.sqrt(gain2)]], noise_power=1.0,
                           num_rbs=1, rb_bandwidth=1.0, demand=[demand])


def assoc(rows):
    return Association(np.array(rows, dtype=bool))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
