import math
import warnings

import numpy as np
import pytest

from quermass.params import QuermassParams, RadiusLaw, local_bounds


def test_defaults_pick_a_law():
    assert QuermassParams(r0=1, r1=1).radius_law.kind == "fixed"
    assert QuermassParams(r0=0.5, r1=1).radius_law == RadiusLaw.uniform(0.5, 1)


@pytest.mark.parametrize("kw", [dict(z=0), dict(z=-1), dict(r0=0), dict(r0=2, r1=1), dict(theta1=math.inf)])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        QuermassParams(**kw)


def test_law_outside_radius_bounds_is_an_error():
    with pytest.raises(ValueError):
        QuermassParams(r0=1, r1=2, radius_law=RadiusLaw.fixed(3))


def test_law_away_from_bounds_only_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        QuermassParams(r0=1, r1=2, radius_law=RadiusLaw.fixed(1.5))
    assert any("bounds could be tightened" in str(x.message) for x in w)


def test_sampling_stays_in_support():
    rng = np.random.default_rng(0)
    law = RadiusLaw.discrete([0.5, 1.0], [1, 3])
    draws = [law.sample(rng) for _ in range(2000)]
    assert set(draws) <= {0.5, 1.0}
    assert np.mean(np.array(draws) == 1.0) == pytest.approx(0.75, abs=0.04)
    u = RadiusLaw.uniform(0.5, 1.0)
    assert all(0.5 <= u.sample(rng) <= 1.0 for _ in range(200))


def test_law_roundtrip():
    for law in (RadiusLaw.fixed(1), RadiusLaw.uniform(0.5, 1), RadiusLaw.discrete([1, 2], [0.5, 0.5])):
        assert RadiusLaw.from_dict(law.to_dict()) == law


def test_cdf():
    assert RadiusLaw.uniform(1, 3).cdf([1.5, 4]).tolist() == [0.25, 1.0]
    assert RadiusLaw.discrete([1, 2], [1, 3]).cdf([1.5, 2]).tolist() == [0.25, 1.0]


def test_bounds_equal_radii():
    b = local_bounds(1.0, 1.0)
    assert b["area"] == (0.0, math.pi)
    assert b["perimeter"] == (-8 * math.pi, 2 * math.pi)
    assert b["components"] == (-2 * math.pi, 1.0)
