"""SystemParams / CodeParams validation and warnings."""

import math

import pytest

from d2ddelay import CodeParams, SystemParams


def test_lam_derived_from_mu():
    params = SystemParams(m=30, mu=2.0, omega=0.02, t_d=0.05, t_bs=0.5, delta=1.0)
    assert params.lam == 2.0


def test_lam_mismatch_rejected():
    with pytest.raises(ValueError, match="lam"):
        SystemParams(m=30, mu=1.0, omega=0.02, t_d=0.05, t_bs=0.5, delta=1.0, lam=0.5)


@pytest.mark.parametrize(
    "field,value",
    [("m", 0.0), ("m", -2.0), ("mu", 0.0), ("omega", -0.1),
     ("t_d", 0.0), ("t_bs", -1.0), ("delta", 0.0)],
)
def test_rejects_nonpositive(field, value):
    kwargs = dict(m=30.0, mu=1.0, omega=0.02, t_d=0.05, t_bs=0.5, delta=1.0)
    kwargs[field] = value
    with pytest.raises(ValueError, match=field):
        SystemParams(**kwargs)


@pytest.mark.parametrize("field", ["m", "mu", "t_d", "delta"])
def test_rejects_non_finite(field):
    kwargs = dict(m=30.0, mu=1.0, omega=0.02, t_d=0.05, t_bs=0.5, delta=1.0)
    kwargs[field] = math.inf
    with pytest.raises(ValueError, match=field):
        SystemParams(**kwargs)


def test_slow_d2d_link_warns_but_builds():
    with pytest.warns(UserWarning, match="t_bs"):
        params = SystemParams(m=30, mu=1.0, omega=0.02, t_d=0.5, t_bs=0.05, delta=1.0)
    assert params.t_bs == 0.05


def test_code_bounds():
    with pytest.raises(ValueError):
        CodeParams(0, 0)
    with pytest.raises(ValueError):
        CodeParams(2, 3)
    with pytest.raises(ValueError):
        CodeParams(2.0, 1)  # type: ignore[arg-type]
    assert CodeParams(4, 2).n == 4


def test_large_code_warns_against_population():
    with pytest.warns(UserWarning, match="storage-depletion"):
        CodeParams(12, 6).warn_if_large_for(30.0)
