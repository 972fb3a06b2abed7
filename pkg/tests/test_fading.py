import json
import math

import numpy as np
import pytest
from scipy import special

from marcsep import instances
from marcsep.dm_regions import EntropyVector, entropy_vector
from marcsep.fading import (
    FadingMarcConfig,
    ergodic_rate_closed_form,
    ergodic_rate_monte_carlo,
    fading_kappa_star,
    fading_report,
    mabrc_check,
    mabrc_kappa_star,
    phase_conditions,
    phase_converse_kappa,
    phase_region,
    rayleigh_conditions,
    rayleigh_region,
    sweep_configs,
)


def cfg(kind="phase", **kw):
    base = dict(a11=1, a21=1, a31=1, a13=4, a23=4, P1=1, P2=1, P3=1)
    base.update(kw)
    return FadingMarcConfig(**base, kind=kind)


def phi(x):
    return math.exp(1 / x) * special.exp1(1 / x)


# ---------------------------------------------------------------- phase


def test_phase_worked_example():
    r = phase_region(cfg())
    assert (r.c1, r.c2, r.csum) == pytest.approx((math.log2(3), math.log2(3), 2.0), abs=1e-14)
    assert (r.c1, r.c2) == pytest.approx((1.58496, 1.58496), abs=5e-6)
    assert r.conditions_hold
    assert r.condition_slack == (14.0, 14.0, 29.0)


def test_phase_zero_power_gives_zero_rates():
    r = phase_region(cfg(P1=0, P2=0, P3=0))
    assert r.dest == (0.0, 0.0, 0.0)
    assert r.relay == (0.0, 0.0, 0.0)


def test_phase_violation_detected():
    holds, slack = phase_conditions(cfg(a13=0.5))
    assert not holds and slack[0] < 0 and slack[1] > 0


def test_phase_converse_identity():
    ent = entropy_vector(instances.doubly_symmetric_sources())
    c = cfg(a11=0.7, a21=1.3, a31=0.9, P2=3.0)
    assert phase_converse_kappa(c, ent) == pytest.approx(fading_kappa_star(phase_region(c), ent), abs=1e-14)


def test_kind_mismatch_and_bad_values():
    with pytest.raises(ValueError):
        phase_region(cfg(kind="rayleigh"))
    with pytest.raises(ValueError):
        rayleigh_conditions(cfg())
    with pytest.raises(ValueError):
        cfg(P1=-1)
    with pytest.raises(ValueError):
        cfg(kind="ricean")


# ---------------------------------------------------------------- rayleigh


def test_closed_form_single_link():
    # E log2(1 + |U|^2) = e E1(1) / ln 2
    assert ergodic_rate_closed_form(1.0) == pytest.approx(math.e * special.exp1(1.0) / math.log(2), rel=1e-14)
    assert ergodic_rate_closed_form(1.0) == pytest.approx(0.860347, abs=1e-6)
    assert ergodic_rate_closed_form(0.0) == 0.0


def test_rayleigh_single_link_within_ci():
    c = cfg("rayleigh", a21=0, a31=0, a13=1, a23=1)
    region, est = rayleigh_region(c, samples=200_000, seed=3)
    assert est[0].covers(ergodic_rate_closed_form(1.0))
    assert est[0].sample_count == 200_000
    assert region.c2 == 0.0


def test_monte_carlo_seeded_and_worker_independent():
    a = ergodic_rate_monte_carlo([1.0, 2.0], samples=300_000, seed=9)
    b = ergodic_rate_monte_carlo([1.0, 2.0], samples=300_000, seed=9, workers=3)
    c = ergodic_rate_monte_carlo([1.0, 2.0], samples=300_000, seed=10)
    assert a == b
    assert a.mean != c.mean


def test_two_term_expectation_by_quadrature():
    # E log2(1 + s1 E1 + s2 E2) for independent exponentials has the
    # hypoexponential density (e^{-t/s1} - e^{-t/s2}) / (s1 - s2)
    from scipy import integrate

    s1, s2 = 1.5, 0.4
    dens = lambda t: (math.exp(-t / s1) - math.exp(-t / s2)) / (s1 - s2)  # noqa: E731
    exact, _ = integrate.quad(lambda t: math.log2(1 + t) * dens(t), 0, np.inf)
    est = ergodic_rate_monte_carlo([s1, s2], samples=400_000, seed=1)
    assert abs(est.mean - exact) <= 2 * est.half_width_95


def test_rayleigh_conditions_against_direct_formula():
    c = cfg("rayleigh", a13=3, a23=5)
    holds, slack, limit = rayleigh_conditions(c)
    g13, g23 = 9.0, 25.0
    expect = (
        g13 / phi(g13) - 3,
        g23 / phi(g23) - 3,
        (g23 - g13) / (phi(g23) - phi(g13)) - 4,
    )
    assert slack == pytest.approx(expect, rel=1e-12)
    assert holds and not limit


def test_rayleigh_equal_relay_gains_use_limit():
    holds, slack, limit = rayleigh_conditions(cfg("rayleigh", a13=3, a23=3))
    _, near, _ = rayleigh_conditions(cfg("rayleigh", a13=3, a23=3.001))
    assert limit
    assert slack[2] == pytest.approx(near[2], rel=1e-3)


def test_rayleigh_dead_relay_link_fails():
    holds, slack, _ = rayleigh_conditions(cfg("rayleigh", a13=0))
    assert not holds
    assert slack[0] == -math.inf and slack[2] == -math.inf


# ---------------------------------------------------------------- mabrc


def test_mabrc_check_and_kappa():
    good = instances.doubly_symmetric_sources(0.1, w="const", w3="pair")
    holds, slack = mabrc_check(good)
    assert holds and min(slack) > 0
    region = phase_region(cfg())
    ent = entropy_vector(good)
    assert mabrc_kappa_star(region, ent) == pytest.approx(fading_kappa_star(region, ent), abs=1e-15)
    bad = instances.doubly_symmetric_sources(0.1, w="s1", w_noise=0.0, w3="const")
    assert not mabrc_check(bad)[0]


def test_mabrc_kappa_exceeds_marc_when_relay_link_weak():
    ent = EntropyVector(0.5, 0.5, 1.0, 0.5, 0.5, 1.0)
    region = phase_region(cfg(a13=0.5, a23=0.5))
    assert mabrc_kappa_star(region, ent) > fading_kappa_star(region, ent)


# ---------------------------------------------------------------- reports


def test_fading_report_json_roundtrip():
    rep = fading_report(cfg("rayleigh"), instances.doubly_symmetric_sources(), samples=20_000, seed=0)
    d = json.loads(json.dumps(rep.to_dict()))
    assert set(d["monte_carlo"]) == {"c1", "c2", "csum"}
    assert d["mabrc"]["conditions_hold"] is True
    assert d["kappa_star"] == pytest.approx(rep.kappa_star)


def test_sweep_configs():
    out = sweep_configs(cfg(), "P3", [0.5, 1.0, 2.0])
    assert [c.P3 for c in out] == [0.5, 1.0, 2.0]
    with pytest.raises(ValueError):
        sweep_configs(cfg(), "kind", [1])
