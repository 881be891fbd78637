import math

import numpy as np
import pytest

from bq.analytic import (
    THETA_BREAKPOINT,
    ThetaState,
    binary_entropy,
    f2_mes,
    f2_two_qubit,
    mi_continuity_bound,
    power_upsilon,
)
from bq.qmat import DensityMatrix, mutual_information
from conftest import rand_density, trace_distance


def test_theta_state_range():
    ThetaState(math.pi / 4)
    with pytest.raises(ValueError, match="theta"):
        ThetaState(0.0)
    with pytest.raises(ValueError, match="theta"):
        ThetaState(1.0)


def test_theta_state_builds_density():
    rho = ThetaState(math.pi / 6).state()
    assert rho.dims == (2, 2)
    assert rho.entries[0, 0] == pytest.approx(0.75)


def test_f2_mes_values():
    assert f2_mes(2) == pytest.approx(0.8660254037844386, abs=1e-12)
    assert f2_mes(3) == pytest.approx(0.816496580927726, abs=1e-12)


def test_f2_mes_decreasing_and_bounded():
    vals = [f2_mes(d) for d in range(2, 65)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 1 / math.sqrt(2) for v in vals)


def test_f2_two_qubit_values():
    assert f2_two_qubit(ThetaState(math.pi / 6)) == pytest.approx(
        0.9267766952966369, abs=1e-12
    )
    assert f2_two_qubit(ThetaState(math.pi / 4)) == pytest.approx(
        0.8660254037844386, abs=1e-12
    )


def test_f2_two_qubit_branch_continuity():
    eps = 1e-9
    below = f2_two_qubit(ThetaState(THETA_BREAKPOINT - eps))
    at = f2_two_qubit(ThetaState(THETA_BREAKPOINT))
    above = f2_two_qubit(ThetaState(THETA_BREAKPOINT + eps))
    assert at == pytest.approx(0.878679656440357, abs=1e-12)
    assert abs(below - at) < 1e-8
    assert abs(above - at) < 1e-8


def test_f2_two_qubit_monotone_grid():
    thetas = np.linspace(1e-6, math.pi / 4, 1000)
    vals = [f2_two_qubit(ThetaState(t)) for t in thetas]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_power_upsilon_matches_f2_mes():
    for d in range(2, 17):
        assert power_upsilon(d) == f2_mes(d)


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
    assert binary_entropy(0.25) == pytest.approx(0.8112781244591329, abs=1e-12)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        binary_entropy(1.2)


def test_mi_continuity_bound_values():
    assert mi_continuity_bound(0.0, 2) == 0.0
    assert mi_continuity_bound(0.25, 2) == pytest.approx(4.811278124459133, abs=1e-12)
    with pytest.raises(ValueError, match="gamma"):
        mi_continuity_bound(0.6, 2)
    with pytest.raises(ValueError, match="dimension"):
        mi_continuity_bound(0.1, 1)


def test_mi_continuity_bound_monotone_below_quarter():
    # the h2(2 gamma) term turns the bound non-monotone past gamma = 1/4,
    # so monotonicity is only guaranteed (and only asserted) below it
    gammas = np.linspace(0.0, 0.25, 200)
    vals = [mi_continuity_bound(g, 2) for g in gammas]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_mi_continuity_bound_dominates_mi_change(rng):
    hit = 0
    for _ in range(40):
        rho = rand_density(rng, (2, 2))
        tau = rand_density(rng, (2, 2))
        eps = float(rng.uniform(0.0, 1.0))
        mix = DensityMatrix.from_array(
            (1 - eps) * rho.entries + eps * tau.entries, (2, 2)
        )
        gamma = trace_distance(rho.entries, mix.entries)
        if gamma > 0.5:
            continue
        hit += 1
        delta = abs(mutual_information(rho) - mutual_information(mix))
        assert delta <= mi_continuity_bound(gamma, 2) + 1e-12
    assert hit >= 20
