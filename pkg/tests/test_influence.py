import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from bootperc.errors import OutOfRegimeError, ValidationError
from bootperc.influence import (
    ApproximationWarning,
    DiscreteDistribution,
    InfluenceSpec,
    activation_profile,
    parse_distribution,
    pi_asymptotic,
    pi_exact,
    q_infinity,
)
from oracles import q_enumeration

# weight laws with max W = 2 and threshold laws with min R = 6; every pairing
# has rho* = 3 and q_3 = P(R=6) P(W=2)^3
W_POSITIVE = parse_distribution("2:0.5,1:0.5")
W_SIGNED = parse_distribution("2:0.3,-1:0.7")  # negative mean
R_TWO_ATOMS = parse_distribution("6:0.4,9:0.6")
R_THREE_ATOMS = parse_distribution("6:0.4,7:0.3,12:0.3")


def pm1(z):
    return DiscreteDistribution.from_atoms([(1, z), (-1, 1 - z)])


class TestDistribution:
    def test_literals(self):
        d = parse_distribution("2:1/4,10:3/4")
        assert d.values == (2.0, 10.0)
        assert d.probs == (0.25, 0.75)
        assert parse_distribution("const:3").atoms == [(3.0, 1.0)]
        u = parse_distribution("uniformset:2-5")
        assert u.values == (2, 3, 4, 5) and u.probs == (0.25,) * 4

    @pytest.mark.parametrize("bad", ["2:0.5", "a:1", "2:0.5,2:0.4", "uniformset:5-2", "", "2:1/0"])
    def test_bad_literals(self, bad):
        with pytest.raises(ValidationError):
            parse_distribution(bad)

    def test_invariants_enforced(self):
        with pytest.raises(ValidationError):
            DiscreteDistribution((1.0, 0.5), (0.5, 0.5))
        with pytest.raises(ValidationError):
            DiscreteDistribution((), ())
        with pytest.raises(ValidationError):
            DiscreteDistribution((1.0,), (0.9,))

    def test_sample_matches_law(self, rng):
        d = parse_distribution("2:0.3,-1:0.7")
        x = d.sample(rng, 200_000)
        assert abs(np.mean(x == 2.0) - 0.3) < 0.005


class TestSpec:
    def test_condition(self):
        with pytest.raises(ValidationError):
            InfluenceSpec(DiscreteDistribution.constant(2), DiscreteDistribution.constant(0))
        with pytest.raises(ValidationError):
            InfluenceSpec(DiscreteDistribution.constant(2), DiscreteDistribution.constant(2))
        with pytest.raises(ValidationError):
            InfluenceSpec(parse_distribution("1:0.5,5:0.5"), DiscreteDistribution.constant(1))

    def test_sequential_flag(self):
        assert InfluenceSpec(R_TWO_ATOMS, W_SIGNED).sequential_semantics
        assert not InfluenceSpec(R_TWO_ATOMS, W_POSITIVE).sequential_semantics


class TestProfile:
    def test_basic_bootstrap(self):
        prof = activation_profile(InfluenceSpec.basic(2))
        assert prof.rho_star == 2
        assert prof.q[2] == 1.0
        assert prof.q_infinity == 1.0 and prof.q_infinity_exact

    @pytest.mark.parametrize("W", [W_POSITIVE, W_SIGNED])
    @pytest.mark.parametrize("R", [R_TWO_ATOMS, R_THREE_ATOMS])
    def test_fig2_pairings(self, W, R):
        prof = activation_profile(InfluenceSpec(R, W))
        assert prof.rho_star == 3
        assert prof.q_rho_star == pytest.approx(R.prob(6) * W.prob(2) ** 3, rel=1e-12)

    def test_pm1_absorption(self):
        spec = InfluenceSpec(DiscreteDistribution.constant(2), pm1(0.4))
        val, exact = q_infinity(spec, activation_profile(spec))
        assert exact
        assert val == pytest.approx(4 / 9, rel=1e-12)

    def test_pm1_zero_drift(self):
        spec = InfluenceSpec(DiscreteDistribution.constant(2), pm1(0.5))
        assert q_infinity(spec, activation_profile(spec)) == (1.0, True)

    def test_q5_enumeration(self):
        spec = InfluenceSpec(DiscreteDistribution.constant(2), pm1(0.4))
        q = activation_profile(spec).q
        assert q[5] == pytest.approx(q_enumeration([(2, 1.0)], pm1(0.4).atoms, 5), abs=1e-14)
        # two up-steps in a row, or up-down-up-up style paths: frozen by listing all 32
        assert q[5] == pytest.approx(0.2368, abs=1e-12)

    def test_inexact_q_infinity(self):
        # frozen: 1e7-sample walk simulation, seed 20240101 -> 0.6231717 (se 1.5e-4)
        spec = InfluenceSpec(DiscreteDistribution.constant(3), parse_distribution("2:0.3,-1:0.7"))
        prof = activation_profile(spec, rho_max=64)
        assert not prof.q_infinity_exact
        assert prof.q_infinity == prof.q[64]
        assert abs(prof.q[64] - 0.6231717) < 6e-4

    def test_no_rho_star_within_bound(self):
        spec = InfluenceSpec(DiscreteDistribution.constant(10), DiscreteDistribution.constant(1))
        with pytest.raises(ValidationError, match="no rho"):
            activation_profile(spec, rho_max=5)
        assert activation_profile(spec, rho_max=10).rho_star == 10

    def test_rho_max_too_small(self):
        with pytest.raises(ValidationError):
            activation_profile(InfluenceSpec.basic(2), rho_max=1)

    def test_fractional_weights_accumulate(self):
        # ten influences of 0.3 reach 3.0 only within float slack
        spec = InfluenceSpec(DiscreteDistribution.constant(3.0), DiscreteDistribution.constant(0.3))
        prof = activation_profile(spec, rho_max=12)
        assert prof.rho_star == 10


finite_law = st.lists(
    st.tuples(st.integers(-3, 3), st.integers(1, 5)), min_size=1, max_size=3, unique_by=lambda t: t[0]
).map(lambda items: [(float(v), w / sum(x for _, x in items)) for v, w in items])


@st.composite
def specs(draw):
    W = draw(finite_law.filter(lambda a: max(v for v, _ in a) > 0))
    w_max = max(v for v, _ in W)
    R = draw(st.lists(st.tuples(st.integers(int(w_max) + 1, 8), st.integers(1, 4)),
                      min_size=1, max_size=2, unique_by=lambda t: t[0]))
    tot = sum(x for _, x in R)
    return InfluenceSpec(DiscreteDistribution.from_atoms([(v, x / tot) for v, x in R]),
                         DiscreteDistribution.from_atoms(W))


@given(specs())
def test_dp_matches_enumeration(spec):
    q = activation_profile(spec, rho_max=8).q
    for rho in range(0, 7):
        assert q[rho] == pytest.approx(q_enumeration(spec.threshold.atoms, spec.weight.atoms, rho), abs=1e-12)


@given(specs())
def test_profile_invariants(spec):
    try:
        prof = activation_profile(spec, rho_max=24)
    except ValidationError:
        return
    q = prof.q
    assert q[0] == q[1] == 0
    assert np.all(np.diff(q) >= -1e-15)
    assert np.all(q[: prof.rho_star] == 0) and q[prof.rho_star] > 0
    if prof.q_infinity_exact:
        assert q[-1] <= prof.q_infinity + 1e-12 <= 1 + 1e-12


@given(specs(), st.floats(0.05, 0.5))
def test_dominance_in_w(spec, shift):
    """Moving mass from the smallest weight atom to the largest never lowers q."""
    W = spec.weight
    if len(W.values) < 2:
        return
    probs = list(W.probs)
    move = probs[0] * shift
    probs[0] -= move
    probs[-1] += move
    W2 = DiscreteDistribution(W.values, tuple(probs[:-1]) + (1.0 - math.fsum(probs[:-1]),))
    q1 = activation_profile(InfluenceSpec(spec.threshold, W), rho_max=30).q if _ok(spec) else None
    if q1 is None:
        return
    q2 = activation_profile(InfluenceSpec(spec.threshold, W2), rho_max=30).q
    assert np.all(q2 >= q1 - 1e-12)


def _ok(spec):
    try:
        activation_profile(spec, rho_max=30)
        return True
    except ValidationError:
        return False


class TestPi:
    def test_t_zero(self):
        assert pi_exact(0, 0.3, activation_profile(InfluenceSpec.basic(2))) == 0.0
        assert pi_asymptotic(0, 0.3, activation_profile(InfluenceSpec.basic(2))) == 0.0

    def test_unit_weights_is_binomial_tail(self):
        prof = activation_profile(InfluenceSpec.basic(2))
        assert pi_exact(3, 0.5, prof) == pytest.approx(0.5, abs=1e-15)
        for t, p in [(50, 0.01), (200, 0.3), (1000, 0.002)]:
            assert pi_exact(t, p, prof) == pytest.approx(binom.sf(1, t, p), rel=1e-12)

    def test_monte_carlo(self):
        # frozen 1e6-sample simulations of counters (oracles.pi_monte_carlo, seeds 7 and 8)
        prof = activation_profile(InfluenceSpec(R_TWO_ATOMS, W_SIGNED))
        assert abs(pi_exact(10, 0.1, prof) - 0.000809) < 1.2e-4
        assert abs(pi_exact(40, 0.2, prof) - 0.051437) < 9e-4

    def test_inexact_tail_warns(self):
        spec = InfluenceSpec(DiscreteDistribution.constant(3), parse_distribution("2:0.3,-1:0.7"))
        prof = activation_profile(spec, rho_max=16)
        with pytest.warns(ApproximationWarning):
            pi_exact(100, 0.5, prof)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            pi_exact(10, 0.5, prof)

    def test_asymptotic_value(self):
        prof = activation_profile(InfluenceSpec.basic(2))
        assert pi_asymptotic(100, 1e-4, prof) == pytest.approx(5e-5, rel=1e-12)

    def test_asymptotic_close_to_exact(self):
        prof = activation_profile(InfluenceSpec.basic(2))
        t, p = 1000, 1e-5
        ex = pi_exact(t, p, prof)
        assert abs(ex - pi_asymptotic(t, p, prof)) / ex < 0.05

    def test_asymptotic_guard(self):
        with pytest.raises(OutOfRegimeError):
            pi_asymptotic(1000, 1e-3, activation_profile(InfluenceSpec.basic(2)))

    @given(st.integers(0, 300), st.floats(0.0, 1.0), st.integers(1, 50), st.floats(0.0, 0.2))
    def test_monotone(self, t, p, dt, dp):
        prof = activation_profile(InfluenceSpec(R_THREE_ATOMS, W_POSITIVE))
        base = pi_exact(t, p, prof)
        assert pi_exact(t + dt, p, prof) >= base - 1e-12
        assert pi_exact(t, min(1.0, p + dp), prof) >= base - 1e-12
