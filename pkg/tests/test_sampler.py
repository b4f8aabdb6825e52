from fractions import Fraction

import numpy as np
import pytest

from conftest import box_bc, random_weights
from simplicial.errors import CoalescenceError, ValidationError
from simplicial.height import Slope, is_height_function, is_local_max, local_move
from simplicial.regions import (UNIFORM, FixedBoundary, PeriodicBoundary, boltzmann_mass, count, enumerate_heights,
                                torus_state, torus_validate)
from simplicial.sampler import (ChainState, SharedRandomness, azuma_tail_bounds, cftp_batch, cftp_sample,
                                chi_square_uniformity, coupled_run, distance_to_complement,
                                distance_to_period_lattice, empirical_variance_bound_check, glauber_run,
                                glauber_samples, heat_bath_step, periodic_glauber, periodic_samples,
                                sandwich_bounds, transition_probability)


def test_shared_randomness_is_addressable():
    a, b = SharedRandomness(7, chain=0, block=16), SharedRandomness(7, chain=0, block=16)
    assert [a.draw(t) for t in (40, 3, 17)] == [b.draw(t) for t in (40, 3, 17)]
    assert SharedRandomness(7, chain=1).draw(0) != SharedRandomness(7, chain=0).draw(0)
    assert SharedRandomness(8).draw(0) != SharedRandomness(7).draw(0)
    u, v = a.draw(100)
    assert 0 <= u < 1 and 0 <= v < 1


@pytest.mark.parametrize("weighted", [False, True])
def test_transition_rows_sum_to_one(b3_bc, b3_fields, weighted):
    w = random_weights(b3_bc, seed=2) if weighted else UNIFORM
    for f in b3_fields:
        assert sum(transition_probability(b3_bc, w, f, g) for g in b3_fields) == 1


@pytest.mark.parametrize("weighted", [False, True])
def test_detailed_balance(b3_bc, b3_fields, weighted):
    w = random_weights(b3_bc, seed=4) if weighted else UNIFORM
    for f in b3_fields:
        for g in b3_fields:
            lhs = boltzmann_mass(f, b3_bc, w) * transition_probability(b3_bc, w, f, g)
            rhs = boltzmann_mass(g, b3_bc, w) * transition_probability(b3_bc, w, g, f)
            assert lhs == rhs


def test_hexagon_moves_with_probability_half(hexagon_bc):
    low, high = sorted(enumerate_heights(hexagon_bc), key=lambda f: f((1, 1, 0)))
    assert transition_probability(hexagon_bc, UNIFORM, low, high) == Fraction(1, 2)
    assert transition_probability(hexagon_bc, UNIFORM, low, low) == Fraction(1, 2)


def test_heat_bath_step(hexagon_bc):
    state = ChainState(hexagon_bc.reference, hexagon_bc)
    new = heat_bath_step(state, (1, 1, 0), 0.9)
    assert new.step_count == 1
    assert new.field((1, 1, 0)) == -1
    assert heat_bath_step(state, (1, 1, 0), 0.1).field((1, 1, 0)) == 2
    with pytest.raises(ValidationError):
        heat_bath_step(state, (5, 5, 0), 0.5)


def test_glauber_stays_in_support(b3_bc, b3_fields):
    f = glauber_run(b3_bc, steps=200, seed=3)
    assert f in b3_fields
    assert glauber_run(b3_bc, steps=200, seed=3) == f
    fields = list(glauber_samples(b3_bc, samples=5, steps=20, burnin=50, seed=1))
    assert len(fields) == 5
    assert all(g in b3_fields for g in fields)


def test_cftp_support_and_determinism(hexagon_bc):
    support = set(enumerate_heights(hexagon_bc))
    samples = cftp_batch(hexagon_bc, 20, seed=5)
    assert set(samples) <= support
    assert cftp_batch(hexagon_bc, 20, seed=5) == samples
    assert cftp_sample(hexagon_bc, seed=5, chain=3) == samples[3]


def test_cftp_on_a_larger_box(b3_bc, b3_fields):
    for chain in range(5):
        assert cftp_sample(b3_bc, seed=0, chain=chain) in b3_fields


def test_cftp_weighted_needs_opt_in(b3_bc):
    with pytest.raises(ValidationError):
        cftp_sample(b3_bc, random_weights(b3_bc))


def test_cftp_horizon_exhausted():
    with pytest.raises(CoalescenceError):
        cftp_sample(box_bc(2, 4), seed=0, max_doublings=0)


@pytest.mark.slow
def test_cftp_is_uniform(b3_bc, b3_fields):
    samples = cftp_batch(b3_bc, 100 * count(b3_bc), seed=2024)
    report = chi_square_uniformity(samples, b3_fields, alpha=1e-4)
    assert report.passed
    assert report.unseen == 0


def test_chi_square_rejects_foreign_samples(hexagon_bc, frozen_bc):
    support = list(enumerate_heights(hexagon_bc))
    with pytest.raises(ValidationError):
        chi_square_uniformity(list(enumerate_heights(frozen_bc)), support)


def test_coupled_run_keeps_the_sandwich():
    bc1, bc2 = box_bc(2, 3, a=0), box_bc(2, 3, a=3)
    f1, f2 = coupled_run(bc1, bc2, steps=300, seed=1)
    window = bc1.lattice.box_window(bc1.sites)
    assert is_height_function(f1, window)
    assert is_height_function(f2, window)
    for x in bc1.sites:
        assert f1(x) - f2(x) == -3
    with pytest.raises(ValidationError):
        coupled_run(bc1, box_bc(2, 4), steps=1)
    with pytest.raises(ValidationError):
        coupled_run(bc1, bc2, start="middle")


def test_distances(hexagon_bc):
    assert distance_to_complement(hexagon_bc, (1, 1, 0)) == 1
    assert distance_to_complement(hexagon_bc, (0, 0, 0)) == 0
    pbc = PeriodicBoundary(1, Slope.zero(2))
    assert distance_to_period_lattice(pbc, (0, 0, 0)) == 0
    assert distance_to_period_lattice(pbc, (1, 0, 0)) == 1


def test_variance_bound_on_hexagon(hexagon_bc):
    samples = cftp_batch(hexagon_bc, 200, seed=1)
    report = empirical_variance_bound_check(samples, (1, 1, 0), hexagon_bc)
    assert report.distance == 1
    assert report.bound == 9
    assert not report.violated
    with pytest.raises(ValidationError):
        empirical_variance_bound_check(samples[:1], (1, 1, 0), hexagon_bc)


def test_tail_rows(hexagon_bc):
    samples = cftp_batch(hexagon_bc, 50, seed=9)
    rows = azuma_tail_bounds(samples, (1, 1, 0), hexagon_bc)
    assert [row.a for row in rows] == [0.5, 1.0, 1.5, 2.0, 3.0]
    for row in rows:
        assert 0 <= row.upper <= 1
        assert 0 <= row.lower <= 1
        assert 0 < row.bound < 1
    # samples take the values 2 and -1 only
    assert rows[-1].upper == 0 and rows[-1].lower == 0


def test_periodic_chain_stays_valid():
    pbc = PeriodicBoundary(1, Slope.zero(2))
    states = list(periodic_samples(pbc, samples=3, steps=40, seed=2))
    assert len(states) == 3
    assert all(torus_validate(s) for s in states)
    assert torus_validate(periodic_glauber(PeriodicBoundary(1, Slope.extreme(2, 1)), steps=30))


def test_periodic_rejects_bad_slopes():
    bad = PeriodicBoundary(1, Slope((Fraction(1, 2), Fraction(-1, 4), Fraction(-1, 4))))
    with pytest.raises(ValidationError):
        next(periodic_samples(bad))


def test_coupled_run_with_a_lowered_boundary_vertex():
    bc1 = box_bc(2, 3)
    flat = bc1.reference
    assert is_local_max(flat, (0, 0, 0))
    bc2 = FixedBoundary(bc1.region, local_move(flat, (0, 0, 0), -1))
    assert sandwich_bounds(bc1, bc2) == (0, 3)
    window = bc1.lattice.box_window(bc1.sites)
    for start in ("max", "min"):
        for seed in range(3):
            f1, f2 = coupled_run(bc1, bc2, steps=400, seed=seed, start=start)
            assert is_height_function(f1, window)
            assert is_height_function(f2, window)
            for x in bc1.sites:
                assert 0 <= f1(x) - f2(x) <= 3


@pytest.mark.slow
def test_cftp_is_uniform_on_a_larger_box():
    bc = box_bc(2, 4)
    support = list(enumerate_heights(bc))
    assert len(support) == 22
    samples = cftp_batch(bc, 50 * len(support), seed=77)
    report = chi_square_uniformity(samples, support, alpha=1e-4)
    assert report.passed
    assert report.unseen == 0


def test_frozen_torus_never_moves():
    pbc = PeriodicBoundary(1, Slope.extreme(2, 1))
    start = torus_state(pbc)
    for seed in range(3):
        assert periodic_glauber(pbc, steps=200, seed=seed) == start


@pytest.mark.slow
def test_periodic_mean_matches_the_slope():
    pbc = PeriodicBoundary(3, Slope.zero(2))
    assert pbc.period == 9
    states = [periodic_glauber(pbc, steps=20000, seed=11, chain=k) for k in range(100)]
    assert all(torus_validate(s) for s in states)
    for x in [(1, 0, 0), (2, 2, 0), (4, 4, 0), (3, 7, 0)]:
        values = np.array([s(x) for s in states], dtype=float)
        stderr = values.std(ddof=1) / np.sqrt(len(values))
        assert abs(values.mean()) <= 4 * stderr + 0.1
