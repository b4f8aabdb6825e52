from fractions import Fraction

import numpy as np
import pytest

from conftest import box_bc, random_weights
from simplicial.errors import CapExceededError, ValidationError
from simplicial.height import Slope, floor_field, tiling_of
from simplicial.kasteleyn import (SparseHypermatrix, build_hypermatrix, elimination_det, hyperdet,
                                  hyperedge_source, is_tiling, matching_of_tiling, permutation_sign,
                                  reference_tiling_edges, verify_kasteleyn)
from simplicial.lattice import Edge, Region
from simplicial.regions import FixedBoundary
from simplicial.sampler import glauber_run


def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([1, 2, 0]) == 1
    assert permutation_sign([3, 2, 1, 0]) == 1


def test_rank_two_is_the_determinant():
    result = hyperdet([[1, 2], [3, 4]])
    assert result.value == -2
    assert result.nonzero_terms == 2
    assert result.signs == {1, -1}


def test_rank_four_single_entry():
    assert hyperdet(np.full((1, 1, 1, 1), 5)).value == 5


def test_rank_four_diagonal():
    A = np.zeros((3, 3, 3, 3), dtype=int)
    for i in range(3):
        A[i, i, i, i] = i + 2
    result = hyperdet(A)
    assert result.value == 24
    assert result.nonzero_terms == 1


def test_odd_rank_and_non_cubical_rejected():
    with pytest.raises(ValidationError):
        hyperdet(np.ones((2, 2, 2), dtype=int))
    with pytest.raises(ValidationError):
        SparseHypermatrix.from_dense(np.ones((2, 3), dtype=int))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_leibniz_matches_elimination(seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-4, 5, size=(4, 4)).tolist()
    assert hyperdet(M).value == elimination_det(M)
    assert elimination_det(M) == round(np.linalg.det(np.array(M, dtype=float)))


def test_elimination_pivots():
    assert elimination_det([[0, 1], [1, 0]]) == -1
    assert elimination_det([[0, 0], [1, 0]]) == 0
    assert elimination_det([]) == 1
    assert elimination_det([[Fraction(1, 2), 0], [0, 4]]) == 2


def test_cap_falls_back_for_matrices_only():
    M = [[2, 1, 0], [1, 2, 1], [0, 1, 2]]
    result = hyperdet(M, cap=1)
    assert result.value == 4
    assert result.nonzero_terms is None
    with pytest.raises(CapExceededError) as exc:
        hyperdet(np.ones((2, 2, 2, 2), dtype=int), cap=4)
    assert exc.value.size == 8


def test_parallel_hyperdet_matches():
    rng = np.random.default_rng(7)
    A = rng.integers(-2, 3, size=(3, 3, 3, 3))
    assert hyperdet(A, workers=2).value == hyperdet(A).value


def test_hyperedge_source(lattice3):
    e = Edge((1, 0, 2, 0), 3)
    loops = lattice3.loops_through(e)
    assert hyperedge_source(lattice3, loops) == e
    other = lattice3.loops_through(Edge((5, 5, 5, 0), 1))
    with pytest.raises(ValidationError):
        hyperedge_source(lattice3, [loops[0], other[0]])


def test_tilings_partition_their_loops(b3_fields):
    T = tiling_of(b3_fields[0])
    lattice = T.lattice
    assert is_tiling(lattice, T.edges, T.loops)
    assert len(matching_of_tiling(T)) == len(T.edges)
    assert not is_tiling(lattice, sorted(T.edges)[1:], T.loops)


def test_hexagon_verification(hexagon_bc):
    report = verify_kasteleyn(hexagon_bc)
    assert report.Z == 2
    assert report.count == 2
    assert report.rank == 2
    assert report.equal
    assert abs(report.det) == 2
    data = report.to_dict()
    assert data["Z"] == "2"
    assert data["equal"] is True


@pytest.mark.parametrize("n", [3, 4])
def test_box_verification_d2(n):
    report = verify_kasteleyn(box_bc(2, n))
    assert report.equal
    assert report.Z == report.count


def test_weighted_verification(b3_bc):
    w = random_weights(b3_bc, seed=11)
    report = verify_kasteleyn(b3_bc, w)
    assert report.equal


@pytest.mark.slow
def test_single_vertex_verification_d3(d3_single_bc):
    report = verify_kasteleyn(d3_single_bc)
    assert report.rank == 6
    assert report.Z == 2
    assert report.equal


def test_weight_scaling(b3_bc):
    w = random_weights(b3_bc, seed=5)
    K = build_hypermatrix(b3_bc, w)
    scaled = build_hypermatrix(b3_bc, w.scaled(3))
    assert hyperdet(scaled).value == 3 ** K.size * hyperdet(K).value


def test_verification_rejects_non_regions(lattice2):
    ring = lattice2.ball(lattice2.origin, 1) - {lattice2.origin}
    bc = FixedBoundary(Region(frozenset(ring)), floor_field(Slope.zero(2)))
    with pytest.raises(ValidationError):
        verify_kasteleyn(bc)


@pytest.mark.slow
@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_two_vertex_verification_d3(lattice3, i):
    x = (1, 1, 1, 0)
    R = Region(frozenset({x, lattice3.step(x, i)}))
    bc = FixedBoundary(R, floor_field(Slope.zero(3), 2))
    report = verify_kasteleyn(bc)
    assert report.rank == 6
    assert report.equal
    assert report.Z == report.count


@pytest.mark.slow
def test_random_planar_instances():
    big = box_bc(2, 6)
    sites = list(big.sites)
    rng = np.random.default_rng(2024)
    checked = 0
    for seed in range(1, 500):
        reference = glauber_run(big, steps=300, seed=seed)
        picks = rng.choice(len(sites), size=int(rng.integers(1, 5)), replace=False)
        bc = FixedBoundary(Region(frozenset(sites[k] for k in picks)), reference)
        if not bc.is_region() or len(reference_tiling_edges(bc)) > 7:
            continue
        report = verify_kasteleyn(bc, random_weights(bc, seed=seed))
        assert report.equal
        assert report.uniform_sign
        assert report.nonzero_terms == report.count
        checked += 1
        if checked == 50:
            break
    assert checked == 50
