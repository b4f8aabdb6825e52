import numpy as np
import pytest

from simplicial.errors import ValidationError
from simplicial.lattice import Edge, Lattice, UnrootedLoop


def test_generators_d2(lattice2):
    assert lattice2.generators == [(1, 0, 0), (0, 1, 0), (-1, -1, 0)]


def test_canonicalize_subtracts_last_coordinate(lattice2):
    assert lattice2.canonicalize((3, 4, 5)) == (-2, -1, 0)
    with pytest.raises(ValidationError):
        lattice2.canonicalize((1, 2))


def test_dimension_must_be_at_least_two():
    with pytest.raises(ValidationError):
        Lattice(1)


def test_of_is_cached():
    assert Lattice.of(3) is Lattice.of(3)
    assert Lattice.of(2) == Lattice(2)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_generators_have_unit_parity_and_norm(d):
    lattice = Lattice.of(d)
    for i in range(1, d + 2):
        g = lattice.generators[i - 1]
        assert lattice.parity(g) == 1
        assert lattice.plus_norm(g) == 1
        assert lattice.plus_norm(lattice.scale(g, -1)) == d
        assert lattice.graph_distance(lattice.origin, g) == 1


def test_graph_distance_uses_the_quotient(lattice2):
    # (1, 1, 0) is -g_3
    assert lattice2.graph_distance(lattice2.origin, (1, 1, 0)) == 1
    assert lattice2.graph_distance((0, 0, 0), (2, 0, 0)) == 2
    assert lattice2.graph_distance((2, 1, 0), (0, 0, 0)) == 2


def bfs_layers(lattice, start, depth, signs=(1, -1)):
    dist = {start: 0}
    frontier = [start]
    for k in range(1, depth + 1):
        nxt = []
        for x in frontier:
            for s in signs:
                for i in range(1, lattice.d + 2):
                    y = lattice.step(x, i, s)
                    if y not in dist:
                        dist[y] = k
                        nxt.append(y)
        frontier = nxt
    return dist


@pytest.mark.parametrize("d, depth", [(2, 6), (3, 5)])
def test_plus_norm_counts_positive_steps(d, depth):
    lattice = Lattice.of(d)
    dist = bfs_layers(lattice, lattice.origin, depth, signs=(1,))
    for v, k in dist.items():
        assert lattice.plus_norm(v) == k
    near = {v for v in lattice.ball(lattice.origin, depth) if lattice.plus_norm(v) <= depth}
    assert near == set(dist)


def test_plus_norm_of_a_mixed_vector(lattice3):
    assert lattice3.plus_norm((2, -1, 0, 0)) == 5
    assert lattice3.plus_norm((-2, 1, 0, 0)) == 7


@pytest.mark.parametrize("start", [(0, 0, 0), (2, -1, 0), (-3, 4, 0)])
def test_graph_distance_matches_breadth_first_search(lattice2, start):
    dist = bfs_layers(lattice2, start, 6)
    for v, k in dist.items():
        assert lattice2.graph_distance(start, v) == k
        assert lattice2.graph_distance(v, start) == k
    assert lattice2.ball(start, 6) == frozenset(dist)


def test_graph_distance_matches_breadth_first_search_d3(lattice3):
    dist = bfs_layers(lattice3, lattice3.origin, 4)
    for v, k in dist.items():
        assert lattice3.graph_distance(lattice3.origin, v) == k


@pytest.mark.parametrize("d", [2, 3])
def test_quotient_ignores_multiples_of_the_diagonal(d):
    lattice = Lattice.of(d)
    rng = np.random.default_rng(d)
    for _ in range(200):
        raw = tuple(int(c) for c in rng.integers(-6, 7, size=d + 1))
        other = tuple(int(c) for c in rng.integers(-6, 7, size=d + 1))
        k = int(rng.integers(-5, 6))
        moved = tuple(c + k for c in raw)
        x = lattice.canonicalize(raw)
        assert lattice.canonicalize(moved) == x
        assert lattice.parity(moved) == lattice.parity(x)
        assert lattice.plus_norm(moved) == lattice.plus_norm(x)
        y = lattice.canonicalize(other)
        assert lattice.graph_distance(moved, other) == lattice.graph_distance(x, y)


@pytest.mark.parametrize("d, expected", [(2, 2), (3, 6)])
def test_loops_through_edge(d, expected):
    lattice = Lattice.of(d)
    for i in range(1, d + 2):
        e = Edge(lattice.origin, i)
        loops = lattice.loops_through(e)
        assert len(loops) == expected
        assert len(set(loops)) == expected
        for s in loops:
            assert e in lattice.edges_of_loop(s)


@pytest.mark.parametrize("d", [2, 3])
def test_loops_close(d):
    lattice = Lattice.of(d)
    for order in lattice.orders:
        s = UnrootedLoop((1, 2, 0, 0)[:d] + (0,), order)
        path = lattice.loop_vertices(s)
        assert path[0] == path[-1]
        assert len(set(path[:-1])) == d + 1
        dirs = sorted(e.dir for e in lattice.edges_of_loop(s))
        assert dirs == list(range(1, d + 2))


def test_loop_with_order_matches_loops_through(lattice3):
    e = Edge((1, 0, 2, 0), 2)
    for order, s in zip(lattice3.orders, lattice3.loops_through(e)):
        assert lattice3.loop_with_order(e, order) == s
        assert s.order == order


def test_edge_between(lattice2):
    x = (0, 0, 0)
    assert lattice2.edge_between(x, (0, 1, 0)) == Edge(x, 2)
    assert lattice2.edge_between((0, 1, 0), x) == Edge(x, 2)
    assert lattice2.edge_between(x, (1, 1, 0)) == Edge((1, 1, 0), 3)
    with pytest.raises(ValidationError):
        lattice2.edge_between(x, (2, 0, 0))


@pytest.mark.parametrize("kind, n, size", [("B", 3, 4), ("Bbar", 2, 9), ("Pi", 2, 16), ("B", 1, 0)])
def test_box_sizes(lattice2, kind, n, size):
    assert len(lattice2.make_box(kind, n)) == size


def test_make_box_rejects_unknown_kind(lattice2):
    with pytest.raises(ValidationError):
        lattice2.make_box("C", 3)
    with pytest.raises(ValidationError):
        lattice2.make_box("B", 0)


@pytest.mark.parametrize("d", [2, 3])
def test_single_vertex_boundary(d):
    lattice = Lattice.of(d)
    R = lattice.make_box("B", 2)
    assert len(R) == 1
    assert len(lattice.region_boundary(R)) == 2 * (d + 1)
    assert len(lattice.incident_edges(R)) == 2 * (d + 1)


def test_ball_radius_one(lattice2):
    ball = lattice2.ball(lattice2.origin, 1)
    assert len(ball) == 7
    assert set(lattice2.neighbors(lattice2.origin)) < ball


def test_loops_within_window_stay_inside(lattice2):
    window = lattice2.box_window([lattice2.origin], pad=1)
    loops = lattice2.loops_within(window)
    assert loops
    for s in loops:
        assert all(v in window for v in lattice2.loop_vertices(s))


def test_box_shell_is_the_outer_layer(lattice2):
    box = lattice2.box_window([lattice2.origin], pad=2)
    shell = lattice2.box_shell(box)
    assert len(box) == 25
    assert len(shell) == 16
    assert lattice2.origin not in shell
