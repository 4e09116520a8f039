import math

import pytest

from namecast.engine import Simulator
from namecast.topology import (
    Arena,
    NodeKinematics,
    RandomWalk,
    grid_topology,
    linear_topology,
    mobility_step,
    neighbors,
)


def dist(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


class TestGrid:
    def test_paper_grid_shape(self):
        positions = grid_topology(rows=5, cols=10, spacing=100.0)
        assert len(positions) == 50
        assert max(p[0] for p in positions) == 900.0
        assert max(p[1] for p in positions) == 400.0

    def test_single_node(self):
        assert grid_topology(1, 1, 100.0) == [(0.0, 0.0)]

    def test_diagonal_distance(self):
        positions = grid_topology(2, 2, 100.0)
        assert dist(positions[0], positions[3]) == pytest.approx(141.42, abs=0.01)


class TestLinear:
    def test_interior_nodes_hear_two_neighbors(self):
        positions = linear_topology(3, 100.0)
        adj = neighbors(positions, 125.0)
        assert adj[0] == [1]
        assert adj[1] == [0, 2]

    def test_two_nodes_mutually_reachable(self):
        adj = neighbors(linear_topology(2, 100.0), 125.0)
        assert adj[0] == [1] and adj[1] == [0]

    def test_chain_edge_count(self):
        adj = neighbors(linear_topology(10, 100.0), 125.0)
        assert sum(len(v) for v in adj.values()) // 2 == 9


class TestNeighbors:
    def test_grid_degree_at_most_four(self):
        positions = grid_topology(5, 10, 100.0)
        adj = neighbors(positions, 125.0)
        assert max(len(v) for v in adj.values()) <= 4
        # interior nodes see exactly their four orthogonal neighbors
        assert len(adj[11]) == 4

    def test_small_radius_gives_empty_adjacency(self):
        adj = neighbors(grid_topology(3, 3, 100.0), 50.0)
        assert all(not v for v in adj.values())

    def test_symmetry(self):
        positions = [(0, 0), (60, 10), (110, 40), (300, 300), (90, 90)]
        adj = neighbors(positions, 125.0)
        for i, peers in adj.items():
            for j in peers:
                assert i in adj[j]


class TestMobility:
    def test_zero_speed_is_stationary(self):
        sim = Simulator(seed=1)
        arena = Arena(1500.0, 1000.0, 125.0)
        walk = RandomWalk(sim, arena, [(100.0, 100.0)], speed=0.0)
        sim.run_until(100.0)
        assert walk.position(0) == (100.0, 100.0)

    def test_leg_displacement_matches_speed(self):
        kin = NodeKinematics(500.0, 500.0, 0.0, 0.0, 0.0)
        arena = Arena(1500.0, 1000.0, 125.0)
        sim = Simulator(seed=2)
        kin = mobility_step(kin, 8.0, arena, sim.stream("m"), now=0.0)
        assert math.hypot(kin.vx, kin.vy) == pytest.approx(8.0)
        # no wall within 40 m of the arena center, so one full leg moves 40 m
        end = (kin.x + kin.vx * 5.0, kin.y + kin.vy * 5.0)
        assert dist((kin.x, kin.y), end) == pytest.approx(40.0)
        assert kin.leg_end == 5.0

    def test_positions_stay_inside_arena(self):
        sim = Simulator(seed=3)
        arena = Arena(200.0, 150.0, 50.0)
        start = [(10.0, 10.0), (190.0, 140.0), (100.0, 75.0)]
        walk = RandomWalk(sim, arena, start, speed=8.0)
        for step in range(1, 400):
            sim.run_until(step * 0.25)
            for i in range(3):
                x, y = walk.position(i)
                assert 0.0 <= x <= arena.width
                assert 0.0 <= y <= arena.height

    def test_reflection_reverses_heading(self):
        sim = Simulator(seed=4)
        arena = Arena(100.0, 100.0, 10.0)
        walk = RandomWalk(sim, arena, [(95.0, 50.0)], speed=0.0)
        # force a due-east heading so the node must reflect off x = 100
        walk._vx[0], walk._vy[0] = 8.0, 0.0
        walk._leg_end[0] = 5.0
        walk._schedule_next(0)
        sim.run_until(2.0)
        x, _ = walk.position(0)
        assert x < 100.0
        assert walk._vx[0] < 0


class TestArena:
    def test_rejects_nonpositive_dimensions(self):
        with pytest.raises(ValueError):
            Arena(0.0, 10.0, 5.0)
        with pytest.raises(ValueError):
            Arena(10.0, 10.0, -1.0)
