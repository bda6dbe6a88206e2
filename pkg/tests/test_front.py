import math

import pytest

from tentpitch import (
    Front,
    FrontInvariantError,
    GreedyLowest,
    GroundMesh,
    MISPhases,
    PitchConfig,
    precompute,
    run,
)


def make_front(mesh, target=10.0, epsilon=0.1, initial=None):
    return Front(mesh, precompute(mesh, epsilon), target, initial_times=initial)


class TestInit:
    def test_flat_front_valid(self, right_triangle):
        front = make_front(right_triangle)
        assert front.times == [0.0, 0.0, 0.0]
        assert not any(front.finished)

    def test_cone_violation_rejected(self, right_triangle):
        with pytest.raises(FrontInvariantError, match="element 0"):
            make_front(right_triangle, initial=[0.0, 0.0, 10.0])

    def test_gentle_slope_valid(self, right_triangle):
        # t = 0.4 * x keeps the gradient at 0.4 and the progress gap small
        x = right_triangle.vertices[:, 0]
        front = make_front(right_triangle, initial=0.4 * x)
        assert front.times[2] == pytest.approx(0.4)

    def test_progress_violation_rejected(self):
        # top vertex more than (1-eps)*w above the middle: cone-legal
        # (gradient 0.95) but the front could no longer guarantee progress
        mesh = GroundMesh(2, [[-2.0, 0.1], [0.0, 0.0], [1.0, 0.0]], [[0, 1, 2]])
        with pytest.raises(FrontInvariantError, match="progress"):
            make_front(mesh, initial=[-1.9, 0.0, 0.95])

    def test_nonfinite_rejected(self, right_triangle):
        with pytest.raises(ValueError):
            make_front(right_triangle, initial=[0.0, math.nan, 0.0])


class TestNextVertex:
    def test_flat_front_index_tiebreak(self, right_triangle):
        front = make_front(right_triangle)
        assert front.next_vertex(GreedyLowest()) == 0

    def test_unique_minimum_on_path(self):
        mesh = GroundMesh(1, [[0.0], [1.0], [2.0]], [[0, 1], [1, 2]])
        front = Front(mesh, precompute(mesh), 10.0,
                      initial_times=[0.1, 0.0, 0.2])
        assert front.next_vertex(GreedyLowest()) == 1

    def test_mis_single_vertex_per_phase_in_clique(self, right_triangle):
        front = make_front(right_triangle)
        strategy = MISPhases(seed=0)
        v = front.next_vertex(strategy)
        assert v == 0
        phase = front.phase_counter
        front.apply_lift(v, 0.5)
        # the other two vertices are neighbors of 0, so a new phase starts
        v2 = front.next_vertex(strategy)
        assert front.phase_counter == phase + 1
        assert v2 in (1, 2)

    def test_exhausted_when_all_finished(self, right_triangle):
        front = make_front(right_triangle, target=0.0)
        assert all(front.finished)
        assert front.next_vertex(GreedyLowest()) is None
        assert front.next_vertex(MISPhases()) is None


class TestApplyLift:
    def test_valid_lift(self, right_triangle):
        front = make_front(right_triangle)
        w_p = 1.0
        front.apply_lift(0, 0.5 * w_p)
        assert front.times[0] == 0.5
        assert not front.is_local_minimum(0)

    def test_beyond_cone_rejected_and_rolled_back(self, right_triangle):
        front = make_front(right_triangle)
        with pytest.raises(FrontInvariantError):
            front.apply_lift(0, 5.0)
        assert front.times[0] == 0.0

    def test_lift_to_target_marks_finished(self, right_triangle):
        front = make_front(right_triangle, target=0.5)
        front.apply_lift(0, 0.5)
        assert front.finished[0]

    def test_non_increasing_lift_rejected(self, right_triangle):
        front = make_front(right_triangle)
        with pytest.raises(ValueError):
            front.apply_lift(0, 0.0)

    def test_star_revalidated_after_lift(self, fan_mesh, rng):
        front = make_front(fan_mesh)
        for _ in range(30):
            v = front.next_vertex(GreedyLowest())
            from tentpitch import compute_lift

            bound = compute_lift(v, front, PitchConfig(target_time=10.0))
            front.apply_lift(v, bound.value)  # check=True re-validates
            front.validate_star(v)


class TestDeterminism:
    def test_greedy_identical_sequences(self, rng):
        from tentpitch.synthetic import delaunay_mesh

        mesh = delaunay_mesh(25, rng)
        cfg = PitchConfig(target_time=2.0)
        _, t1 = run(mesh, cfg)
        _, t2 = run(mesh, cfg)
        seq1 = [(r.vertex, r.new_time) for r in t1.lifts]
        seq2 = [(r.vertex, r.new_time) for r in t2.lifts]
        assert seq1 == seq2

    def test_mis_seeded_determinism_and_independence(self, rng):
        from tentpitch.synthetic import delaunay_mesh

        mesh = delaunay_mesh(30, rng)
        cons = precompute(mesh, 0.1)
        strategy = MISPhases(seed=11)

        def run_phases():
            front = Front(mesh, cons, 1.0)
            cfg = PitchConfig(target_time=1.0, strategy=strategy)
            from tentpitch import compute_lift

            phases = []
            order = []
            while (v := front.next_vertex(strategy)) is not None:
                while len(phases) < front.phase_counter:
                    phases.append([])
                phases[front.phase_counter - 1].append(v)
                order.append(v)
                front.apply_lift(v, compute_lift(v, front, cfg).value)
            return phases, order

        phases1, order1 = run_phases()
        phases2, order2 = run_phases()
        assert order1 == order2
        for members in phases1:
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    assert b not in mesh.neighbors[a]

    def test_mis_different_seed_changes_order(self, rng):
        from tentpitch.synthetic import delaunay_mesh

        mesh = delaunay_mesh(40, rng)
        orders = []
        for seed in (1, 2):
            _, trace = run(mesh, PitchConfig(target_time=1.0,
                                             strategy=MISPhases(seed=seed)))
            orders.append([r.vertex for r in trace.lifts])
        assert orders[0] != orders[1]


class TestTermination:
    def test_lift_count_bounded(self, rng):
        from tentpitch.synthetic import delaunay_mesh

        mesh = delaunay_mesh(20, rng)
        cons = precompute(mesh, 0.1)
        T = 3.0
        _, trace = run(mesh, PitchConfig(target_time=T, epsilon=0.1))
        budget = (T / 0.1) * cons.inverse_omega_sum
        assert len(trace.lifts) <= budget
        assert trace.lifts[-1].new_time == T
