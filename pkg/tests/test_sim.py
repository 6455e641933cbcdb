"""RK4 integration, terminal labels, invariance audits, label/field grids."""

import math

import numpy as np
import pytest

from barrier_lab import (
    ClfCbfController,
    NominalClosedLoop,
    PreconditionError,
    field_grid,
    integrate,
    integrate_batch,
    invariance_audit,
    linear_system,
    make_ball_cbf,
    quadratic_clf,
    roa_grid,
)


class TestIntegrator:
    def test_fourth_order_convergence(self, fig3):
        # nominal loop diag(-1, -5): exact flow available in closed form
        x0 = np.array([1.0, 1.0])
        exact = np.array([math.exp(-1.0), math.exp(-5.0)])
        errors = []
        for dt in (0.01, 0.005):
            traj = integrate(fig3.unfiltered, x0, t_final=1.0, dt=dt)
            errors.append(float(np.linalg.norm(traj.states[-1] - exact)))
        ratio = errors[0] / errors[1]
        assert 8.0 < ratio < 32.0

    def test_trajectory_shapes_and_traces(self, fig3):
        traj = integrate(fig3.controller, np.array([0.5, 0.5]), t_final=0.05, dt=1e-3)
        assert traj.times.shape == (51,)
        assert traj.states.shape == (51, 2)
        assert traj.inputs.shape == (51, 2)
        assert traj.h_values.shape == (51, 1)
        assert traj.multiplier_trace.shape == (51, 1)
        assert traj.times[0] == 0.0
        assert abs(traj.times[-1] - 0.05) < 1e-12
        assert np.array_equal(traj.states[0], [0.5, 0.5])
        assert traj.terminal_label == "max-time"
        assert traj.attractor_index is None

    def test_convergence_label(self, fig3):
        traj = integrate(fig3.controller, np.array([1e-5, 1e-5]), t_final=3.0, dt=1e-3,
                         attractors=[np.zeros(2), np.array([3.0, 0.0])])
        assert traj.terminal_label == "converged-to(0;0)"
        assert traj.attractor_index == 0
        assert float(np.linalg.norm(traj.states[-1])) < 1e-6

    def test_boundary_equilibrium_is_a_fixed_point(self, fig3):
        traj = integrate(fig3.controller, np.array([3.0, 0.0]), t_final=0.05, dt=1e-3,
                         attractors=[np.zeros(2), np.array([3.0, 0.0])])
        assert traj.terminal_label == "converged-to(3;0)"
        assert traj.attractor_index == 1
        assert np.max(np.abs(traj.states - [3.0, 0.0])) == 0.0
        assert traj.min_h == 0.0

    def test_unsafe_start_is_refused(self, fig3):
        with pytest.raises(PreconditionError):
            integrate(fig3.controller, np.array([2.0, 0.0]))
        with pytest.raises(PreconditionError):
            integrate_batch(fig3.controller, [np.zeros(2), np.array([2.0, 0.0])])

    def test_left_domain_label(self):
        model = linear_system(5.0 * np.eye(2), np.eye(2), gain=np.zeros((2, 2)))
        loop = NominalClosedLoop(model)
        traj = integrate(loop, np.array([9.0e5, 0.0]), t_final=0.1, dt=1e-3)
        assert traj.terminal_label == "left-domain"
        assert traj.min_h == math.inf

    def test_infeasible_controller_labels_the_time(self):
        model = linear_system(np.array([[0.0, 0.0], [0.0, -1.0]]), np.array([[1.0], [0.0]]))
        controller = ClfCbfController(model, make_ball_cbf((0.0, 0.0), 1.0),
                                      quadratic_clf(np.eye(2)))
        traj = integrate(controller, np.array([0.0, 1.0]), t_final=0.05, dt=1e-3)
        assert traj.terminal_label == "error:infeasible@t=0"

    def test_batch_matches_single(self, fig3):
        x0s = [np.array([0.5, 0.5]), np.array([4.0, 1.0])]
        batch = integrate_batch(fig3.controller, x0s, t_final=0.02, dt=1e-3)
        for x0, traj in zip(x0s, batch):
            single = integrate(fig3.controller, x0, t_final=0.02, dt=1e-3)
            assert np.array_equal(traj.states, single.states)
            assert traj.terminal_label == single.terminal_label


class TestInvarianceAudit:
    def test_filtered_run_passes(self, fig3):
        traj = integrate(fig3.controller, np.array([0.5, 0.5]), t_final=0.1, dt=1e-3)
        min_h, verdict = invariance_audit(traj, fig3.pair)
        assert verdict == "pass"
        assert min_h > 0.0

    def test_nominal_run_through_the_obstacle_fails(self, fig3):
        traj = integrate(fig3.unfiltered, np.array([2.5, 0.01]), t_final=1.0, dt=1e-3)
        min_h, verdict = invariance_audit(traj, fig3.pair)
        assert verdict == "fail"
        assert min_h < -0.5


class TestRoaGrid:
    def test_node_order_and_unsafe_labels(self, fig3):
        grid = roa_grid(fig3.controller, ((0.5, 4.5), (-2.0, 2.0)), [5, 4],
                        attractors=(), t_final=0.01, dt=1e-3)
        assert grid.shape == (5, 4)
        assert grid.points.shape == (20, 2)
        assert len(grid.labels) == 20
        # row-major: x2 varies fastest within one x1 row
        assert np.max(np.abs(grid.points[1] - [0.5, -2.0 + 4.0 / 3.0])) < 1e-12
        assert np.array_equal(grid.points[4], [1.5, -2.0])
        unsafe = {i for i, lab in enumerate(grid.labels) if lab == "unsafe-start"}
        assert unsafe == {5, 6, 9, 10}
        assert all(lab == "max-time" for i, lab in enumerate(grid.labels) if i not in unsafe)

    def test_rejects_degenerate_resolution(self, fig3):
        from barrier_lab.errors import InvalidParameterError
        with pytest.raises(InvalidParameterError):
            roa_grid(fig3.controller, ((0.0, 1.0), (0.0, 1.0)), [1, 4], attractors=())


class TestFieldGrid:
    def test_golden_samples(self, fig3):
        grid = field_grid(fig3.controller, ((2.5, 4.0), (-1.0, 1.0)), [2, 3])
        assert grid.shape == (2, 3)
        assert grid.states.shape == (6, 2)
        node = 1 * 3 + 1     # (4, 0)
        assert np.array_equal(grid.states[node], [4.0, 0.0])
        assert np.max(np.abs(grid.velocity[node] - [-0.75, 0.0])) < 1e-12
        assert grid.active_code[node] == 2
        assert grid.h[node] == 3.0
        assert grid.masked[node] == 0
        inside = 0 * 3 + 1   # (2.5, 0) sits in the obstacle
        assert grid.h[inside] == -0.75
        assert grid.masked[inside] == 1

    def test_mask_matches_h_sign(self, fig2):
        grid = field_grid(fig2.controller, ((-3.0, 3.0), (0.0, 6.0)), 7)
        assert np.array_equal(grid.masked, (grid.h < 0.0).astype(int))
        assert grid.velocity.shape == (49, 2)
