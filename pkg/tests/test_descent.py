"""Armijo descent, condition certification, trace persistence."""

import math

import pytest

from singulim.descent import (
    DescentConfig,
    check_conditions,
    optimize,
    read_trace_csv,
    trace_from_points,
    write_trace_csv,
)
from singulim.polyalg import Polynomial, RationalFunction


def _pinch():
    x = Polynomial.variable(2, 0)
    y = Polynomial.variable(2, 1)
    r2 = x * x + y * y
    return RationalFunction(x * y, r2 * (1 + r2))


def _quadratic_1d():
    t = Polynomial.variable(1, 0)
    return RationalFunction(t * t, Polynomial.constant(1, 1))


class TestConfig:
    def test_defaults_valid(self):
        cfg = DescentConfig()
        assert cfg.sigma_armijo == 0.1
        assert cfg.max_iters == 100_000

    @pytest.mark.parametrize("kwargs", [
        {"sigma_armijo": 0.0},
        {"sigma_armijo": 1.0},
        {"backtrack_factor": 1.0},
        {"initial_step": 0.0},
        {"max_iters": 0},
        {"grad_tol": -1.0},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            DescentConfig(**kwargs)


class TestOptimize:
    def test_monotone_decrease_and_armijo(self):
        f = _pinch()
        cfg = DescentConfig(max_iters=300)
        trace = optimize(f, (2.0, -0.1), cfg)
        # Strict decrease on every step.
        for a, b in zip(trace.f_values, trace.f_values[1:]):
            assert b < a
        # Recompute the Armijo acceptance from the recorded trace.
        for k in range(len(trace.step_norms)):
            decrease = trace.f_values[k] - trace.f_values[k + 1]
            required = (cfg.sigma_armijo * trace.alphas[k]
                        * trace.grad_norms[k] ** 2)
            assert decrease >= required * (1 - 1e-12)

    def test_sigma_hat_at_least_configured(self):
        trace = optimize(_pinch(), (2.0, -0.1), DescentConfig(max_iters=300))
        report = check_conditions(trace, 0)
        assert report.sigma_hat >= 0.1

    def test_stationary_start_stops_immediately(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        numer = (x - 1) ** 2 + (y - 1) ** 2
        f = RationalFunction(numer, 1 + x * x + y * y)
        trace = optimize(f, (1.0, 1.0))
        assert trace.stop_reason == "grad_tol"
        assert len(trace) == 1

    def test_divergent_run_hits_iteration_cap(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        f = RationalFunction(Polynomial.constant(2, 1), 1 + x * x + y * y)
        trace = optimize(f, (1.0, 1.0), DescentConfig(max_iters=500))
        assert trace.stop_reason == "max_iters"
        norms = [math.hypot(*p) for p in trace.iterates]
        assert norms[-1] > norms[0]
        assert trace.f_values[-1] < trace.f_values[0]

    def test_domain_violation_start(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        f = RationalFunction(x, x * x + y * y)
        trace = optimize(f, (0.0, 0.0))
        assert trace.stop_reason == "domain_violation"
        assert len(trace.f_values) == 0

    def test_determinism(self):
        f = _pinch()
        t1 = optimize(f, (2.0, -0.1), DescentConfig(max_iters=200))
        t2 = optimize(f, (2.0, -0.1), DescentConfig(max_iters=200))
        assert t1 == t2

    def test_non_finite_start_rejected(self):
        with pytest.raises(ValueError):
            optimize(_pinch(), (float("nan"), 0.0))


class TestCheckConditions:
    def test_synthetic_halving_trace(self):
        """x_k = 2^-k on f = x^2: sigma_hat = 3/4, kappa_hat = 1/4.

        f_k - f_{k+1} = 3*4^{-k-1}, ||grad|| = 2^{1-k}, step = 2^{-k-1}.
        """
        f = _quadratic_1d()
        points = [(2.0 ** -k,) for k in range(10)]
        trace = trace_from_points(f, points)
        report = check_conditions(trace, 0)
        assert report.sigma_hat == pytest.approx(0.75)
        assert report.kappa_hat == pytest.approx(0.25)
        assert report.a2_violations == 0

    def test_single_point_trace_reports_none(self):
        f = _quadratic_1d()
        trace = trace_from_points(f, [(1.0,)])
        report = check_conditions(trace, 0)
        assert report.sigma_hat is None
        assert report.kappa_hat is None

    def test_degenerate_steps_counted_not_fatal(self):
        f = _quadratic_1d()
        trace = trace_from_points(f, [(1.0,), (1.0,), (0.5,)])
        report = check_conditions(trace, 0)
        assert report.degenerate_steps == 1
        assert report.sigma_hat is not None

    def test_tail_start_beyond_last_step_rejected(self):
        f = _quadratic_1d()
        trace = trace_from_points(f, [(1.0,), (0.5,)])
        with pytest.raises(ValueError):
            check_conditions(trace, 1)

    def test_zero_progress_step_counts_a2_violation(self):
        f = _pinch()
        # Symmetric points with identical f-value but nonzero step.
        trace = trace_from_points(f, [(1.0, 1.0), (-1.0, -1.0)])
        report = check_conditions(trace, 0)
        assert report.a2_violations == 1


class TestTracePersistence:
    def test_round_trip_is_bit_exact(self, tmp_path):
        trace = optimize(_pinch(), (2.0, -0.1), DescentConfig(max_iters=50))
        path = tmp_path / "run.trace.csv"
        write_trace_csv(trace, path)
        back = read_trace_csv(path, stop_reason=trace.stop_reason)
        assert back == trace

    def test_round_trip_write_is_byte_identical(self, tmp_path):
        trace = optimize(_pinch(), (2.0, -0.1), DescentConfig(max_iters=50))
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_trace_csv(trace, p1)
        write_trace_csv(read_trace_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_reingested_trace_reproduces_conditions(self, tmp_path):
        trace = optimize(_pinch(), (2.0, -0.1), DescentConfig(max_iters=80))
        path = tmp_path / "run.trace.csv"
        write_trace_csv(trace, path)
        back = read_trace_csv(path)
        assert check_conditions(back, 10) == check_conditions(trace, 10)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_trace_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            read_trace_csv(path)
