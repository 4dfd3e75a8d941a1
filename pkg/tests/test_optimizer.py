import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtffm.errors import PreconditionError
from mtffm.kapteyn import DesignCoefficients, WaveformParams
from mtffm.metrics import rms_bandwidth_direct
from mtffm.optimizer import (
    OptimizerConfig,
    band_violation,
    evaluate,
    objective,
    optimize,
    project_convergence,
    random_init,
)
from mtffm.special_functions import weighted_sum


@pytest.fixture(scope="module")
def short_run():
    init = random_init(6, 1)
    params = WaveformParams(1.0, 40.0, init)
    trace = optimize(init, params, OptimizerConfig(max_evals=120, seed=1))
    return init, params, trace


class TestInit:
    def test_deterministic_and_scaled(self):
        a = random_init(32, 7)
        b = random_init(32, 7)
        assert np.array_equal(a.z, b.z)
        assert a.weighted_sum == pytest.approx(0.95, rel=1e-14)
        assert not np.array_equal(a.z, random_init(32, 8).z)

    def test_stable_stream(self):
        # init is the default_rng stream, rescaled
        z = np.random.default_rng(0).standard_normal(3)
        assert random_init(3, 0).z == pytest.approx(z * 0.95 / weighted_sum(z))

    def test_bad_arguments(self):
        with pytest.raises(PreconditionError):
            random_init(0, 0)
        with pytest.raises(PreconditionError):
            random_init(4, 0, margin=1.5)


class TestProjection:
    def test_inside_untouched(self):
        z = np.array([0.1, -0.2])
        assert np.array_equal(project_convergence(z), z)

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=32))
    def test_lands_inside(self, vals):
        p = project_convergence(np.array(vals))
        assert weighted_sum(p) <= 1.0
        if weighted_sum(np.array(vals)) > 1.0:
            # radial: direction preserved
            assert weighted_sum(p) == pytest.approx(1.0, rel=1e-12)
            assert np.allclose(p * weighted_sum(np.array(vals)), vals)


class TestBand:
    @pytest.mark.parametrize("beta2, expected", [(1.0, 0.0), (1.1, 0.0), (0.9, 0.0), (1.2, 0.1), (0.5, 0.4)])
    def test_violation(self, beta2, expected):
        assert band_violation(beta2, 1.0, 0.1) == pytest.approx(expected, abs=1e-15)

    def test_objective_is_linear_isr_when_feasible(self):
        init = random_init(4, 0)
        params = WaveformParams(1.0, 40.0, init)
        ev = evaluate(init, params, OptimizerConfig())
        assert ev.violation == 0.0
        assert ev.objective == pytest.approx(10 ** (ev.isr_db / 10), rel=1e-12)
        assert objective(init, params, OptimizerConfig()) == ev.objective

    def test_penalty_applies_outside_band(self):
        init = random_init(4, 0)
        params = WaveformParams(1.0, 40.0, init)
        target = rms_bandwidth_direct(init, params.A)
        ev = evaluate(init, params, OptimizerConfig(), beta2_target=2 * target)
        assert ev.violation == pytest.approx(0.4, rel=1e-9)
        assert ev.objective == pytest.approx(ev.isr.ratio + 100 * 0.16, rel=1e-9)

    def test_undefined_isr_scores_inf(self):
        params = WaveformParams(1.0, 40.0, DesignCoefficients.zeros(2))
        ev = evaluate(np.zeros(2), params, OptimizerConfig(), beta2_target=1.0)
        assert ev.objective == np.inf


class TestOptimize:
    def test_improves_and_stays_feasible(self, short_run):
        init, params, trace = short_run
        assert trace.final_isr_db <= trace.initial_isr_db
        assert trace.evals == 120
        assert len(trace.iterates) == trace.evals
        assert all(weighted_sum(z) <= 1.0 + 1e-12 for z in trace.iterates)
        lo, hi = 0.9 * trace.beta2_target, 1.1 * trace.beta2_target
        assert lo <= trace.final_beta2 <= hi

    def test_trace_monotone(self, short_run):
        _, _, trace = short_run
        objs = [r.objective for r in trace.iterations]
        assert all(b < a for a, b in zip(objs, objs[1:]))
        assert trace.iterations[0].eval_count == 1
        assert trace.improvement_db == pytest.approx(trace.initial_isr_db - trace.final_isr_db)

    def test_band_anchored_at_initial(self, short_run):
        init, params, trace = short_run
        assert trace.beta2_target == pytest.approx(rms_bandwidth_direct(init, params.A), rel=1e-12)

    def test_reproducible(self, short_run):
        init, params, trace = short_run
        again = optimize(init, params, OptimizerConfig(max_evals=120, seed=1))
        assert np.array_equal(again.best_z.z, trace.best_z.z)

    def test_callback_sees_improvements(self):
        init = random_init(3, 2)
        seen = []
        trace = optimize(init, WaveformParams(1.0, 30.0, init), OptimizerConfig(max_evals=30), callback=seen.append)
        assert seen == trace.iterations[1:]

    def test_infeasible_start_projected(self):
        z = np.array([0.8, 0.4])
        params = WaveformParams(1.0, 30.0, DesignCoefficients(project_convergence(z)))
        trace = optimize(z, params, OptimizerConfig(max_evals=10))
        assert weighted_sum(trace.iterates[0]) == pytest.approx(1.0)

    def test_zero_bandwidth_rejected(self):
        params = WaveformParams(1.0, 30.0, DesignCoefficients.zeros(2))
        with pytest.raises(PreconditionError):
            optimize(np.zeros(2), params, OptimizerConfig(max_evals=5))

    def test_config_validation(self):
        with pytest.raises(PreconditionError):
            OptimizerConfig(delta=0.0)
        with pytest.raises(PreconditionError):
            OptimizerConfig(max_evals=0)
