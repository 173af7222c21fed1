import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from fsodbs.baselines import baseline_center_fixed, baseline_grid_search, block_centers
from fsodbs.broad import access_control, make_plan, validate_plan
from fsodbs.knapsack import GaConfig
from fsodbs.models import Position3D
from fsodbs.scenario import Scenario, ScenarioSpec, generate_scenario, truncated_exponential
from fsodbs.sweep import (
    COLUMNS,
    SweepSpec,
    TrialResult,
    emit_results,
    format_results,
    parse_results,
    run_sweep,
)


def test_empty_scenario():
    sc = generate_scenario(ScenarioSpec(n_users=0), 1)
    assert len(sc.users) == 0


def test_scenario_layout_and_determinism():
    spec = ScenarioSpec(n_users=200, delta_km=7.5)
    sc = generate_scenario(spec, 11)
    assert np.all(np.abs(sc.users.x) <= 250) and np.all(np.abs(sc.users.y) <= 250)
    assert sc.mbs == Position3D(7500.0, 0.0, sc.config.h_m)
    assert generate_scenario(spec, 11).users == sc.users
    assert generate_scenario(spec, 12).users != sc.users
    assert Scenario.from_dict(sc.to_dict()) == sc


def test_visibility_rewrites_attenuation():
    sc = generate_scenario(ScenarioSpec(n_users=3, visibility_km=2.0), 0)
    assert sc.config.fso.gamma is None and sc.config.fso.visibility == 2.0
    assert generate_scenario(ScenarioSpec(n_users=3), 0).config.fso.gamma == 1.0


def test_truncation_bounds():
    draws = truncated_exponential(np.random.default_rng(0), 5e6, 5e5, 5e8, 10_000)
    assert draws.min() >= 5e5 and draws.max() <= 5e8


def test_truncated_mean_matches_integral():
    mean, lo, hi = 5e6, 5e5, 5e8
    pdf = lambda x: math.exp(-x / mean) / mean
    mass = quad(pdf, lo, hi, points=[mean, 10 * mean], limit=200)[0]
    first = quad(lambda x: x * pdf(x), lo, hi, points=[mean, 10 * mean], limit=200)[0]
    analytic = first / mass
    draws = truncated_exponential(np.random.default_rng(1), mean, lo, hi, 10_000)
    assert draws.mean() == pytest.approx(analytic, rel=0.05)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("height", (1.0,))
    with pytest.raises(ValueError):
        SweepSpec("delta_km", ())
    with pytest.raises(ValueError):
        SweepSpec("delta_km", (5.0, -1.0))


def test_sweep_sizes():
    small = ScenarioSpec(n_users=8)
    assert run_sweep(SweepSpec("delta_km", (5.0,), 1), small, algorithms=()) == []
    out = run_sweep(SweepSpec("delta_km", (5.0,), 1), small, algorithms=("broad",))
    assert len(out) == 1 and out[0].error is None
    with pytest.raises(ValueError):
        run_sweep(SweepSpec("delta_km", (5.0,), 1), small, algorithms=("magic",))


def test_sweep_order_seeds_and_parallel_equivalence():
    spec = SweepSpec("visibility_km", (3.0, 1.0), 2, base_seed=5)
    tmpl = ScenarioSpec(n_users=10, delta_km=5.0)
    serial = run_sweep(spec, tmpl, ("center_fixed", "broad"), timing=False)
    keys = [(r.algorithm, r.sweep_value, r.trial) for r in serial]
    assert keys == sorted(keys)
    assert {r.seed for r in serial} == {5, 6}
    parallel = run_sweep(spec, tmpl, ("center_fixed", "broad"), timing=False, workers=2)
    assert format_results(parallel) == format_results(serial)


def test_broad_beats_far_distance():
    spec = SweepSpec("delta_km", (5.0, 20.0), 2)
    out = run_sweep(spec, ScenarioSpec(n_users=40), ("broad",), timing=False)
    near = np.mean([r.satisfied_count for r in out if r.sweep_value == 5.0])
    far = np.mean([r.satisfied_count for r in out if r.sweep_value == 20.0])
    assert near > far


# --- baselines -------------------------------------------------------------------


def test_center_fixed_on_empty_and_valid():
    empty = generate_scenario(ScenarioSpec(n_users=0), 0)
    assert baseline_center_fixed(empty).satisfied_count == 0
    sc = generate_scenario(ScenarioSpec(n_users=30, delta_km=8.0), 2)
    plan = baseline_center_fixed(sc, n_altitudes=11)
    assert plan.dbs_position.x == 0.0 and plan.dbs_position.y == 0.0
    assert validate_plan(plan, sc.users, sc.mbs, sc.config) == []


def test_grid_search_single_block_is_center_column():
    sc = generate_scenario(ScenarioSpec(n_users=20, delta_km=6.0), 3)
    assert block_centers(sc, 1) == [(0.0, 0.0)]
    one = baseline_grid_search(sc, blocks=1, n_altitudes=11)
    center = baseline_center_fixed(sc, n_altitudes=11)
    assert one.to_dict() == center.to_dict()
    with pytest.raises(ValueError):
        block_centers(sc, 0)


def test_grid_search_dominates_its_candidates():
    sc = generate_scenario(ScenarioSpec(n_users=15, delta_km=9.0), 4)
    ga = GaConfig()
    best = baseline_grid_search(sc, blocks=2, ga_cfg=ga, n_altitudes=3)
    for x, y in block_centers(sc, 2):
        for h in (50.0, 275.0, 500.0):
            pos = Position3D(x, y, h)
            z, b, r = access_control(pos, sc.users, sc.mbs, sc.config, ga)
            assert best.satisfied_count >= make_plan(pos, z, b, r, sc.users, sc.config, 1).satisfied_count


# --- output -----------------------------------------------------------------------

FIXTURE = [
    TrialResult("broad", "delta_km", 5.0, 0, 0, 77, 0.412345678, 0.98765432, 10.123456, -0.000123456, 127.5, 1523.25),
    TrialResult("center_fixed", "delta_km", 20.0, 1, 1, 2, 1.0, 1 / 3, 0.0, 0.0, 50.0, 0.0),
]
GOLDEN_CSV = (
    "algorithm,sweep_variable,sweep_value,trial,seed,satisfied_count,backhaul_util,access_util,"
    "dbs_x_m,dbs_y_m,dbs_h_m,runtime_ms\n"
    "broad,delta_km,5,0,0,77,0.412346,0.987654,10.1235,-0.000123456,127.5,1523.25\n"
    "center_fixed,delta_km,20,1,1,2,1,0.333333,0,0,50,0\n"
)


def test_csv_golden_fixture():
    assert format_results(FIXTURE, "csv") == GOLDEN_CSV


def test_header_only_when_empty():
    assert format_results([], "csv") == ",".join(COLUMNS) + "\n"
    assert format_results([], "json-lines") == ""


@pytest.mark.parametrize("fmt", ["csv", "json-lines"])
def test_round_trip(fmt):
    back = parse_results(format_results(FIXTURE, fmt), fmt)
    for a, b in zip(FIXTURE, back):
        for k in COLUMNS:
            va, vb = getattr(a, k), getattr(b, k)
            if isinstance(va, float):
                assert vb == pytest.approx(va, rel=5e-6)
            else:
                assert va == vb


def test_json_lines_nan_is_null():
    row = TrialResult("broad", "delta_km", 5.0, 0, 0, 0, *([math.nan] * 5), 0.0, error="boom")
    text = format_results([row], "json-lines")
    assert '"backhaul_util": null' in text
    assert math.isnan(parse_results(text, "json-lines")[0].dbs_h_m)


def test_emit_destinations(tmp_path):
    buf = io.StringIO()
    emit_results(FIXTURE, "csv", buf)
    assert buf.getvalue() == GOLDEN_CSV
    path = tmp_path / "out.csv"
    emit_results(FIXTURE, "csv", path)
    assert path.read_text() == GOLDEN_CSV
    with pytest.raises(OSError):
        emit_results(FIXTURE, "csv", tmp_path / "missing" / "out.csv")
    with pytest.raises(ValueError):
        format_results(FIXTURE, "xml")
