import math
from dataclasses import replace

import numpy as np
import pytest

from ccasim.errors import ConfigError, SolverError
from ccasim.frames import InertialPose, WaypointSegment, stack_to_global
from ccasim.kinematics import OwnShipParams
from ccasim.network import NetConfig
from ccasim.rules import K_GW_DEFAULT, K_SO_DEFAULT
from ccasim.sim import (Scenario, ShipConfig, _guarded_update, _shift_multiplier, _warm_start, agent_view,
                        async_schedule, canonical_course, classify_all, crossing_2, headon_2, route_segments, run,
                        scenario_library)


def _lone_ship(duration=400.0):
    ship = ShipConfig("solo", InertialPose(0.0, 0.0, 0.0), ((0.0, 0.0), (5000.0, 0.0)),
                      OwnShipParams(U_d=3.0, T_1=30.0, dT=20.0))
    return Scenario("solo", (ship,), duration=duration)


def test_single_ship_travels_straight():
    log = run(_lone_ship())
    tr = log.track(0)
    assert tr[-1, 0] == 400.0
    assert tr[-1, 1] == pytest.approx(3.0 * 400.0)
    assert np.all(tr[:, 2] == 0.0)
    assert np.all(np.isinf(tr[:, 6]))
    assert log.negotiations == [] and log.alphas == []


def test_time_is_monotone_and_complete():
    log = run(_lone_ship(100.0))
    assert list(log.times()) == [0.0, 20.0, 40.0, 60.0, 80.0, 100.0]


def test_leg_advance():
    ship = ShipConfig("turn", InertialPose(0.0, 0.0, 0.0), ((0.0, 0.0), (100.0, 0.0), (100.0, 3000.0)),
                      OwnShipParams(U_d=3.0, T_1=30.0, dT=20.0))
    tr = run(Scenario("turn", (ship,), duration=600.0)).track(0)
    # the ship turns east after passing the first waypoint and closes on the new guideline
    assert tr[-1, 2] > 500.0
    offset = np.abs(tr[:, 1] - 100.0)
    assert offset[-1] < 0.5 * offset.max()
    assert np.all(np.diff(tr[-5:, 2]) > 0)


@pytest.mark.parametrize("make", [
    lambda: ShipConfig("a", (0, 0, 0), ((0, 0),)),
    lambda: ShipConfig("a", (0, 0, 0), ((0, 0), (0, 0))),
    lambda: ShipConfig("a", (0, 0, 0), ((0, 0), (1, 0)), length=0.0),
    lambda: Scenario("x", ()),
    lambda: Scenario("x", (ShipConfig("a", (0, 0, 0), ((0, 0), (1, 0))),) * 2),
    lambda: replace(_lone_ship(), ccas_period=0.0),
    lambda: replace(_lone_ship(), K_SO=2.0),
    lambda: replace(_lone_ship(), solver="newton"),
    lambda: replace(_lone_ship(), chi_prop_max=2.0),
])
def test_invalid_configuration(make):
    with pytest.raises(ConfigError):
        make()


def test_route_segments():
    segs = route_segments(((0, 0), (0, 10), (10, 10)))
    assert segs[0][0] == WaypointSegment(0, 0, math.pi / 2)
    assert segs[0][1] == pytest.approx(10.0)
    assert segs[1][0].chi_wp == pytest.approx(0.0)


def test_canonical_course():
    seg = WaypointSegment(0, 0, 3.0)
    assert canonical_course(-3.0, seg) == pytest.approx(2 * math.pi - 3.0)
    assert canonical_course(3.1, seg) == pytest.approx(3.1)


def test_agents_agree_on_consensus_coordinates():
    poses = [InertialPose(0, 0, 0.1), InertialPose(500, 400, -2.9), InertialPose(-200, 300, 3.0)]
    segs = [WaypointSegment(0, 0, 0.0), WaypointSegment(900, 400, math.pi), WaypointSegment(-300, 300, -3.1)]
    views = []
    for i in range(3):
        initial, chi_nom = agent_view(i, poses, segs)
        views.append(stack_to_global(initial[:, None, :], segs[i]))
        assert chi_nom[i] == 0.0
    for v in views[1:]:
        assert v == pytest.approx(views[0], abs=1e-9)


HEAD_ON = ([InertialPose(0, 0, 0), InertialPose(1000, 0, math.pi)],
           [WaypointSegment(0, 0, 0), WaypointSegment(1000, 0, math.pi)])


def test_classify_all_head_on_negotiates():
    alpha, enc = classify_all(*HEAD_ON, [3, 3], 1500.0, 400.0)
    assert np.isnan(alpha[0, 0]) and np.isnan(alpha[1, 1])
    assert alpha[0, 1] == 1.0 and alpha[1, 0] == 1.0


def test_classify_all_out_of_range():
    alpha, enc = classify_all(*HEAD_ON, [3, 3], 900.0, 400.0)
    assert np.isnan(alpha).all() and enc == {}


def test_classify_all_give_way_pair():
    poses = [InertialPose(0, 0, 0), InertialPose(500, 500, -math.pi / 2)]
    segs = [WaypointSegment(0, 0, 0), WaypointSegment(500, 1000, -math.pi / 2)]
    alpha, _ = classify_all(poses, segs, [3, 3], 1500.0, 400.0)
    assert (alpha[0, 1], alpha[1, 0]) == (K_GW_DEFAULT, K_SO_DEFAULT)


def test_role_latch():
    poses = [InertialPose(0, 0, 0), InertialPose(500, 500, -math.pi / 2)]
    segs = [WaypointSegment(0, 0, 0), WaypointSegment(500, 1000, -math.pi / 2)]
    memory = {}
    first, _ = classify_all(poses, segs, [3, 3], 1500.0, 400.0, memory=memory)
    # the give-way ship has moved to the starboard side of its fairway
    moved = [InertialPose(100, 30, 0.3), poses[1]]
    latched, _ = classify_all(moved, segs, [3, 3], 1500.0, 400.0, memory=memory)
    fresh, _ = classify_all(moved, segs, [3, 3], 1500.0, 400.0)
    assert np.array_equal(latched, first, equal_nan=True)
    assert not np.array_equal(fresh, first, equal_nan=True)
    # once the pair is no longer closing the latch is released
    apart = [InertialPose(1400, 0, 0), InertialPose(500, -500, -math.pi / 2)]
    classify_all(apart, segs, [3, 3], 1500.0, 400.0, memory=memory)
    assert memory == {}


def test_shift_multiplier():
    z = np.arange(2 * 4 * 3, dtype=float)
    out = _shift_multiplier(z, 1, 2, 3).reshape(2, 4, 3)
    ref = z.reshape(2, 4, 3)
    assert out[:, :3] == pytest.approx(ref[:, 1:])
    assert not out[:, 3].any()
    assert not _shift_multiplier(z, 9, 2, 3).any()
    assert _shift_multiplier(None, 1, 2, 3) is None


def test_warm_start():
    prev = np.arange(2 * 4 * 2, dtype=float).reshape(2, 4, 2)
    out = _warm_start(prev, 1, (0, 0), (0, 0), 0, 4, 7.0)
    assert out[:, :3] == pytest.approx(prev[:, 1:])
    assert out[0, 3] == pytest.approx([7.0, 1.0])
    assert out[1, 3] == pytest.approx([0.0, 1.0])
    changed = _warm_start(prev, 1, (0, 0), (0, 1), 0, 4, 7.0)
    assert changed[1] == pytest.approx(np.tile([0.0, 1.0], (4, 1)))
    assert _warm_start(None, 1, None, (0, 0), 0, 4, 2.0)[0, 0, 0] == 2.0


def test_async_schedule():
    sc = replace(headon_2(mode="async", seed=3))
    a = async_schedule(sc, 2, 5, 100.0)
    assert a == async_schedule(sc, 2, 5, 100.0)
    assert [t for t, _, _ in a] == sorted(t for t, _, _ in a)
    assert sorted((i, s) for _, i, s in a) == [(i, s) for i in range(2) for s in range(sc.splitting.s_max)]
    assert all(100.0 <= t < 100.0 + sc.ccas_period for t, _, _ in a)


def test_guarded_update_records_solver_fault():
    faults = []

    def boom():
        raise SolverError("non-finite objective")

    class _S:
        ident = 4

    assert _guarded_update(boom, _S(), 7, faults) is None
    assert faults == [{"kind": "solver", "epoch": 7, "ship": 4, "detail": "non-finite objective"}]


@pytest.fixture(scope="module")
def field_headon():
    return run(headon_2(profile="field"))


def test_field_headon_deterministic(field_headon):
    again = run(headon_2(profile="field"))
    assert again.ticks == field_headon.ticks
    assert again.negotiations == field_headon.negotiations


def test_alpha_frozen_once_per_epoch(field_headon):
    epochs = {r.epoch for r in field_headon.negotiations}
    assert len(field_headon.alphas) == len(epochs)


def test_applied_controls_within_bounds(field_headon):
    sc = field_headon.scenario
    for i in range(2):
        tr = field_headon.track(i)
        assert np.all(np.abs(tr[:, 4]) <= sc.y_max)
        assert np.all((tr[:, 5] >= 0.4) & (tr[:, 5] <= 1.0))


def test_field_headon_clears_scaled_threshold(field_headon):
    (_, d), = field_headon.pair_distances().values()
    assert d.min() >= 5.0 * 0.05


def test_solver_failure_keeps_previous_plan(monkeypatch):
    from ccasim.nadmm import solver as solver_mod

    calls = {"n": 0}
    real = solver_mod.CcasLocalProblem.solve

    def flaky(self, plan, z_half, xi, beta):
        calls["n"] += 1
        if calls["n"] % 3 == 0:
            raise SolverError("non-finite objective")
        return real(self, plan, z_half, xi, beta)

    monkeypatch.setattr(solver_mod.CcasLocalProblem, "solve", flaky)
    sc = replace(crossing_2(profile="field"), duration=40.0)
    log = run(sc)
    assert any(f["kind"] == "solver" for f in log.faults)
    assert not log.aborted
    for i in range(2):
        tr = log.track(i)
        assert np.all(np.isfinite(tr[:, 4:6]))
        assert np.all(np.abs(tr[:, 4]) <= sc.y_max) and np.all(tr[:, 5] >= 0.4)


def test_sync_loss_aborts_with_fault():
    sc = headon_2(profile="field", loss=0.5)
    log = run(sc)
    assert log.aborted
    fault = log.faults[-1]
    assert fault["kind"] == "deadlock" and fault["missing"]
    assert math.isnan(log.ticks[-1].u_y)


def test_async_staleness_bounded():
    sc = scenario_library()["combined-3"](profile="field", mode="async")
    sc = replace(sc, duration=60.0)
    log = run(sc)
    period = sc.ccas_period / sc.splitting.s_max
    bound = sc.net.T_delay + (1.0 + sc.async_jitter) * period
    finite = [r.staleness for r in log.negotiations if math.isfinite(r.staleness)]
    assert finite and max(finite) <= bound + 1e-9
    # after the first round every ship has heard from every other ship
    assert all(math.isfinite(r.staleness) for r in log.negotiations if r.s >= 2)


def test_library_contents():
    lib = scenario_library()
    assert set(lib) >= {"headon-2", "crossing-2", "overtaking-2", "combined-3", "cross-4", "cross-6", "cross-6-loss5"}
    c6 = lib["cross-6"]()
    assert len(c6.ships) == 6
    assert lib["cross-6-loss5"]().net.loss_p == 0.05
    h = lib["headon-2"]()
    assert abs(abs(h.ships[0].start.chi_n - h.ships[1].start.chi_n) - math.pi) < 1e-12
    sim, field = h, lib["headon-2"](profile="field")
    assert (sim.y_max, sim.splitting.beta, sim.dT, sim.weights.K_y, sim.weights.K_s) == (60.0, 3e-4, 20.0, 1e-2, 2e-2)
    assert (field.y_max, field.splitting.beta, field.dT, field.weights.K_y, field.weights.K_s) == \
        (10.0, 5e-4, 5.0, 2e-2, 4e-2)
    assert sim.ships[0].params.chi_max == field.ships[0].params.chi_max == math.pi / 6
    assert (sim.ccas_period, field.ccas_period) == (20.0, 5.0)
    assert sim.ships[0].domain.d_x == 51.5 and sim.ships[0].domain.d_y == 8.6


def test_net_override():
    sc = replace(headon_2(), net=NetConfig(mode="async", seed=9))
    assert sc.net.mode == "async"
