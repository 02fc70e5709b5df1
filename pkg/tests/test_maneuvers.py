import math

import numpy as np
import pytest

from vista.errors import InvalidParams, UnsupportedManeuver
from vista.geometry import BodyGeometry, Pose2
from vista.maneuvers import (
    ManeuverL1,
    ManeuverL2,
    compile_actor,
    expand_l2,
    l1_to_keywaypoint,
    local_to_global,
)
from vista.scenario import ActorSpec, PedestrianWaypoint, Trigger
from vista.smoothing import KeyWaypoint


def l2(kind, **params):
    return ManeuverL2(kind, params)


class TestExpand:
    def test_drive_straight_is_single_atom(self):
        atoms = expand_l2(l2("drive_straight", length=50, speed=10))
        assert atoms == [
            ManeuverL1("straight", {"length": 50.0, "target_speed": 10.0})
        ]

    def test_swerve_out_and_back(self):
        atoms = expand_l2(l2("swerve", length=30, lateral=2.5, speed=8))
        assert [a.kind for a in atoms] == ["swerve_leg", "swerve_leg"]
        assert atoms[0].params["length"] == pytest.approx(15)
        assert atoms[0].params["lateral_offset"] == pytest.approx(2.5)
        assert atoms[1].params["lateral_offset"] == pytest.approx(-2.5)
        # Net lateral displacement of the composed waypoints is zero.
        kws = [l1_to_keywaypoint(a) for a in atoms]
        final = local_to_global(Pose2(0, 0, 0), kws)[-1]
        assert final.pose.y == pytest.approx(0.0, abs=1e-9)

    def test_cut_in_expansion_table(self):
        atoms = expand_l2(l2("cut_in", advance=20, lateral=3.5, speed=12))
        assert [a.kind for a in atoms] == ["straight", "swerve_leg", "straight"]
        assert atoms[0].params["length"] == pytest.approx(20)
        assert atoms[1].params == {
            "length": 15.0,
            "lateral_offset": -3.5,
            "target_speed": 12.0,
        }
        assert atoms[2].params["length"] == pytest.approx(10)
        # Final heading equals the initial heading after composition.
        kws = [l1_to_keywaypoint(a) for a in atoms]
        final = local_to_global(Pose2(0, 0, 0.7), kws)[-1]
        assert final.pose.heading == pytest.approx(0.7, abs=1e-9)

    def test_lane_change_net_lateral(self):
        atoms = expand_l2(l2("lane_change", length=25, lateral=3.5, speed=9))
        kws = [l1_to_keywaypoint(a) for a in atoms]
        final = local_to_global(Pose2(0, 0, 0), kws)[-1]
        assert final.pose.y == pytest.approx(3.5, abs=1e-9)

    def test_overtake_returns_to_lane(self):
        atoms = expand_l2(l2("overtake", length=40, lateral=3.0, speed=12))
        kws = [l1_to_keywaypoint(a) for a in atoms]
        final = local_to_global(Pose2(0, 0, 0), kws)[-1]
        assert final.pose.y == pytest.approx(0.0, abs=1e-9)
        assert final.pose.heading == pytest.approx(0.0, abs=1e-9)

    def test_turns_default_to_quarter_circle(self):
        left = expand_l2(l2("turn_left", radius=10, speed=4))
        right = expand_l2(l2("turn_right", radius=10, speed=4))
        assert left[0].params["angle"] == pytest.approx(math.pi / 2)
        assert right[0].params["angle"] == pytest.approx(-math.pi / 2)

    def test_pull_over_stop_ends_with_hold(self):
        atoms = expand_l2(
            l2("pull_over_stop", advance=10, lateral=-2.5, speed=6, duration=5)
        )
        assert atoms[-1].kind == "stop_hold"
        assert atoms[-1].params["duration"] == pytest.approx(5)

    def test_park_leg(self):
        atoms = expand_l2(l2("park_leg", length=8, lateral=2.5, speed=3, duration=10))
        assert [a.kind for a in atoms] == ["swerve_leg", "stop_hold"]

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedManeuver):
            expand_l2(l2("barrel_roll", length=10))

    def test_invalid_params_after_expansion(self):
        with pytest.raises(InvalidParams):
            expand_l2(l2("drive_straight", length=-5, speed=10))
        with pytest.raises(InvalidParams):
            expand_l2(l2("drive_straight", length=10, speed=-1))
        with pytest.raises(InvalidParams):
            expand_l2(l2("drive_straight", speed=10))  # missing length

    def test_expansion_totality_over_valid_ranges(self, rng):
        cases = {
            "drive_straight": lambda: dict(length=rng.uniform(1, 200), speed=rng.uniform(0, 25)),
            "lane_change": lambda: dict(length=rng.uniform(5, 60), lateral=rng.uniform(-4, 4), speed=rng.uniform(1, 20)),
            "swerve": lambda: dict(length=rng.uniform(4, 80), lateral=rng.uniform(-4, 4), speed=rng.uniform(1, 20)),
            "cut_in": lambda: dict(advance=rng.uniform(1, 80), lateral=rng.uniform(-4, 4), speed=rng.uniform(1, 20)),
            "overtake": lambda: dict(length=rng.uniform(5, 100), lateral=rng.uniform(-4, 4), speed=rng.uniform(1, 20)),
            "turn_left": lambda: dict(radius=rng.uniform(2, 40), speed=rng.uniform(1, 15)),
            "turn_right": lambda: dict(radius=rng.uniform(2, 40), speed=rng.uniform(1, 15)),
            "pull_over_stop": lambda: dict(advance=rng.uniform(1, 50), lateral=rng.uniform(-4, 4), speed=rng.uniform(1, 12), duration=rng.uniform(0, 20)),
            "park_leg": lambda: dict(length=rng.uniform(2, 30), lateral=rng.uniform(-4, 4), speed=rng.uniform(0.5, 8), duration=rng.uniform(0, 30)),
        }
        for _ in range(30):
            for kind, make in cases.items():
                assert expand_l2(l2(kind, **make()))

    def test_expansion_deterministic(self):
        m = l2("swerve", length=30, lateral=2.5, speed=8)
        assert expand_l2(m) == expand_l2(m)


class TestL1ToKeywaypoint:
    def test_straight(self):
        kwp = l1_to_keywaypoint(ManeuverL1("straight", {"length": 10, "target_speed": 5}))
        assert (kwp.pose.x, kwp.pose.y, kwp.pose.heading) == (10, 0, 0)
        assert kwp.speed == 5

    def test_quarter_circle_turn(self):
        kwp = l1_to_keywaypoint(
            ManeuverL1("turn", {"radius": 10, "angle": math.pi / 2, "target_speed": 4})
        )
        assert kwp.pose.x == pytest.approx(10)
        assert kwp.pose.y == pytest.approx(10)
        assert kwp.pose.heading == pytest.approx(math.pi / 2)
        assert kwp.speed == 4

    def test_right_turn_mirrors(self):
        kwp = l1_to_keywaypoint(
            ManeuverL1("turn", {"radius": 10, "angle": -math.pi / 2, "target_speed": 4})
        )
        assert kwp.pose.x == pytest.approx(10)
        assert kwp.pose.y == pytest.approx(-10)
        assert kwp.pose.heading == pytest.approx(-math.pi / 2)

    def test_stop_hold(self):
        kwp = l1_to_keywaypoint(ManeuverL1("stop_hold", {"duration": 3}))
        assert (kwp.pose.x, kwp.pose.y, kwp.pose.heading) == (0, 0, 0)
        assert kwp.speed == 0
        assert kwp.hold == 3

    def test_swerve_leg(self):
        kwp = l1_to_keywaypoint(
            ManeuverL1("swerve_leg", {"length": 15, "lateral_offset": -3.5, "target_speed": 12})
        )
        assert (kwp.pose.x, kwp.pose.y) == (15, -3.5)
        assert kwp.pose.heading == 0


class TestLocalToGlobal:
    def test_identity_frame(self):
        out = local_to_global(Pose2(0, 0, 0), [KeyWaypoint(Pose2(10, 0, 0), 5)])
        assert len(out) == 1
        assert (out[0].pose.x, out[0].pose.y, out[0].pose.heading) == (10, 0, 0)

    def test_rotated_start(self):
        out = local_to_global(Pose2(5, 5, math.pi / 2), [KeyWaypoint(Pose2(10, 0, 0), 5)])
        assert out[0].pose.x == pytest.approx(5)
        assert out[0].pose.y == pytest.approx(15)
        assert out[0].pose.heading == pytest.approx(math.pi / 2)

    def test_chained_quarter_turns(self):
        locals_ = [
            KeyWaypoint(Pose2(10, 0, math.pi / 2), 5),
            KeyWaypoint(Pose2(10, 0, math.pi / 2), 5),
        ]
        out = local_to_global(Pose2(0, 0, 0), locals_)
        assert (out[0].pose.x, out[0].pose.y) == pytest.approx((10, 0))
        assert out[0].pose.heading == pytest.approx(math.pi / 2)
        assert (out[1].pose.x, out[1].pose.y) == pytest.approx((10, 10))
        assert out[1].pose.heading == pytest.approx(math.pi)

    def test_speeds_and_holds_preserved(self):
        locals_ = [KeyWaypoint(Pose2(5, 1, 0.2), 7.5, hold=2.0)]
        out = local_to_global(Pose2(1, 2, 0.5), locals_)
        assert out[0].speed == 7.5
        assert out[0].hold == 2.0


def pedestrian(waypoints, start=Pose2(0, 0, 0)):
    return ActorSpec(
        actor_id="ped",
        kind="pedestrian",
        body=BodyGeometry(0.5, 0.5),
        start_pose=start,
        trigger=Trigger("immediate"),
        waypoints=tuple(waypoints),
    )


def vehicle(maneuvers, start=Pose2(0, 0, 0), speed_cap=30.0):
    return ActorSpec(
        actor_id="veh",
        kind="car",
        body=BodyGeometry(4.0, 2.0),
        start_pose=start,
        trigger=Trigger("immediate"),
        maneuvers=tuple(maneuvers),
        speed_cap=speed_cap,
    )


class TestCompileActor:
    def test_pedestrian_three_meters(self):
        traj = compile_actor(
            pedestrian([PedestrianWaypoint(0, 0, 1.5), PedestrianWaypoint(3, 0)]), dt=0.1
        )
        assert traj.samples[-1].t == pytest.approx(2.0)
        assert traj.samples[-1].pose.x == pytest.approx(3.0, abs=1e-9)

    def test_pedestrian_waypoints_are_start_pose_relative(self):
        start = Pose2(40, -4, math.pi / 2)
        traj = compile_actor(
            pedestrian([PedestrianWaypoint(0, 0, 1.0), PedestrianWaypoint(8, 0, 1.0)], start),
            dt=0.1,
        )
        assert traj.samples[-1].pose.x == pytest.approx(40, abs=1e-9)
        assert traj.samples[-1].pose.y == pytest.approx(4, abs=1e-9)

    def test_pedestrian_hold(self):
        traj = compile_actor(
            pedestrian(
                [PedestrianWaypoint(0, 0, 1.0), PedestrianWaypoint(2, 0, 1.0, hold=1.5)]
            ),
            dt=0.1,
        )
        tail = [s for s in traj.samples if s.t > 2.0 - 1e-9]
        assert len(tail) >= 15
        assert all(s.speed == 0 for s in tail[1:])

    def test_vehicle_straight_100m(self):
        traj = compile_actor(
            vehicle([ManeuverL2("drive_straight", {"length": 100, "speed": 10})]), dt=0.1
        )
        last = traj.samples[-1]
        assert math.hypot(last.pose.x - 100, last.pose.y) < 0.1
        assert max(s.speed for s in traj.samples) <= 10 + 1e-9

    def test_vehicle_empty_script(self):
        with pytest.raises(InvalidParams):
            compile_actor(vehicle([]), dt=0.1)

    def test_bad_dt(self):
        with pytest.raises(InvalidParams):
            compile_actor(vehicle([ManeuverL2("drive_straight", {"length": 10, "speed": 5})]), dt=0)

    def test_initial_speed_matches_first_atom(self):
        traj = compile_actor(
            vehicle([ManeuverL2("drive_straight", {"length": 50, "speed": 8})]), dt=0.1
        )
        assert traj.samples[0].speed == pytest.approx(8.0)

    def test_park_leg_ends_at_rest(self):
        traj = compile_actor(
            vehicle(
                [
                    ManeuverL2("park_leg", {"length": 8, "lateral": 2.0, "speed": 3, "duration": 4}),
                ]
            ),
            dt=0.1,
        )
        assert traj.samples[0].speed == pytest.approx(3.0)
        assert traj.samples[-1].speed == 0.0
        stopped = [s for s in traj.samples if s.speed == 0.0]
        assert len(stopped) >= 40  # 4 s dwell at dt=0.1

    def test_frame_covariance(self, rng):
        script = [
            ManeuverL2("drive_straight", {"length": 30, "speed": 9}),
            ManeuverL2("lane_change", {"length": 20, "lateral": 3.0, "speed": 9}),
            ManeuverL2("turn_left", {"radius": 12, "speed": 6}),
        ]
        base = compile_actor(vehicle(script), dt=0.1)
        for _ in range(5):
            tx, ty = rng.uniform(-50, 50, size=2)
            phi = rng.uniform(-math.pi, math.pi)
            frame = Pose2(tx, ty, phi)
            moved = compile_actor(vehicle(script, start=frame), dt=0.1)
            assert len(moved.samples) == len(base.samples)
            c, s = math.cos(phi), math.sin(phi)
            for a, b in zip(base.samples, moved.samples):
                ex = tx + c * a.pose.x - s * a.pose.y
                ey = ty + s * a.pose.x + c * a.pose.y
                assert b.pose.x == pytest.approx(ex, abs=1e-9)
                assert b.pose.y == pytest.approx(ey, abs=1e-9)
                assert b.speed == pytest.approx(a.speed, abs=1e-9)
