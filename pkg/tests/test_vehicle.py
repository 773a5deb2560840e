"""Vehicle state machine: phases, cadence, events, and local decisions."""

import math

import numpy as np
import pytest

from silentlink.codec import (
    CheckpointPayload,
    Command,
    ControlPacket,
    PriorityPayload,
    encode_control,
)
from silentlink.compression import ChannelPredictorBank, EnvCompressorConfig
from silentlink.telemetry import ChannelKind, Mission, Pose, SensorChannel
from silentlink.vehicle import EventRecord, VehicleAgent, VehicleConfig, VehiclePhase

ENV_ID = 16
TICK = 0.25


def make_agent(trace=None, checkpoint_period=30.0, t_mission=600.0, threshold=1.0):
    mission = Mission(((0.0, 0.0, 2.0), (600.0, 0.0, 2.0)), t_mission, checkpoint_period, 1.0)
    kin = [
        SensorChannel(i, ChannelKind.KINEMATIC, "u", TICK, name=n)
        for i, n in enumerate(["accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z", "depth"])
    ]
    env = [SensorChannel(ENV_ID, ChannelKind.ENVIRONMENTAL, "C", 1.0, name="temp")]
    bank = ChannelPredictorBank(kin, TICK, (0.0, 0.0), 0.0)
    return VehicleAgent(
        mission,
        bank,
        env,
        {ENV_ID: EnvCompressorConfig(8, threshold)},
        VehicleConfig(),
        trace=trace,
    )


def quiet_kin(agent):
    return np.array([0, 0, 0, 0, 0, 0, agent.pose.z], dtype=float)


def start(agent, now=0.0):
    out = agent.handle_control(ControlPacket(Command.CONTINUE, seq=0, ack_seq=0), now)
    assert agent.phase is VehiclePhase.ON_MISSION
    return out


class TestHandleControl:
    def test_start_emits_checkpoint(self):
        agent = make_agent()
        out = start(agent)
        assert len(out) == 1 and isinstance(out[0].payload, CheckpointPayload)
        assert out[0].priority == 0

    def test_no_uplink_before_start(self):
        agent = make_agent()
        with pytest.raises(RuntimeError):
            agent.handle_tick(0.0, quiet_kin(agent), [])

    def test_duplicate_seq_ignored(self):
        agent = make_agent()
        start(agent)
        phase = agent.phase
        out = agent.handle_control(ControlPacket(Command.RETURN, seq=0), 5.0)
        assert out == [] and agent.phase is phase

    def test_return_command(self):
        agent = make_agent()
        start(agent)
        agent.handle_control(ControlPacket(Command.RETURN, seq=1), 5.0)
        assert agent.phase is VehiclePhase.RETURNING

    def test_returning_absorbing(self):
        agent = make_agent()
        start(agent)
        agent.handle_control(ControlPacket(Command.RETURN, seq=1), 5.0)
        agent.handle_control(ControlPacket(Command.RESUME_ORIGINAL, seq=2), 6.0)
        assert agent.phase is VehiclePhase.RETURNING

    def test_resume_original_restores_plan(self):
        agent = make_agent()
        start(agent)
        agent.phase = VehiclePhase.SELF_DETERMINED
        agent.self_target = (1.0, 2.0, 3.0)
        agent.handle_control(ControlPacket(Command.RESUME_ORIGINAL, seq=1), 5.0)
        assert agent.phase is VehiclePhase.ON_MISSION
        assert agent.self_target is None
        assert agent.current_target() == (600.0, 0.0, 2.0)

    def test_new_waypoint_offsets_from_pose(self):
        agent = make_agent()
        start(agent)
        agent.phase = VehiclePhase.AWAIT_COMMAND_ON_PATH
        agent.set_pose(Pose(10.0, 0.0, 2.0, 0.0))
        agent.handle_control(
            ControlPacket(Command.NEW_WAYPOINT, distance_cm=1000, angle_mdeg=90000, seq=1), 5.0
        )
        assert agent.phase is VehiclePhase.ON_MISSION
        tx, ty, tz = agent.current_target()
        assert tx == pytest.approx(10.0, abs=1e-9)
        assert ty == pytest.approx(10.0, abs=1e-9)
        assert tz == pytest.approx(2.0)

    def test_ack_clears_unacked(self):
        agent = make_agent()
        start(agent)
        event = EventRecord(1.0, ENV_ID, False, ((1.0, 12.0),))
        packet = agent._priority(event)
        agent.unacked[packet.payload.seq] = (1.0, packet)
        agent.handle_control(ControlPacket(Command.CONTINUE, seq=1, ack_seq=packet.payload.seq), 2.0)
        assert not agent.unacked

    def test_bad_frame_counted(self):
        agent = make_agent()
        frame = bytearray(encode_control(ControlPacket(Command.CONTINUE, seq=0)))
        frame[5] ^= 0xFF
        out = agent.handle_control_bytes(bytes(frame), 0.0)
        assert out == [] and agent.dropped_commands == 1
        assert agent.phase is VehiclePhase.AWAIT_START


class TestHandleTick:
    def test_checkpoint_cadence(self):
        agent = make_agent(checkpoint_period=30.0)
        start(agent, now=0.0)
        emitted = []
        n_ticks = int(120 / TICK)
        for k in range(1, n_ticks):
            now = k * TICK
            for p in agent.handle_tick(now, quiet_kin(agent), []):
                emitted.append((now, p))
        assert all(p.priority == 0 for _, p in emitted)
        times = [t for t, _ in emitted]
        gaps = [b - a for a, b in zip([0.0] + times, times)]
        assert all(30.0 <= g < 30.0 + TICK for g in gaps)

    def test_mission_timeout_returns(self):
        agent = make_agent(t_mission=10.0)
        start(agent, now=0.0)
        out = agent.handle_tick(10.25, quiet_kin(agent), [])
        assert agent.phase is VehiclePhase.RETURNING
        assert out == []

    def test_sensitive_event_priority_packet_and_deviation(self):
        agent = make_agent(threshold=1.0)
        start(agent, now=0.0)
        # quiet window, then a spike well above 2*sqrt(T_h)
        out = []
        for k in range(1, 13):
            out += agent.handle_tick(k * 1.0, None, [(ENV_ID, 10.0)])
        spike = agent.handle_tick(13.0, None, [(ENV_ID, 16.0)])
        assert len(spike) == 1
        payload = spike[0].payload
        assert isinstance(payload, PriorityPayload) and payload.sensitivity == 1
        assert agent.phase is VehiclePhase.SELF_DETERMINED
        # local decision: rising along heading, step forward
        tx, ty, _ = agent.current_target()
        assert tx > agent.pose.x

    def test_insensitive_event_keeps_course(self):
        agent = make_agent(threshold=1.0)
        start(agent, now=0.0)
        for k in range(1, 13):
            agent.handle_tick(k * 1.0, None, [(ENV_ID, 10.0)])
        mild = agent.handle_tick(13.0, None, [(ENV_ID, 11.5)])  # dev 1.5 < 2.0
        assert len(mild) == 1
        assert mild[0].payload.sensitivity == 0
        assert agent.phase is VehiclePhase.AWAIT_COMMAND_ON_PATH
        assert agent.current_target() == (600.0, 0.0, 2.0)

    def test_no_new_events_while_awaiting_command(self):
        agent = make_agent(threshold=1.0)
        start(agent, now=0.0)
        for k in range(1, 13):
            agent.handle_tick(k * 1.0, None, [(ENV_ID, 10.0)])
        first = agent.handle_tick(13.0, None, [(ENV_ID, 16.0)])
        assert len(first) == 1
        # further wild samples are not transmitted until a control arrives
        again = agent.handle_tick(14.0, None, [(ENV_ID, 30.0)])
        assert again == []

    def test_refractory_window(self):
        agent = make_agent(threshold=1.0)
        start(agent, now=0.0)
        for k in range(1, 13):
            agent.handle_tick(k * 1.0, None, [(ENV_ID, 10.0)])
        first = agent.handle_tick(13.0, None, [(ENV_ID, 16.0)])
        assert len(first) == 1
        agent.handle_control(ControlPacket(Command.RESUME_ORIGINAL, seq=1), 13.5)
        # still inside the 5 s refractory for this channel
        silent = agent.handle_tick(14.0, None, [(ENV_ID, 30.0)])
        assert silent == []

    def test_retransmit_on_checkpoint_slot(self):
        agent = make_agent(checkpoint_period=30.0)
        start(agent, now=0.0)
        event = EventRecord(1.0, ENV_ID, False, ((1.0, 12.0),))
        packet = agent._priority(event)
        agent.unacked[packet.payload.seq] = (1.0, packet)
        outs = []
        for k in range(1, int(70 / TICK)):
            outs += agent.handle_tick(k * TICK, quiet_kin(agent), [])
        # once outstanding for >= one period, a slot resends it instead of
        # a checkpoint (the ~30 s slot is too early: only 29 s outstanding)
        resends = [
            p for p in outs
            if isinstance(p.payload, PriorityPayload) and p.payload.seq == packet.payload.seq
        ]
        assert len(resends) == 1


class TestLocalTrajectory:
    def test_rising_gradient_steps_forward(self):
        agent = make_agent()
        event = EventRecord(2.0, ENV_ID, True, ((1.0, 10.0), (2.0, 13.0)))
        wp = agent.decide_local_trajectory(event, Pose(5.0, 0.0, 2.0, 0.0))
        assert wp == pytest.approx((15.0, 0.0, 2.0))

    def test_falling_gradient_steps_back(self):
        agent = make_agent()
        event = EventRecord(2.0, ENV_ID, True, ((1.0, 13.0), (2.0, 10.0)))
        wp = agent.decide_local_trajectory(event, Pose(5.0, 0.0, 2.0, 0.0))
        assert wp == pytest.approx((-5.0, 0.0, 2.0))

    def test_kinematic_station_keep(self):
        agent = make_agent()
        event = EventRecord(2.0, 0, True, ((2.0, 4.0),))
        wp = agent.decide_local_trajectory(event, Pose(5.0, 1.0, 2.0, 0.0))
        assert wp == (5.0, 1.0, 2.0)

    def test_zero_gradient_holds(self):
        agent = make_agent()
        event = EventRecord(2.0, ENV_ID, True, ((1.0, 10.0), (2.0, 10.0)))
        wp = agent.decide_local_trajectory(event, Pose(5.0, 1.0, 2.0, 0.0))
        assert wp == (5.0, 1.0, 2.0)


class TestMotion:
    def test_returning_reaches_done(self):
        agent = make_agent(t_mission=5.0)
        start(agent, now=0.0)
        agent.handle_tick(5.25, quiet_kin(agent), [])
        assert agent.phase is VehiclePhase.RETURNING
        agent.set_pose(Pose(0.5, 0.0, 2.0, 180.0))  # nearly home
        agent.motion_command(6.0, TICK)
        assert agent.phase is VehiclePhase.DONE
        cmd = agent.motion_command(6.25, TICK)
        assert cmd.speed == 0.0
