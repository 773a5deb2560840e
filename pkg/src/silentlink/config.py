"""Simulation configuration: one JSON document, strictly validated.

Unknown keys anywhere in the document are rejected (typos must not
silently change an experiment), and every parameter has a default so a
minimal config is `{}`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .link import ChannelConfig, LossCurve, PacketTypeSpec, DEFAULT_LOSS_CURVES, DEFAULT_PACKET_TYPES
from .telemetry import Anomaly, ChannelKind, Mission, ScalarField, SensorChannel
from .vehicle import VehicleConfig
from .center import CenterConfig


class ConfigError(Exception):
    pass


def _take(d: dict, where: str, known: set[str]) -> None:
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def _num(d: dict, key: str, default, where: str):
    v = d.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return v


@dataclass(frozen=True)
class EnvChannelSpec:
    id: int
    name: str
    units: str
    sample_period: float
    noise_std: float
    window: int
    threshold: float

    @staticmethod
    def from_dict(d: dict, where: str) -> "EnvChannelSpec":
        _take(d, where, {"id", "name", "units", "sample_period", "noise_std", "window", "threshold"})
        return EnvChannelSpec(
            id=int(_num(d, "id", 16, where)),
            name=str(d.get("name", "temp")),
            units=str(d.get("units", "C")),
            sample_period=float(_num(d, "sample_period", 1.0, where)),
            noise_std=float(_num(d, "noise_std", 0.0, where)),
            window=int(_num(d, "window", 8, where)),
            threshold=float(_num(d, "threshold", 1.0, where)),
        )

    def channel(self) -> SensorChannel:
        return SensorChannel(self.id, ChannelKind.ENVIRONMENTAL, self.units, self.sample_period, name=self.name)


_DEFAULT_WAYPOINTS = ((0.0, 0.0, 2.0), (600.0, 0.0, 2.0))


@dataclass(frozen=True)
class SimConfig:
    mission: Mission
    field: ScalarField
    env_channels: tuple[EnvChannelSpec, ...]
    kinematic_noise_std: float
    process_var: tuple[float, float]
    measurement_var: float
    tau_floor: float
    include_interior: bool
    channel: ChannelConfig
    packet_type: PacketTypeSpec
    vehicle: VehicleConfig
    policy: CenterConfig
    tick_s: float
    duration_s: float
    seed: int
    mode: str  # "semi" | "autonomous"
    uplink: str  # "predictive" | "naive"
    operator: str  # "headless" | "gateway"
    raw: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def from_dict(doc: dict) -> "SimConfig":
        _take(doc, "config", {"mission", "field", "sensors", "compressor", "link", "vehicle", "policy", "engine"})

        m = doc.get("mission", {})
        _take(m, "mission", {"waypoints", "t_mission", "checkpoint_period", "speed"})
        waypoints = m.get("waypoints", _DEFAULT_WAYPOINTS)
        try:
            waypoints = tuple((float(x), float(y), float(z)) for x, y, z in waypoints)
        except (TypeError, ValueError):
            raise ConfigError("mission.waypoints must be a list of [x, y, z] triples") from None
        mission = Mission(
            waypoints=waypoints,
            t_mission=float(_num(m, "t_mission", 600.0, "mission")),
            checkpoint_period=float(_num(m, "checkpoint_period", 30.0, "mission")),
            speed=float(_num(m, "speed", 1.0, "mission")),
        )

        f = doc.get("field", {})
        _take(f, "field", {"base", "anomalies"})
        anomalies = []
        for i, a in enumerate(f.get("anomalies", [])):
            _take(a, f"field.anomalies[{i}]", {"x", "y", "radius", "amplitude"})
            anomalies.append(
                Anomaly(
                    float(_num(a, "x", 0.0, "anomaly")),
                    float(_num(a, "y", 0.0, "anomaly")),
                    float(_num(a, "radius", 10.0, "anomaly")),
                    float(_num(a, "amplitude", 1.0, "anomaly")),
                )
            )
        fld = ScalarField(float(_num(f, "base", 10.0, "field")), tuple(anomalies))

        s = doc.get("sensors", {})
        _take(s, "sensors", {"environmental", "kinematic_noise_std"})
        env_entries = s.get("environmental", [{"id": 16, "name": "temp"}])
        env_channels = tuple(
            EnvChannelSpec.from_dict(e, f"sensors.environmental[{i}]")
            for i, e in enumerate(env_entries)
        )
        ids = [e.id for e in env_channels]
        if len(set(ids)) != len(ids) or any(i < 16 for i in ids):
            raise ConfigError("environmental channel ids must be unique and >= 16 "
                              "(0..15 are reserved for kinematic channels)")

        c = doc.get("compressor", {})
        _take(c, "compressor", {"process_var", "measurement_var", "tau_floor", "include_interior"})
        pv = c.get("process_var", [1e-4, 1e-4])
        if not (isinstance(pv, (list, tuple)) and len(pv) == 2):
            raise ConfigError("compressor.process_var must be [value_var, rate_var]")

        l = doc.get("link", {})
        _take(l, "link", {"distance_m", "sound_speed", "sinr_db", "packet_type", "cycle_overhead_s", "loss_curves"})
        curves = dict(DEFAULT_LOSS_CURVES)
        for key, cv in l.get("loss_curves", {}).items():
            _take(cv, f"link.loss_curves[{key}]", {"midpoint_db", "steepness", "floor"})
            curves[int(key)] = LossCurve(
                float(_num(cv, "midpoint_db", 0.0, "loss_curve")),
                float(_num(cv, "steepness", 1.0, "loss_curve")),
                float(_num(cv, "floor", 0.0, "loss_curve")),
            )
        type_id = int(_num(l, "packet_type", 0, "link"))
        if type_id not in DEFAULT_PACKET_TYPES:
            raise ConfigError(f"link.packet_type must be one of {sorted(DEFAULT_PACKET_TYPES)}")
        base_spec = DEFAULT_PACKET_TYPES[type_id]
        spec = PacketTypeSpec(
            base_spec.type_id,
            base_spec.frame_bytes,
            base_spec.max_frames,
            base_spec.rate_bps,
            float(_num(l, "cycle_overhead_s", 1.0, "link")),
        )

        e = doc.get("engine", {})
        _take(e, "engine", {"tick_s", "duration_s", "seed", "mode", "uplink", "operator"})
        mode = e.get("mode", "semi")
        if mode not in ("semi", "autonomous"):
            raise ConfigError(f"engine.mode must be 'semi' or 'autonomous', got {mode!r}")
        uplink = e.get("uplink", "predictive")
        if uplink not in ("predictive", "naive"):
            raise ConfigError(f"engine.uplink must be 'predictive' or 'naive', got {uplink!r}")
        operator = e.get("operator", "headless")
        if operator not in ("headless", "gateway"):
            raise ConfigError(
                f"engine.operator must be 'headless' or 'gateway', got {operator!r}"
            )
        seed = int(_num(e, "seed", 42, "engine"))
        tick_s = float(_num(e, "tick_s", 0.25, "engine"))
        if tick_s <= 0:
            raise ConfigError(f"engine.tick_s must be > 0: {tick_s}")
        for env_ch in env_channels:
            if env_ch.window < 1:
                raise ConfigError(f"sensors channel {env_ch.id}: window must be >= 1")
            if env_ch.threshold < 0:
                raise ConfigError(f"sensors channel {env_ch.id}: threshold must be >= 0")
            if env_ch.sample_period < tick_s:
                raise ConfigError(
                    f"sensors channel {env_ch.id}: sample_period {env_ch.sample_period} "
                    f"below the engine tick {tick_s}"
                )

        channel = ChannelConfig(
            distance_m=float(_num(l, "distance_m", 1500.0, "link")),
            sound_speed=float(_num(l, "sound_speed", 1500.0, "link")),
            sinr_db=float(_num(l, "sinr_db", 10.0, "link")),
            loss_curves=curves,
            seed=seed,
        )

        v = doc.get("vehicle", {})
        _take(v, "vehicle", {"refractory_s", "local_step_m", "sensitive_factor",
                             "max_turn_rate_dps", "vertical_rate_ms",
                             "arrival_tolerance_m", "battery_drain_pct_s"})
        vehicle = VehicleConfig(
            refractory_s=float(_num(v, "refractory_s", 5.0, "vehicle")),
            local_step_m=float(_num(v, "local_step_m", 10.0, "vehicle")),
            sensitive_factor=float(_num(v, "sensitive_factor", 2.0, "vehicle")),
            max_turn_rate_dps=float(_num(v, "max_turn_rate_dps", 30.0, "vehicle")),
            vertical_rate_ms=float(_num(v, "vertical_rate_ms", 0.25, "vehicle")),
            arrival_tolerance_m=float(_num(v, "arrival_tolerance_m", 1.0, "vehicle")),
            battery_drain_pct_s=float(_num(v, "battery_drain_pct_s", 0.01, "vehicle")),
        )

        p = doc.get("policy", {})
        _take(p, "policy", {"think_time_s", "investigate_step_m", "auto"})
        policy = CenterConfig(
            think_time_s=float(_num(p, "think_time_s", 2.0, "policy")),
            investigate_step_m=float(_num(p, "investigate_step_m", 10.0, "policy")),
            auto_policy=bool(p.get("auto", True)),
        )

        return SimConfig(
            mission=mission,
            field=fld,
            env_channels=env_channels,
            kinematic_noise_std=float(_num(s, "kinematic_noise_std", 0.0, "sensors")),
            process_var=(float(pv[0]), float(pv[1])),
            measurement_var=float(_num(c, "measurement_var", 1e-2, "compressor")),
            tau_floor=float(_num(c, "tau_floor", 0.0, "compressor")),
            include_interior=bool(c.get("include_interior", False)),
            channel=channel,
            packet_type=spec,
            vehicle=vehicle,
            policy=policy,
            tick_s=tick_s,
            duration_s=float(_num(e, "duration_s", 700.0, "engine")),
            seed=seed,
            mode=mode,
            uplink=uplink,
            operator=operator,
            raw=doc,
        )

    @staticmethod
    def load(path: str | Path) -> "SimConfig":
        with Path(path).open(encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return SimConfig.from_dict(doc)

    def with_overrides(self, seed: int | None = None) -> "SimConfig":
        if seed is None:
            return self
        doc = dict(self.raw)
        engine = dict(doc.get("engine", {}))
        engine["seed"] = seed
        doc["engine"] = engine
        return SimConfig.from_dict(doc)

    def mission_fingerprint(self) -> str:
        blob = json.dumps(
            {
                "waypoints": self.mission.waypoints,
                "t_mission": self.mission.t_mission,
                "checkpoint_period": self.mission.checkpoint_period,
                "speed": self.mission.speed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def fingerprint(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()
        ).hexdigest()[:16]
