"""Post-run and offline analysis: heatmaps, run comparison, log compression.

These back the `heatmap`, `compare`, and `ingest` CLI subcommands and
reproduce the evaluation pipeline on synthetic or ingested field data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .compression import (
    ChannelPredictorBank,
    EnvCompressorConfig,
    env_flag_points,
)
from .telemetry import ChannelKind, SensorChannel, TelemetrySample


class AnalysisError(Exception):
    pass


class ComparisonError(AnalysisError):
    pass


def load_trace(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise AnalysisError(f"{path}: line {lineno}: bad JSON: {exc}") from exc
    return records


# -- heatmap --------------------------------------------------------------


def heatmap_cells(records: list[dict], cell_m: float) -> list[tuple[float, float, float]]:
    """Grid-binned means of environmental samples: (center x, center y, mean)."""
    if cell_m <= 0:
        raise AnalysisError(f"cell size must be > 0: {cell_m}")
    sums: dict[tuple[int, int], tuple[float, int]] = {}
    for rec in records:
        if rec.get("kind") != "sample":
            continue
        key = (math.floor(rec["x"] / cell_m), math.floor(rec["y"] / cell_m))
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + rec["value"], count + 1)
    out = []
    for (ix, iy), (total, count) in sorted(sums.items()):
        out.append(((ix + 0.5) * cell_m, (iy + 0.5) * cell_m, total / count))
    return out


def export_heatmap(records: list[dict], cell_m: float, out_path: str | Path) -> int:
    cells = heatmap_cells(records, cell_m)
    with Path(out_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "mean_value"])
        for x, y, mean in cells:
            writer.writerow([f"{x:.3f}", f"{y:.3f}", f"{mean:.6f}"])
    return len(cells)


# -- run comparison --------------------------------------------------------


@dataclass
class RunComparison:
    metrics_a: dict
    metrics_b: dict
    deviation_area_m_s: float
    first_divergence_t: float | None

    def table(self) -> list[tuple[str, object, object]]:
        keys = [
            "samples_measured",
            "points_transmitted",
            "compression_ratio",
            "bytes_sent",
            "bytes_baseline",
            "bytes_saved_fraction",
            "checkpoints_sent",
            "priority_sent",
            "up_sent",
            "down_sent",
            "final_phase",
        ]
        rows = [(k, self.metrics_a.get(k), self.metrics_b.get(k)) for k in keys]
        rows.append(("trajectory_deviation_area_m_s", round(self.deviation_area_m_s, 3), ""))
        rows.append(("first_divergence_t", self.first_divergence_t, ""))
        return rows


def _tick_positions(records: list[dict]) -> dict[float, tuple[float, float, float]]:
    return {
        rec["t"]: tuple(rec["pose"])
        for rec in records
        if rec.get("kind") == "tick"
    }


def compare_runs(dir_a: str | Path, dir_b: str | Path) -> RunComparison:
    """Side-by-side metrics plus trajectory deviation between two runs."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    metrics = []
    traces = []
    for d in (dir_a, dir_b):
        mp = d / "metrics.json"
        tp = d / "trace.jsonl"
        if not mp.exists() or not tp.exists():
            raise ComparisonError(f"{d}: expected metrics.json and trace.jsonl")
        metrics.append(json.loads(mp.read_text(encoding="utf-8")))
        traces.append(load_trace(tp))
    if metrics[0].get("mission_fingerprint") != metrics[1].get("mission_fingerprint"):
        raise ComparisonError("runs use different missions; comparison undefined")

    pos_a = _tick_positions(traces[0])
    pos_b = _tick_positions(traces[1])
    common = sorted(set(pos_a) & set(pos_b))
    area = 0.0
    first_div = None
    prev_t = None
    for t in common:
        d = math.dist(pos_a[t], pos_b[t])
        if prev_t is not None:
            area += d * (t - prev_t)
        if first_div is None and d > 1e-6:
            first_div = t
        prev_t = t
    return RunComparison(metrics[0], metrics[1], area, first_div)


# -- offline compression evaluation -----------------------------------------


@dataclass
class ChannelReport:
    channel: int
    kind: str
    n_samples: int
    flagged: list[int]
    selected: list[int]

    @property
    def ratio(self) -> float:
        return len(self.selected) / self.n_samples if self.n_samples else 0.0


@dataclass
class CompressionReport:
    channels: list[ChannelReport] = field(default_factory=list)

    @property
    def samples_measured(self) -> int:
        return sum(c.n_samples for c in self.channels)

    @property
    def points_selected(self) -> int:
        return sum(len(c.selected) for c in self.channels)

    @property
    def ratio(self) -> float:
        n = self.samples_measured
        return self.points_selected / n if n else 0.0

    def to_dict(self) -> dict:
        return {
            "samples_measured": self.samples_measured,
            "points_selected": self.points_selected,
            "compression_ratio": round(self.ratio, 9),
            "channels": [
                {
                    "channel": c.channel,
                    "kind": c.kind,
                    "n_samples": c.n_samples,
                    "flagged": c.flagged,
                    "selected": c.selected,
                    "ratio": round(c.ratio, 9),
                }
                for c in self.channels
            ],
        }


def evaluate_compression(
    samples: list[TelemetrySample],
    channels: list[SensorChannel],
    env_cfg: EnvCompressorConfig = EnvCompressorConfig(),
    process_var: tuple[float, float] = (1e-4, 1e-4),
    measurement_var: float = 1e-2,
    tau: float | None = None,
    include_interior: bool = False,
) -> CompressionReport:
    """Run both selection branches over a recorded log, channel by channel.

    Environmental channels go through the windowed selector (run
    boundaries unless include_interior); kinematic channels through the
    filter, flagging samples whose squared innovation exceeds tau
    (default (3 sigma)^2 from the measurement variance).
    """
    report = CompressionReport()
    by_channel: dict[int, list[TelemetrySample]] = {}
    for s in samples:
        by_channel.setdefault(s.channel, []).append(s)

    for ch in channels:
        series = by_channel.get(ch.id, [])
        if not series:
            continue
        if ch.kind is ChannelKind.ENVIRONMENTAL:
            flags = env_flag_points(series, env_cfg)
            report.channels.append(
                ChannelReport(
                    ch.id,
                    ch.kind.value,
                    len(series),
                    list(flags.indices),
                    flags.selected(include_interior),
                )
            )
        else:
            dts = [b.t - a.t for a, b in zip(series, series[1:])]
            dt = sorted(dts)[len(dts) // 2] if dts else ch.sample_period
            bank = ChannelPredictorBank(
                [ch], max(dt, 1e-6), process_var, measurement_var,
                initial_values=[series[0].value],
            )
            tau_ch = 9.0 * measurement_var if tau is None else tau
            flagged = []
            for i, s in enumerate(series):
                innov = bank.step([s.value])[0]
                if i > 0 and innov * innov > tau_ch:
                    flagged.append(i)
            report.channels.append(
                ChannelReport(ch.id, ch.kind.value, len(series), flagged, flagged)
            )
    return report


def export_selected_csv(
    samples: list[TelemetrySample], report: CompressionReport, out_path: str | Path
) -> None:
    """The compressed data points, one row per selected sample."""
    by_channel: dict[int, list[TelemetrySample]] = {}
    for s in samples:
        by_channel.setdefault(s.channel, []).append(s)
    with Path(out_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "channel", "value"])
        for ch in report.channels:
            series = by_channel[ch.channel]
            for i in ch.selected:
                s = series[i]
                writer.writerow([s.t, s.channel, s.value])
