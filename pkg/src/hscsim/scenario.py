"""Scenario configuration, synthetic overtaking references, condition sweeps,
and report emission.

A scenario is one (condition, driver mode) cell: manual control disables the
assist actuator, the no-conflict condition gives the ADS the driver's own
task reasoning, and the two conflict conditions split the reasoning per the
conflict taxonomy. The sweep runs all eight cells and emits a workload table
with descending ranks per indicator.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .arm import ArmParams, DriverGains, HandCoupling
from .engine import SimClock, SimLog, SimulationError
from .metrics import (
    PerformanceReport,
    WorkloadReport,
    build_performance_report,
    build_workload_report,
)
from .reasoning import (
    ConflictKind,
    ConflictSpec,
    ReasoningParams,
    ReferenceTrajectory,
    load_reference_csv,
)
from .simulation import SharedControlSimulation
from .vehicle import VehicleParams
from .wheel import AdsActuator, WheelParams

__all__ = [
    "Condition",
    "MODES",
    "SyntheticOvertake",
    "generate_reference",
    "AdsConfig",
    "ReferenceConfig",
    "MetricsConfig",
    "ScenarioConfig",
    "ScenarioResult",
    "SweepResult",
    "run_scenario",
    "run_sweep",
    "write_reference_csv",
]

MODES = ("tense", "relaxed")


class Condition(str, Enum):
    MC = "mc"
    NO_CONFLICT = "no_conflict"
    CONFLICT_I = "conflict_i"
    CONFLICT_II = "conflict_ii"


@dataclass(frozen=True)
class SyntheticOvertake:
    """Double lane change: out to the passing lane and back, quintic easing.

    Durations default to reported mean highway lane-change times (4.6 s out,
    4.4 s back); speed is constant.
    """

    speed: float = 25.0          # m/s
    lane_offset: float = 3.5     # m
    t_start_left: float = 4.0    # s
    duration_left: float = 4.6   # s
    t_start_right: float = 14.6  # s
    duration_right: float = 4.4  # s

    def __post_init__(self) -> None:
        if self.lane_offset <= 0.0:
            raise ValueError("lane_offset must be positive")
        if self.duration_left <= 0.0 or self.duration_right <= 0.0:
            raise ValueError("maneuver durations must be positive")
        if self.t_start_right < self.t_start_left + self.duration_left:
            raise ValueError("lane-change maneuvers overlap")

    @property
    def t_complete(self) -> float:
        return self.t_start_right + self.duration_right


def _smoothstep(u: float) -> float:
    """Quintic easing: value and first two derivatives vanish at both ends."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def generate_reference(
    p: SyntheticOvertake, dt: float, t_end: float | None = None
) -> ReferenceTrajectory:
    """Sampled (t, v_ref, y_ref) trajectory for the synthetic overtake."""
    if t_end is None:
        t_end = p.t_complete + 3.0
    if t_end < p.t_complete:
        raise ValueError("maneuvers do not fit within the requested horizon")
    n = round(t_end / dt) + 1
    t = np.arange(n) * dt
    y = np.empty(n)
    for i, ti in enumerate(t):
        out = _smoothstep((ti - p.t_start_left) / p.duration_left)
        back = _smoothstep((ti - p.t_start_right) / p.duration_right)
        y[i] = p.lane_offset * (out - back)
    return ReferenceTrajectory(t, np.full(n, p.speed), y)


def write_reference_csv(ref: ReferenceTrajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("t,v_ref,y_ref\n")
        for t, v, y in zip(ref.t, ref.v_ref, ref.y_ref):
            f.write(f"{t:.12g},{v:.12g},{y:.12g}\n")


@dataclass(frozen=True)
class AdsConfig:
    gain: float = 72.7         # N m/rad
    torque_limit: float = 5.0  # N m


@dataclass(frozen=True)
class ReferenceConfig:
    kind: str = "synthetic"    # "synthetic" or "csv"
    synthetic: SyntheticOvertake = field(default_factory=SyntheticOvertake)
    csv_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("synthetic", "csv"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "csv" and not self.csv_path:
            raise ValueError("csv reference requires csv_path")


@dataclass(frozen=True)
class MetricsConfig:
    effort_absolute: bool = True
    nominal_from_run_mean: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    condition: Condition = Condition.MC
    mode: str = "tense"
    seed: int = 0
    clock: SimClock = field(default_factory=SimClock)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    reasoning: ReasoningParams = field(default_factory=ReasoningParams)
    arm: ArmParams = field(default_factory=ArmParams)
    coupling: HandCoupling = field(default_factory=HandCoupling)
    wheel: WheelParams = field(default_factory=WheelParams)
    ads: AdsConfig = field(default_factory=AdsConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    # -- wiring ------------------------------------------------------------

    def actuator(self) -> AdsActuator:
        return AdsActuator(
            gain=self.ads.gain,
            torque_limit=self.ads.torque_limit,
            enabled=self.condition is not Condition.MC,
        )

    def conflict(self) -> ConflictSpec:
        kind = {
            Condition.MC: ConflictKind.NONE,
            Condition.NO_CONFLICT: ConflictKind.NONE,
            Condition.CONFLICT_I: ConflictKind.TYPE_I,
            Condition.CONFLICT_II: ConflictKind.TYPE_II,
        }[self.condition]
        return ConflictSpec.for_kind(kind, self.reasoning, y_ref_override=0.0)

    def resolve_reference(self) -> ReferenceTrajectory:
        if self.reference.kind == "csv":
            return load_reference_csv(self.reference.csv_path)
        return generate_reference(
            self.reference.synthetic, self.clock.dt_outer, t_end=self.clock.t_end
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = self.condition.value
        return d

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        data = dict(data)
        blocks = {
            "clock": SimClock,
            "vehicle": VehicleParams,
            "reasoning": ReasoningParams,
            "arm": ArmParams,
            "coupling": HandCoupling,
            "wheel": WheelParams,
            "ads": AdsConfig,
            "metrics": MetricsConfig,
        }
        kwargs: dict = {}
        if "condition" in data:
            kwargs["condition"] = Condition(data.pop("condition"))
        for key in ("mode", "seed"):
            if key in data:
                kwargs[key] = data.pop(key)
        for name, cls in blocks.items():
            if name in data:
                kwargs[name] = _build_block(cls, data.pop(name), name)
        if "reference" in data:
            ref = dict(data.pop("reference"))
            if "synthetic" in ref:
                ref["synthetic"] = _build_block(
                    SyntheticOvertake, ref["synthetic"], "reference.synthetic"
                )
            kwargs["reference"] = _build_block(ReferenceConfig, ref, "reference")
        if data:
            raise ValueError(f"unknown config keys: {sorted(data)}")
        return ScenarioConfig(**kwargs)

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @staticmethod
    def from_json(path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as f:
            return ScenarioConfig.from_dict(json.load(f))


def _build_block(cls, data: dict, where: str):
    if isinstance(data, cls):
        return data
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown keys in config block {where!r}: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    log: SimLog
    performance: PerformanceReport
    workload: WorkloadReport

    def report_dict(self) -> dict:
        return {
            "condition": self.config.condition.value,
            "mode": self.config.mode,
            "seed": self.config.seed,
            "analysis_window": [self.config.clock.t_stabilize, self.config.clock.t_end],
            "performance": asdict(self.performance),
            "workload": {name: asdict(jw) for name, jw in self.workload.joints.items()},
        }


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> ScenarioResult:
    """Run one cell; optionally write log.csv, report.json, effective_config.json."""
    reference = cfg.resolve_reference()
    sim = SharedControlSimulation(
        clock=cfg.clock,
        reference=reference,
        reasoning=cfg.reasoning,
        conflict=cfg.conflict(),
        gains=DriverGains.from_mode(cfg.mode),
        arm_params=cfg.arm,
        coupling=cfg.coupling,
        wheel_params=cfg.wheel,
        actuator=cfg.actuator(),
        vehicle_params=cfg.vehicle,
    )
    try:
        log = sim.run()
    except SimulationError as err:
        raise SimulationError(f"[{cfg.condition.value}/{cfg.mode}] {err}") from err

    window = (cfg.clock.t_stabilize, cfg.clock.t_end)
    performance = build_performance_report(
        log, reference, cfg.clock.t_stabilize, cfg.ads.torque_limit
    )
    workload = build_workload_report(
        log,
        cfg.arm,
        sim.initial_joint_posture,
        window,
        cfg.condition.value,
        cfg.mode,
        effort_absolute=cfg.metrics.effort_absolute,
        nominal_from_run_mean=cfg.metrics.nominal_from_run_mean,
    )
    result = ScenarioResult(config=cfg, log=log, performance=performance, workload=workload)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log.to_csv(out / "log.csv")
        with open(out / "report.json", "w", encoding="utf-8") as f:
            json.dump(result.report_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        cfg.to_json(out / "effective_config.json")
    return result


_TABLE_JOINTS = ("right_shoulder", "right_elbow")
_TABLE_INDICATORS = (
    ("actuation_effort", "N m s"),
    ("control_stress", "N m"),
    ("control_load_quantity", "N m s"),
)


@dataclass(frozen=True)
class SweepResult:
    cells: dict[tuple[str, str], ScenarioResult]
    errors: dict[tuple[str, str], str]
    table_rows: list[dict]

    def cell(self, condition: Condition | str, mode: str) -> ScenarioResult:
        key = (condition.value if isinstance(condition, Condition) else condition, mode)
        return self.cells[key]


def run_sweep(base: ScenarioConfig, out_dir=None) -> SweepResult:
    """Run every (condition, mode) cell; failures are recorded, not fatal."""
    cells: dict[tuple[str, str], ScenarioResult] = {}
    errors: dict[tuple[str, str], str] = {}
    out = Path(out_dir) if out_dir is not None else None
    for condition in Condition:
        for mode in MODES:
            cfg = replace(base, condition=condition, mode=mode)
            cell_dir = out / f"{condition.value}_{mode}" if out is not None else None
            try:
                cells[(condition.value, mode)] = run_scenario(cfg, cell_dir)
            except Exception as err:  # keep sweeping; report at the end
                errors[(condition.value, mode)] = str(err)

    table_rows = _workload_table(cells)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_table_csv(table_rows, out / "table3.csv")
        summary = {
            "cells": {f"{c}/{m}": r.report_dict() for (c, m), r in cells.items()},
            "errors": {f"{c}/{m}": e for (c, m), e in errors.items()},
            "table": table_rows,
        }
        with open(out / "sweep_report.json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return SweepResult(cells=cells, errors=errors, table_rows=table_rows)


def _workload_table(cells: dict[tuple[str, str], ScenarioResult]) -> list[dict]:
    rows: list[dict] = []
    order = [(c.value, m) for c in Condition for m in MODES]
    for joint in _TABLE_JOINTS:
        for indicator, units in _TABLE_INDICATORS:
            values = []
            for key in order:
                if key in cells:
                    values.append(getattr(cells[key].workload.joints[joint], indicator))
                else:
                    values.append(None)
            ranks = _descending_ranks(values)
            for key, value, rank in zip(order, values, ranks):
                rows.append(
                    {
                        "joint": joint,
                        "indicator": indicator,
                        "units": units,
                        "condition": key[0],
                        "mode": key[1],
                        "value": value,
                        "rank": rank,
                    }
                )
    return rows


def _descending_ranks(values: list) -> list:
    """Rank present values 1..n from largest to smallest; None stays None."""
    present = [(i, v) for i, v in enumerate(values) if v is not None]
    ranks: list = [None] * len(values)
    for place, (i, _) in enumerate(sorted(present, key=lambda iv: -iv[1]), start=1):
        ranks[i] = place
    return ranks


def _write_table_csv(rows: list[dict], path) -> None:
    cols = ("joint", "indicator", "units", "condition", "mode", "value", "rank")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(cols) + "\n")
        for row in rows:
            rendered = []
            for c in cols:
                v = row[c]
                if isinstance(v, float):
                    rendered.append(f"{v:.12g}")
                elif v is None:
                    rendered.append("")
                else:
                    rendered.append(str(v))
            f.write(",".join(rendered) + "\n")
