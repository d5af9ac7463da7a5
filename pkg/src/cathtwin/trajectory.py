"""Timestamped trajectory records shared by the planner and the co-pilot."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryStep:
    t: float                 # seconds (planner steps use the step index)
    joints: np.ndarray       # (6,)
    tip_position: np.ndarray  # (3,)
    tip_axis: np.ndarray     # (3,)
    reward_components: dict[str, float] | None = None
    terminal: str = "running"
    phase: str = "localization"
    intervention: bool = False

    def to_record(self) -> dict:
        rec = {
            "t": self.t,
            "joints": [float(x) for x in self.joints],
            "tip": [float(x) for x in self.tip_position],
            "tip_axis": [float(x) for x in self.tip_axis],
            "terminal": self.terminal,
            "phase": self.phase,
            "intervention": self.intervention,
        }
        if self.reward_components is not None:
            rec["reward"] = self.reward_components
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "TrajectoryStep":
        return cls(
            t=rec["t"],
            joints=np.asarray(rec["joints"], dtype=np.float64),
            tip_position=np.asarray(rec["tip"], dtype=np.float64),
            tip_axis=np.asarray(rec["tip_axis"], dtype=np.float64),
            reward_components=rec.get("reward"),
            terminal=rec.get("terminal", "running"),
            phase=rec.get("phase", "localization"),
            intervention=rec.get("intervention", False),
        )


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def append(self, step: TrajectoryStep) -> None:
        self.steps.append(step)

    @property
    def joints(self) -> np.ndarray:
        return np.stack([s.joints for s in self.steps])

    @property
    def tips(self) -> np.ndarray:
        return np.stack([s.tip_position for s in self.steps])

    @property
    def terminal(self) -> str:
        return self.steps[-1].terminal if self.steps else "running"

    def total_reward(self) -> float:
        return sum(
            sum(s.reward_components.values())
            for s in self.steps
            if s.reward_components is not None
        )

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(s.to_record()) for s in self.steps) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Trajectory":
        steps = [
            TrajectoryStep.from_record(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        ]
        return cls(steps=steps)
