"""Per-task score trajectories and the line-delimited trajectory file."""

from __future__ import annotations

import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import DuplicateStep, EmptyStream, IoFailure, MalformedRecord, NonFiniteScore, StepGap


@dataclass(frozen=True)
class TrajectoryStep:
    task_id: str
    step: int
    score: float
    correct: bool | None = None
    entropy: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise NonFiniteScore(f"{self.task_id!r} step {self.step}: score {self.score!r}")
        if self.step < 1:
            raise MalformedRecord(f"{self.task_id!r}: step must be >= 1, got {self.step}")
        if self.entropy is not None and not (math.isfinite(self.entropy) and self.entropy >= 0):
            raise MalformedRecord(f"{self.task_id!r} step {self.step}: entropy must be finite and >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Ordered steps of one task.

    ``feasible`` is the empirical feasibility label. When it is not supplied
    and every step carries a correctness label, it is derived as "some step
    is correct".
    """

    task_id: str
    steps: tuple[TrajectoryStep, ...]
    feasible: bool | None = None

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        for i, st in enumerate(steps, start=1):
            if st.step != i:
                raise StepGap(f"{self.task_id!r}: expected step {i}, found {st.step}")
        if self.feasible is None and steps and all(st.correct is not None for st in steps):
            object.__setattr__(self, "feasible", any(st.correct for st in steps))

    def __len__(self):
        return len(self.steps)

    @property
    def scores(self) -> list[float]:
        return [st.score for st in self.steps]

    @property
    def labels(self) -> list[bool | None]:
        return [st.correct for st in self.steps]

    @property
    def entropies(self) -> list[float | None]:
        return [st.entropy for st in self.steps]

    @property
    def labeled(self) -> bool:
        return all(st.correct is not None for st in self.steps)

    @classmethod
    def from_scores(cls, task_id: str, scores: Sequence[float],
                    correct: Sequence[bool] | None = None,
                    entropy: Sequence[float] | None = None,
                    feasible: bool | None = None) -> "Trajectory":
        """Convenience constructor from parallel per-step sequences."""
        steps = []
        for i, s in enumerate(scores):
            steps.append(TrajectoryStep(
                task_id, i + 1, float(s),
                None if correct is None else bool(correct[i]),
                None if entropy is None else float(entropy[i]),
            ))
        return cls(task_id, tuple(steps), feasible)


StreamLike = Union[Trajectory, Sequence[TrajectoryStep], Sequence[float]]


def stream_scores(stream: StreamLike) -> list[float]:
    """Scores of a trajectory, a list of steps, or a plain list of numbers."""
    if isinstance(stream, Trajectory):
        scores = stream.scores
    else:
        scores = [st.score if isinstance(st, TrajectoryStep) else float(st) for st in stream]
    if not scores:
        raise EmptyStream("stream has no steps")
    for s in scores:
        if not math.isfinite(s):
            raise NonFiniteScore(f"score {s!r} is not finite")
    return scores


def as_trajectory(stream: StreamLike, task_id: str = "stream") -> Trajectory:
    if isinstance(stream, Trajectory):
        return stream
    items = list(stream)
    if items and isinstance(items[0], TrajectoryStep):
        return Trajectory(items[0].task_id, tuple(items))
    return Trajectory.from_scores(task_id, [float(s) for s in items])


def _parse_record(obj, lineno: int) -> tuple[TrajectoryStep, bool | None]:
    if not isinstance(obj, dict):
        raise MalformedRecord(f"line {lineno}: record must be an object")
    for key in ("task_id", "step", "score"):
        if key not in obj:
            raise MalformedRecord(f"line {lineno}: missing required field {key!r}")
    task_id, step, score = obj["task_id"], obj["step"], obj["score"]
    if not isinstance(task_id, str):
        raise MalformedRecord(f"line {lineno}: task_id must be a string")
    if isinstance(step, bool) or not isinstance(step, int):
        raise MalformedRecord(f"line {lineno}: step must be an integer")
    if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
        raise MalformedRecord(f"line {lineno}: score must be a finite number")
    correct = obj.get("correct")
    if correct is not None and not isinstance(correct, bool):
        raise MalformedRecord(f"line {lineno}: correct must be a boolean")
    entropy = obj.get("entropy")
    if entropy is not None:
        if isinstance(entropy, bool) or not isinstance(entropy, (int, float)):
            raise MalformedRecord(f"line {lineno}: entropy must be a number")
        entropy = float(entropy)
    feasible = obj.get("feasible")
    if feasible is not None and not isinstance(feasible, bool):
        raise MalformedRecord(f"line {lineno}: feasible must be a boolean")
    try:
        st = TrajectoryStep(task_id, step, float(score), correct, entropy)
    except (MalformedRecord, NonFiniteScore) as exc:
        raise MalformedRecord(f"line {lineno}: {exc}") from exc
    return st, feasible


def read_records(source) -> list[dict]:
    """Parse a line-delimited file (path, file object or iterable of lines)."""
    if isinstance(source, (str, Path)):
        try:
            with open(source, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read {source}: {exc}") from exc
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = list(source)
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"line {lineno}: {exc}") from exc
    return records


def load_trajectories(source) -> list[Trajectory]:
    """Group records by task, order by step and validate each trajectory.

    Tasks are returned in order of first appearance.
    """
    grouped: dict[str, dict[int, TrajectoryStep]] = defaultdict(dict)
    feasible: dict[str, bool | None] = {}
    for lineno, obj in read_records(source):
        st, feas = _parse_record(obj, lineno)
        steps = grouped[st.task_id]
        if st.step in steps:
            raise DuplicateStep(f"line {lineno}: task {st.task_id!r} repeats step {st.step}")
        steps[st.step] = st
        if st.task_id in feasible and feasible[st.task_id] != feas:
            raise MalformedRecord(f"line {lineno}: 'feasible' disagrees across records of {st.task_id!r}")
        feasible[st.task_id] = feas
    out = []
    for task_id, steps in grouped.items():
        ordered = tuple(steps[k] for k in sorted(steps))
        traj = Trajectory(task_id, ordered, feasible[task_id])
        if traj.feasible is False and any(st.correct for st in ordered):
            raise MalformedRecord(f"task {task_id!r} is labelled infeasible but has a correct step")
        out.append(traj)
    return out


def dump_trajectories(trajectories: Iterable[Trajectory]) -> str:
    lines = []
    for traj in trajectories:
        for st in traj.steps:
            rec = {"task_id": st.task_id, "step": st.step, "score": st.score}
            if st.correct is not None:
                rec["correct"] = st.correct
            if st.entropy is not None:
                rec["entropy"] = st.entropy
            if traj.feasible is not None:
                rec["feasible"] = traj.feasible
            lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")
