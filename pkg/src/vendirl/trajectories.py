"""
Reading and writing trajectory CSV files.

The format is one row per observation, with columns `skill`,
`rollout`, `t`, `x` and `y`, optionally preceded by `# key: value`
comment lines carrying metadata such as the evaluation score or the
bounds of the environment.
"""

import csv
from dataclasses import dataclass, field
from typing import IO, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from vendirl.exceptions import TrajectoryFileError
from vendirl.kernels.spec import SkillSample
from vendirl.numerics import FloatArray

COLUMNS = ["skill", "rollout", "t", "x", "y"]


@dataclass(frozen=True)
class TrajectoryTable:
    """Trajectories keyed by (skill, rollout), plus metadata."""

    paths: Dict[Tuple[int, int], FloatArray] = field(default_factory=dict)
    meta: Dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def skills(self) -> List[int]:
        return sorted({skill for skill, _ in self.paths})

    def rollouts(self, skill: int) -> List[FloatArray]:
        """Trajectories of one skill, in rollout order."""
        return [self.paths[key] for key in sorted(self.paths) if key[0] == skill]

    def samples(self) -> List[SkillSample]:
        """One sample per skill, in skill order."""
        return [SkillSample.from_sequence(self.rollouts(s)) for s in self.skills]

    @property
    def eval_vs(self) -> Union[float, None]:
        value = self.meta.get("eval_vs")
        return None if value is None else float(value)

    def point(self, key: str) -> Union[Tuple[float, float], None]:
        """A 2D point stored in the metadata as `x, y`."""
        value = self.meta.get(key)
        if value is None:
            return None
        x, y = (float(v) for v in value.split(","))
        return x, y


def write_trajectories(
    outfh: IO[str],
    samples: Sequence[SkillSample],
    meta: Union[Mapping[str, object], None] = None,
) -> None:
    """Write skill samples (skill index = position in `samples`)."""
    for key, value in (meta or {}).items():
        outfh.write(f"# {key}: {value}\n")
    writer = csv.writer(outfh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for skill, sample in enumerate(samples):
        for rollout, traj in enumerate(sample.trajectories):
            if traj.shape[1] != 2:
                raise TrajectoryFileError(
                    f"Can only write 2D trajectories, skill {skill}"
                    f" has {traj.shape[1]}D"
                )
            for t, (x, y) in enumerate(traj):
                writer.writerow([skill, rollout, t, repr(float(x)), repr(float(y))])


def format_point(point: Iterable[float]) -> str:
    return ", ".join(repr(float(x)) for x in point)


def read_trajectories(infh: IO[str]) -> TrajectoryTable:
    """Read trajectories written by `write_trajectories` (or anyone else).

    Raises:
        TrajectoryFileError: If a row is malformed, with its (1-based)
            line number in the file.
    """
    meta: Dict[str, str] = {}
    lines = infh.read().splitlines()
    lineno = 0
    while lineno < len(lines) and lines[lineno].startswith("#"):
        key, sep, value = lines[lineno][1:].partition(":")
        if sep:
            meta[key.strip()] = value.strip()
        lineno += 1
    body = lines[lineno:]
    if not body or not body[0].strip():
        return TrajectoryTable(meta=meta)
    rows: Dict[Tuple[int, int], List[Tuple[float, float]]] = {}
    reader = csv.reader(body)
    header = [h.strip() for h in next(reader)]
    if header != COLUMNS:
        raise TrajectoryFileError(
            f"Expected columns {','.join(COLUMNS)}, got {','.join(header)}",
            row=lineno + 1,
        )
    for offset, row in enumerate(reader, start=lineno + 2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise TrajectoryFileError(
                f"Expected {len(COLUMNS)} fields, got {len(row)}", row=offset
            )
        try:
            skill, rollout, t = (int(v) for v in row[:3])
            x, y = float(row[3]), float(row[4])
        except ValueError as e:
            raise TrajectoryFileError(str(e), row=offset) from e
        if skill < 0 or rollout < 0:
            raise TrajectoryFileError("Negative skill or rollout index", row=offset)
        if not (np.isfinite(x) and np.isfinite(y)):
            raise TrajectoryFileError("Non-finite coordinate", row=offset)
        points = rows.setdefault((skill, rollout), [])
        if t != len(points):
            raise TrajectoryFileError(
                f"Expected t={len(points)} for skill {skill} rollout {rollout},"
                f" got {t}",
                row=offset,
            )
        points.append((x, y))
    return TrajectoryTable(
        paths={key: np.array(points) for key, points in rows.items()}, meta=meta
    )
