"""Line-oriented checkpoint files.

One header line, then one record per line::

    # subject=mvc-00 seed=42 schema=fitness_score:min,cover_size:min startup_ms=0
    100,12.0,0,cover_size=12.0;edge_coverage=1.0

Fields are ``elapsed_ms,score,error_count,metrics``; metrics are
``name=value`` pairs joined by ``;`` and may be empty.  Floats use ``repr`` so
files are byte-reproducible and locale independent.
"""

import enum
from dataclasses import dataclass, field
from pathlib import Path

FITNESS = "fitness_score"


class Direction(enum.Enum):
    LOWER_IS_BETTER = "min"
    HIGHER_IS_BETTER = "max"


@dataclass(frozen=True)
class CheckpointRecord:
    elapsed: int
    score: float
    error_count: int = 0
    metrics: dict = field(default_factory=dict)

    def to_line(self) -> str:
        metrics = ";".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{self.elapsed},{_fmt(self.score)},{self.error_count},{metrics}"

    @classmethod
    def from_line(cls, line: str) -> "CheckpointRecord":
        elapsed, score, errors, metrics = line.split(",", 3)
        parsed = {}
        if metrics:
            for pair in metrics.split(";"):
                name, value = pair.split("=", 1)
                if not name:
                    raise ValueError("empty metric name")
                parsed[name] = float(value)
        record = cls(int(elapsed), float(score), int(errors), parsed)
        if record.elapsed < 0 or record.error_count < 0 or not record.score >= 0:
            raise ValueError(f"out-of-range checkpoint record {line!r}")
        return record


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class Header:
    subject: str
    seed: int
    schema: tuple = ()
    startup_ms: int = 0

    def to_line(self) -> str:
        schema = ",".join(f"{name}:{d.value}" for name, d in self.schema)
        return f"# subject={self.subject} seed={self.seed} schema={schema} startup_ms={self.startup_ms}"

    @classmethod
    def from_line(cls, line: str) -> "Header":
        fields = dict(tok.split("=", 1) for tok in line.lstrip("#").split() if "=" in tok)
        schema = tuple(
            (name, Direction(d))
            for name, d in (item.split(":") for item in fields.get("schema", "").split(",") if item)
        )
        return cls(fields.get("subject", ""), int(fields.get("seed", 0)), schema,
                   int(fields.get("startup_ms", 0)))


@dataclass
class CheckpointFile:
    header: Header | None
    records: list
    dropped_lines: int = 0


def read_checkpoints(path: Path) -> CheckpointFile:
    """Parse a checkpoint file, skipping lines that do not parse.

    A trailing line without its newline is a torn write and is dropped even
    if it happens to parse.
    """
    path = Path(path)
    if not path.exists():
        return CheckpointFile(None, [], 0)
    text = path.read_text(encoding="ascii", errors="replace")
    lines = text.split("\n")
    torn = lines.pop()  # "" when the file ends in a newline
    dropped = 1 if torn else 0
    header = None
    records = []
    for line in lines:
        if not line:
            continue
        if line.startswith("#"):
            if header is None:
                try:
                    header = Header.from_line(line)
                except ValueError:
                    dropped += 1
            continue
        try:
            records.append(CheckpointRecord.from_line(line))
        except ValueError:
            dropped += 1
    return CheckpointFile(header, records, dropped)
