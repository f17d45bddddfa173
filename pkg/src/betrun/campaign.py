"""Subjects x strategies x repetitions under a bounded worker pool.

Records are appended to one JSON-lines file in canonical triple order
(subject, strategy, repetition), so an interrupted campaign leaves a prefix
of the final file and resuming only runs what is missing.  Per-run wall-clock
time goes to a ``.timing`` sidecar: it is informative only and would break
byte-reproducibility of the record file.
"""

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from betrun.adapter import InProcessAdapter, InstanceReport, SubprocessAdapter
from betrun.budget import BASELINE, BudgetMode, RestartStrategy, plan_budget
from betrun.orchestrator import Failure, run_bet_and_run
from betrun.rng import SeedSource
from betrun.surrogates import Subject, make_subject_suite, parse_suite
from betrun.surrogates.base import DEFAULT_INTERVAL_MS

log = logging.getLogger(__name__)

ADAPTERS = {"inprocess": InProcessAdapter, "subprocess": SubprocessAdapter}


class CampaignAborted(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


def default_workers() -> int:
    env = os.environ.get("BETRUN_WORKERS")
    if env:
        return int(env)
    return os.cpu_count() or 1


@dataclass
class CampaignConfig:
    subjects: list
    strategies: list = field(default_factory=lambda: [BASELINE, RestartStrategy(8, 0.05)])
    t_total_ms: int = 2000
    repetitions: int = 30
    workers: int = field(default_factory=default_workers)
    master_seed: int = 0
    mode: BudgetMode = BudgetMode.STRICT
    theta: float = 0.5
    interval_ms: int = DEFAULT_INTERVAL_MS
    adapter: str = "inprocess"
    keep_checkpoints: bool = False

    def validate(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.theta <= 1:
            raise ConfigError("theta must lie in [0, 1]")
        if not self.subjects:
            raise ConfigError("no subjects configured")
        if not self.strategies:
            raise ConfigError("no strategies configured")
        if self.adapter not in ADAPTERS:
            raise ConfigError(f"unknown adapter {self.adapter!r}")
        for strategy in self.strategies:
            plan_budget(strategy, self.t_total_ms)  # raises BudgetError
        return self

    def effective(self) -> dict:
        return {
            "subjects": [s.name for s in self.subjects],
            "strategies": [str(s) for s in self.strategies],
            "t_total_ms": self.t_total_ms,
            "repetitions": self.repetitions,
            "workers": self.workers,
            "master_seed": self.master_seed,
            "mode": self.mode.value,
            "theta": self.theta,
            "interval_ms": self.interval_ms,
            "adapter": self.adapter,
        }


def parse_config(text: str) -> CampaignConfig:
    """Parse ``key = value`` lines followed by a ``[subjects]`` suite section."""
    values, suite_lines, section = {}, [], None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section != "subjects":
                raise ConfigError(f"unknown section [{section}]")
            continue
        if section == "subjects":
            suite_lines.append(line)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        values[key] = value

    known = {"t_total_ms", "repetitions", "workers", "master_seed", "mode", "theta",
             "strategies", "interval_ms", "adapter", "suite"}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "suite" in values:
        suite_lines.extend(Path(values["suite"]).read_text().splitlines())
    cfg = CampaignConfig(subjects=make_subject_suite(parse_suite("\n".join(suite_lines))))
    try:
        if "strategies" in values:
            cfg.strategies = [RestartStrategy.parse(s) for s in values["strategies"].split(",")]
        for key in ("t_total_ms", "repetitions", "workers", "master_seed", "interval_ms"):
            if key in values:
                setattr(cfg, key, int(values[key]))
        if "theta" in values:
            cfg.theta = float(values["theta"])
        if "mode" in values:
            cfg.mode = BudgetMode(values["mode"])
        if "adapter" in values:
            cfg.adapter = values["adapter"]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> CampaignConfig:
    return parse_config(Path(path).read_text())


@dataclass
class CampaignRecord:
    subject: str
    strategy: str
    n: int
    p: float
    repetition: int
    master_seed: int
    t_total_ms: int
    t_k_ms: int
    t_f_ms: int
    mode: str
    failure: str
    survivor_index: int | None
    survivor_seed: int | None
    charged_budget_ms: int
    error_count: int
    starters: list
    final: dict | None
    schema: list
    phases: list
    wall_ms: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.subject, self.strategy, self.repetition)

    @property
    def final_report(self) -> InstanceReport | None:
        return None if self.final is None else InstanceReport.from_dict(self.final)

    @property
    def succeeded(self) -> bool:
        """Usable for statistics: a final result that produced output without errors."""
        return (self.failure == Failure.NONE.value and self.final is not None
                and self.final["produced_output"] and not self.final["errored"])

    @property
    def troubled(self) -> bool:
        """Counts against eligibility: internal errors or total failure."""
        return self.error_count > 0 or self.failure != Failure.NONE.value

    def to_json(self) -> str:
        d = {k: v for k, v in self.__dict__.items() if k != "wall_ms"}
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _execute(task: dict):
    subject = Subject.from_dict(task["subject"])
    strategy = RestartStrategy(task["n"], task["p"])
    mode = BudgetMode(task["mode"])
    adapter = ADAPTERS[task["adapter"]](interval_ms=task["interval_ms"])
    seeds = SeedSource(task["master_seed"], subject.name, task["repetition"])
    workdir = task.get("workdir")
    if workdir is not None:
        workdir = Path(workdir) / subject.name / strategy.label / f"rep-{task['repetition']:03d}"
    started = time.perf_counter()
    outcome = run_bet_and_run(subject, strategy, task["t_total_ms"], mode, adapter, seeds, workdir)
    wall_ms = (time.perf_counter() - started) * 1000
    record = CampaignRecord(
        subject=subject.name,
        strategy=strategy.label,
        n=strategy.n,
        p=strategy.p,
        repetition=task["repetition"],
        master_seed=task["master_seed"],
        t_total_ms=task["t_total_ms"],
        t_k_ms=outcome.plan.t_k,
        t_f_ms=outcome.plan.t_f,
        mode=mode.value,
        failure=outcome.failure.value,
        survivor_index=outcome.survivor_index,
        survivor_seed=outcome.survivor_seed,
        charged_budget_ms=outcome.charged_budget,
        error_count=outcome.error_count,
        starters=[s.to_dict() for s in outcome.starters],
        final=None if outcome.final is None else outcome.final.to_dict(),
        schema=[[name, d.value] for name, d in adapter.schema(subject)],
        phases=[[e.phase.value, e.at_ms] for e in outcome.events],
        wall_ms=wall_ms,
    )
    return record


def campaign_tasks(config: CampaignConfig, workdir=None) -> list:
    tasks = []
    for subject in config.subjects:
        for strategy in config.strategies:
            for rep in range(config.repetitions):
                tasks.append({
                    "subject": subject.to_dict(),
                    "n": strategy.n,
                    "p": strategy.p,
                    "repetition": rep,
                    "t_total_ms": config.t_total_ms,
                    "mode": config.mode.value,
                    "master_seed": config.master_seed,
                    "interval_ms": config.interval_ms,
                    "adapter": config.adapter,
                    "workdir": None if workdir is None else str(workdir),
                })
    return tasks


def _task_key(task: dict) -> tuple:
    return (task["subject"]["name"], RestartStrategy(task["n"], task["p"]).label, task["repetition"])


def read_records(path, repair: bool = False) -> list:
    """Load a record file; a torn trailing line is dropped (and cut off when repairing)."""
    path = Path(path)
    if not path.exists():
        return []
    data = path.read_bytes()
    complete, _, torn = data.rpartition(b"\n")
    if torn:
        log.warning("%s: dropping incomplete trailing record", path)
        if repair:
            with open(path, "r+b") as fh:
                fh.truncate(len(complete) + 1 if complete else 0)
    records = []
    for line in complete.decode("utf-8").splitlines():
        if line.strip():
            records.append(CampaignRecord.from_dict(json.loads(line)))
    return records


def run_campaign(config: CampaignConfig, out_path, workdir=None, stop_after: int | None = None,
                 progress=None) -> list:
    """Run every missing (subject, strategy, repetition) triple and return all records.

    ``stop_after`` executes at most that many new triples (an intentional
    interruption).  Checkpoint files are kept under ``workdir`` when given,
    otherwise each run uses a temporary directory.
    """
    config.validate()
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        existing = read_records(out_path, repair=True)
        with open(out_path, "a"):
            pass
    except OSError as exc:
        raise CampaignAborted(f"cannot write records to {out_path}: {exc}") from exc
    for rec in existing:
        if (rec.master_seed, rec.t_total_ms, rec.mode) != (config.master_seed, config.t_total_ms, config.mode.value):
            raise CampaignAborted(f"{out_path} holds records of a different campaign")

    done = {rec.key for rec in existing}
    pending = [t for t in campaign_tasks(config, workdir) if _task_key(t) not in done]
    if stop_after is not None:
        pending = pending[:stop_after]
    log.info("campaign: %d done, %d to run", len(done), len(pending))

    timing_path = out_path.with_name(out_path.name + ".timing")
    fresh = []
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 and len(pending) > 1 else None
    try:
        results = pool.map(_execute, pending, chunksize=4) if pool else map(_execute, pending)
        with open(out_path, "a", encoding="utf-8") as out, open(timing_path, "a") as timing:
            for record in results:
                out.write(record.to_json() + "\n")
                out.flush()
                timing.write(json.dumps({"key": list(record.key), "wall_ms": round(record.wall_ms, 3)}) + "\n")
                fresh.append(record)
                if progress is not None:
                    progress(record)
    except OSError as exc:
        raise CampaignAborted(f"writing {out_path} failed: {exc}") from exc
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)

    order = {_task_key(t): i for i, t in enumerate(campaign_tasks(config))}
    return sorted(existing + fresh, key=lambda r: order.get(r.key, len(order)))


@dataclass
class EligibilityVerdict:
    subject: str
    eligible_for_baseline: bool
    eligible_for_bar: bool
    reason: str

    @property
    def eligible(self) -> bool:
        return self.eligible_for_baseline and self.eligible_for_bar

    def to_dict(self) -> dict:
        return {"kind": "eligibility", "subject": self.subject,
                "eligible_for_baseline": self.eligible_for_baseline,
                "eligible_for_bar": self.eligible_for_bar, "reason": self.reason}


def split_strategies(records, baseline: str | None = None, bar: str | None = None) -> tuple:
    labels = list(dict.fromkeys(r.strategy for r in records))
    baseline = baseline or BASELINE.label
    if bar is None:
        others = [label for label in labels if label != baseline]
        if len(others) != 1:
            raise ValueError(f"cannot pick the Bet-and-Run strategy among {others}")
        bar = others[0]
    return baseline, bar


def filter_eligibility(records, theta: float = 0.5, baseline: str | None = None,
                       bar: str | None = None) -> list:
    """Mark subjects whose runs error or fail in more than ``theta`` of repetitions."""
    baseline, bar = split_strategies(records, baseline, bar)
    by_cell = {}
    for rec in records:
        by_cell.setdefault((rec.subject, rec.strategy), []).append(rec)
    subjects = list(dict.fromkeys(r.subject for r in records))
    verdicts = []
    for subject in subjects:
        ok = {}
        for side in (baseline, bar):
            runs = by_cell.get((subject, side))
            if not runs:
                raise ValueError(f"incomplete records: no {side} runs for {subject}")
            ok[side] = sum(r.troubled for r in runs) / len(runs) <= theta
        if ok[baseline] and ok[bar]:
            reason = "OK"
        elif ok[bar]:
            reason = "BASELINE_ERRORS"
        elif ok[baseline]:
            reason = "BAR_ERRORS"
        else:
            reason = "BOTH_ERRORS"
        verdicts.append(EligibilityVerdict(subject, ok[baseline], ok[bar], reason))
    return verdicts


@dataclass
class ErrorTally:
    strategy: str
    errors: int
    error_runs: int
    runs: int

    @property
    def fraction(self) -> float:
        """Internal errors per run."""
        return self.errors / self.runs if self.runs else 0.0

    @property
    def error_run_fraction(self) -> float:
        return self.error_runs / self.runs if self.runs else 0.0

    def to_dict(self) -> dict:
        return {"kind": "tally", "strategy": self.strategy, "errors": self.errors,
                "error_runs": self.error_runs, "runs": self.runs}


def error_tally(records) -> dict:
    tallies = {}
    for rec in records:
        t = tallies.setdefault(rec.strategy, ErrorTally(rec.strategy, 0, 0, 0))
        t.errors += rec.error_count
        t.error_runs += rec.error_count > 0
        t.runs += 1
    return tallies
