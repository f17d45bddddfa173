"""Subject suites: ``family,count,param=value,...`` records.

A value ``lo:hi`` is a range spread linearly over the ``count`` subjects of
that line (small to large).  Subjects are named ``<family>-<k>`` unless the
line carries ``name=`` (single subject) or ``preset=``.
"""

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from betrun.rng import generator, mix
from betrun.surrogates import mvc, tsp
from betrun.surrogates.base import DEFAULT_FAULT_RATE, FaultInjection, Subject, SubjectError
from betrun.surrogates.lagged import LaggedCoverageProblem
from betrun.surrogates.mvc import MvcProblem
from betrun.surrogates.plateau import PlateauProblem
from betrun.surrogates.tsp import TspProblem

FAMILIES = ("mvc", "tsp", "plateau", "lagged")


@dataclass(frozen=True)
class SuiteEntry:
    family: str
    count: int
    params: tuple = ()


def _value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_suite(text: str) -> list:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2:
            raise SubjectError(f"line {lineno}: expected family,count,...: {raw!r}")
        try:
            count = int(parts[1])
        except ValueError:
            raise SubjectError(f"line {lineno}: count must be an integer") from None
        params = []
        for p in parts[2:]:
            if "=" not in p:
                raise SubjectError(f"line {lineno}: expected param=value, got {p!r}")
            k, v = p.split("=", 1)
            params.append((k.strip(), v.strip()))
        entries.append(SuiteEntry(parts[0], count, tuple(params)))
    return entries


def load_suite(path) -> list:
    return make_subject_suite(parse_suite(Path(path).read_text()))


def default_suite() -> list:
    return make_subject_suite(parse_suite(shipped_config("default_suite.txt")))


def shipped_config(name: str) -> str:
    return resources.files("betrun.configs").joinpath(name).read_text()


def _spread(raw: str, k: int, count: int):
    if ":" not in raw or raw.count(":") != 1:
        return _value(raw)
    lo, hi = (_value(x) for x in raw.split(":"))
    if not all(isinstance(x, (int, float)) for x in (lo, hi)):
        return raw
    frac = k / (count - 1) if count > 1 else 0.0
    value = lo + (hi - lo) * frac
    if isinstance(lo, int) and isinstance(hi, int):
        return int(round(value))
    return round(value, 12)


def make_subject_suite(entries) -> list:
    """Expand suite entries into concrete, validated subjects."""
    if isinstance(entries, str):
        entries = parse_suite(entries)
    subjects, seen, counters = [], set(), {}
    for entry in entries:
        if entry.family not in FAMILIES:
            raise SubjectError(f"unknown family {entry.family!r}")
        if entry.count < 1:
            raise SubjectError(f"{entry.family}: count must be >= 1")
        raw = dict(entry.params)
        if "name" in raw and entry.count != 1:
            raise SubjectError("name= requires count 1")
        for k in range(entry.count):
            params = {key: _spread(v, k, entry.count) for key, v in raw.items()}
            name = params.pop("name", None) or params.get("preset")
            if name is None:
                idx = counters.get(entry.family, 0)
                name = f"{entry.family}-{idx:02d}"
            counters[entry.family] = counters.get(entry.family, 0) + 1
            if name in seen:
                raise SubjectError(f"duplicate subject name {name!r}")
            seen.add(name)
            subject = Subject(str(name), entry.family, tuple(sorted(params.items())))
            build_problem(subject)  # validate eagerly
            subjects.append(subject)
    return subjects


def structure_seed(subject: Subject) -> int:
    return mix("structure", subject.family, subject.name, repr(subject.params))


@functools.lru_cache(maxsize=512)
def build_problem(subject: Subject):
    p = subject.get
    step_ms = int(p("step_ms", 10))
    rng = generator(structure_seed(subject))
    if subject.family == "mvc":
        preset = p("preset")
        if preset is not None:
            if preset not in mvc.PRESETS:
                raise SubjectError(f"unknown mvc preset {preset!r}")
            n, edges = mvc.PRESETS[preset]
        else:
            n = int(p("vertices", 20))
            edges = mvc.random_graph(n, float(p("edge_prob", 0.3)), rng)
        rate = p("mutation_rate")
        return MvcProblem(n, edges, pop_size=int(p("pop_size", 80)),
                          mutation_rate=None if rate is None else float(rate),
                          elite=int(p("elite", 2)), step_ms=step_ms)
    if subject.family == "tsp":
        preset = p("preset")
        if preset is not None:
            if preset not in tsp.PRESETS:
                raise SubjectError(f"unknown tsp preset {preset!r}")
            coords = tsp.PRESETS[preset]
        else:
            coords = tsp.random_cities(int(p("cities", 20)), rng)
        return TspProblem(coords, step_ms=step_ms)
    if subject.family == "plateau":
        return PlateauProblem(float(p("rate", 0.01)), step_ms=step_ms)
    if subject.family == "lagged":
        return LaggedCoverageProblem(
            int(p("targets", 50)), int(p("lag_ms", 50)), structure_seed(subject),
            depth=int(p("depth", 4)), cover_prob=float(p("cover_prob", 0.25)),
            infeasible=float(p("infeasible", 0.1)), step_ms=step_ms)
    raise SubjectError(f"unknown family {subject.family!r}")


def fault_model(subject: Subject) -> FaultInjection:
    rate = float(subject.get("fault", DEFAULT_FAULT_RATE))
    if not 0 <= rate <= 1:
        raise SubjectError("fault rate must lie in [0, 1]")
    return FaultInjection(rate)


def preset_subject(name: str) -> Subject:
    """Builtin named subjects: ``k3`` (MVC triangle) and ``unit-square`` (TSP)."""
    if name in mvc.PRESETS:
        return Subject(name, "mvc", (("fault", 0.0), ("preset", name)))
    if name in tsp.PRESETS:
        return Subject(name, "tsp", (("fault", 0.0), ("preset", name)))
    raise SubjectError(f"unknown preset {name!r}")


def step_optimizer(subject: Subject, seed: int, state=None):
    """Advance one iteration; a ``None`` state is first initialised from the seed."""
    problem = build_problem(subject)
    if state is None:
        state = problem.init_state(seed)
    return problem.step(state)
