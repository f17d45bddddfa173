"""Child-process entry point used by SubprocessAdapter.

    python -m betrun.worker --subject JSON --seed S --timeout-ms T --checkpoint PATH

Records are written when the wall clock reaches their elapsed time, measured
from the start of the optimizer loop.  Startup time counts against the
deadline and is written to the header.
"""

import argparse
import json
import sys
import time

from betrun.checkpoint import Header
from betrun.surrogates import AnytimeRun, Subject, build_problem, fault_model
from betrun.surrogates.base import DEFAULT_INTERVAL_MS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="betrun.worker")
    ap.add_argument("--subject", required=True)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--timeout-ms", type=int, required=True)
    ap.add_argument("--interval-ms", type=int, default=DEFAULT_INTERVAL_MS)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--spawned-at", type=float, default=None)
    args = ap.parse_args(argv)

    spawned = args.spawned_at if args.spawned_at is not None else time.time()
    deadline = spawned + args.timeout_ms / 1000
    subject = Subject.from_dict(json.loads(args.subject))
    problem = build_problem(subject)
    fault_ms = fault_model(subject).fault_time(subject.name, args.seed, problem.lag_ms, args.interval_ms)
    run = AnytimeRun(problem, args.seed, args.timeout_ms, args.interval_ms, fault_ms)

    loop_start = time.time()
    startup_ms = max(0, int((loop_start - spawned) * 1000))
    with open(args.checkpoint, "w", encoding="ascii", newline="\n") as fh:
        fh.write(Header(subject.name, args.seed, problem.schema, startup_ms).to_line() + "\n")
        fh.flush()
        for record in run:
            due = loop_start + record.elapsed / 1000
            if due > deadline:
                return 0
            time.sleep(max(0.0, due - time.time()))
            fh.write(record.to_line() + "\n")
            fh.flush()
    return run.exit_code or 0


if __name__ == "__main__":
    sys.exit(main())
