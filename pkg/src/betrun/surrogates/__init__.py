"""Seeded anytime optimizers standing in for a real test generator."""

from betrun.surrogates.base import (
    AnytimeProblem,
    AnytimeRun,
    FaultInjection,
    Subject,
    SubjectError,
    SubjectTooLarge,
)
from betrun.surrogates.oracle import reference_optimum
from betrun.surrogates.suite import (
    FAMILIES,
    build_problem,
    default_suite,
    fault_model,
    load_suite,
    make_subject_suite,
    parse_suite,
    preset_subject,
    step_optimizer,
)

__all__ = [
    "AnytimeProblem",
    "AnytimeRun",
    "FAMILIES",
    "FaultInjection",
    "Subject",
    "SubjectError",
    "SubjectTooLarge",
    "build_problem",
    "default_suite",
    "fault_model",
    "load_suite",
    "make_subject_suite",
    "parse_suite",
    "preset_subject",
    "reference_optimum",
    "step_optimizer",
]
