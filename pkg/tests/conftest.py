import pytest

from betrun.adapter import InstanceReport
from betrun.campaign import CampaignRecord


@pytest.fixture
def make_record():
    """Build a CampaignRecord with a single fitness metric."""

    def build(subject="s", strategy="n1_p100", rep=0, score=1.0, error_count=0,
              failure="none", schema=(("fitness_score", "min"),), metrics=None):
        n, p = (1, 1.0) if strategy == "n1_p100" else (8, 0.05)
        final = None
        if failure != "no_viable_candidate":
            errored = failure == "survivor_errored" or error_count > 0
            final = InstanceReport(0, 1, score, metrics or {"fitness_score": score},
                                   errored=errored, produced_output=True,
                                   error_count=error_count, elapsed_ms=2000, exit_code=int(errored)).to_dict()
        return CampaignRecord(
            subject=subject, strategy=strategy, n=n, p=p, repetition=rep, master_seed=0,
            t_total_ms=2000, t_k_ms=int(2000 * p), t_f_ms=2000 - n * int(2000 * p), mode="strict",
            failure=failure, survivor_index=None if final is None else 0,
            survivor_seed=None if final is None else 1, charged_budget_ms=2000,
            error_count=error_count if final is not None else max(error_count, 1),
            starters=[], final=final, schema=[list(x) for x in schema], phases=[])

    return build
