"""Full-scale replication profile (opt-in).

Runs the complete success-rate experiment at publication scale: J in
{1, 4, 8, 16}, 200 trials per cell, measurement sweep over 5..35.  This
takes many hours single-threaded; set JOINTFREQ_WORKERS to parallelize
and JOINTFREQ_LONG_PROFILE=1 to enable.
"""

import json
import os

import pytest

from jointfreq.experiment import ExperimentConfig, run_sweep, success_rate

pytestmark = [
    pytest.mark.long_profile,
    pytest.mark.skipif(
        os.environ.get("JOINTFREQ_LONG_PROFILE") != "1",
        reason="long profile disabled (set JOINTFREQ_LONG_PROFILE=1)",
    ),
]


def test_full_replication(tmp_path):
    config_path = os.path.join(
        os.path.dirname(__file__), "..", "configs", "full_replication.json"
    )
    with open(config_path) as fh:
        data = json.load(fh)
    data.pop("assertions", None)
    data["workers"] = int(os.environ.get("JOINTFREQ_WORKERS", "1"))
    cfg = ExperimentConfig(**data)
    result = run_sweep(cfg, out_dir=str(tmp_path))

    # joint recovery is reliable past the reported threshold of about 14
    # measurements per signal at J=4, while separate recovery needs about
    # 30; below the threshold the joint rate collapses
    assert success_rate(result, "joint", 4, 14) >= 0.95
    assert success_rate(result, "joint", 4, 20) >= 0.95
    assert success_rate(result, "joint", 4, 5) <= 0.05
    assert success_rate(result, "separate", 4, 30) >= 0.95
    assert (
        success_rate(result, "joint", 4, 20)
        - success_rate(result, "separate", 4, 20)
        >= 0.5
    )
