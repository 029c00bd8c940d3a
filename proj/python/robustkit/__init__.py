"""Outlier-robust estimation: GNC, ADAPT, greedy and minimally tuned variants."""

import json

from ._robustkit import *  # noqa: F401,F403
from ._robustkit import run_experiment as _run_experiment


def run_experiment(config, threads=1):
    """Run a sweep from a config dict or JSON string; returns (csv_text, summary_dict)."""
    text = config if isinstance(config, str) else json.dumps(config)
    csv_text, summary = _run_experiment(text, threads)
    return csv_text, json.loads(summary)
