"""Bundled summary statistics."""

import json
from importlib import resources

from .estimate import WaitSample


def nfhs3_summary():
    """NFHS-3 first-conception delays as a summary-only sample (n=3767, sum=78112)."""
    doc = json.loads(resources.files("betageom").joinpath("data/nfhs3_summary.json").read_text())
    return WaitSample.from_summary(doc["n"], doc["sum_x"])
