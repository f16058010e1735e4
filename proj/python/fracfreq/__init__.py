"""Python access to the fracfreq library.

Scenario configs and reports cross the boundary as plain dicts.
"""

import json
import os

from ._fracfreq import LineSpectrum, extension_profile, trace_constant
from . import _fracfreq

__all__ = ["LineSpectrum", "extension_profile", "trace_constant", "run_scenario", "verify_all"]


def run_scenario(config):
    """Run one scenario config (a dict) and return its verification report."""
    return json.loads(_fracfreq._run_scenario(json.dumps(config)))


def verify_all(directory):
    """Run every *.json config in `directory`.

    Returns a dict with keys exit_status, log and reports.
    """
    return json.loads(_fracfreq._verify_all(os.fspath(directory)))
