import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("CERTDP_CLI", str(Path(__file__).resolve().parents[2] / "build" / "tools" / "certdp"))

# Small enough that every command finishes in seconds.
SMALL = {
    "sim": {"horizon": 400, "truth_knots": 101, "truth_draws": 20},
    "dp": {"knots": 101, "n_draws": 20},
    "bounds": {"dense_points": 101, "n_draws": 20, "candidate_points": 101},
    "inference": {"knots": 6, "n_draws": 20, "certificate_points": 101, "grid": "-1.2:0:5,-7:-1:5"},
    "experiments": {"replications": 2, "knot_counts": [5], "horizon": 300},
}


def run(args, cwd, check=None, timeout=600):
    proc = subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True, timeout=timeout)
    if check is not None:
        assert proc.returncode == check, f"exit {proc.returncode}\nstdout:\n{proc.stdout}\nstderr:\n{proc.stderr}"
    return proc


def write_config(path, overrides=None):
    cfg = json.loads(json.dumps(SMALL))
    for block, values in (overrides or {}).items():
        if isinstance(values, dict):
            cfg.setdefault(block, {}).update(values)
        else:
            cfg[block] = values
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def small_config(tmp_path):
    return write_config(tmp_path / "config.json")
