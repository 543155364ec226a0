"""Smoke checks: shipped configs validate and the narrative scripts run."""

import subprocess
import sys
from pathlib import Path

import pytest

from becsync import cli

DEMOS = Path(__file__).resolve().parent.parent / "demos"
CONFIGS = sorted((DEMOS / "configs").glob("*.cfg"))
SCRIPTS = sorted(DEMOS.glob("*.py"))


def test_every_experiment_has_a_config():
    from becsync.config import EXPERIMENTS, load_file
    named = {load_file(p)["experiment"].text for p in CONFIGS}
    assert named == set(EXPERIMENTS)


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_demo_config_validates(path, capsys):
    assert cli.main(["validate", str(path)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


@pytest.mark.slow
@pytest.mark.parametrize("path", SCRIPTS, ids=lambda p: p.stem)
def test_demo_script_runs(path, tmp_path):
    res = subprocess.run([sys.executable, str(path)], cwd=tmp_path, capture_output=True,
                         text=True, timeout=300)
    assert res.returncode == 0, res.stderr[-2000:]
    assert res.stdout.strip()
