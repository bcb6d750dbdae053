"""Path helpers shared by the experiment scripts."""

import os
from pathlib import Path

HERE = Path(__file__).resolve().parent
CONFIGS = HERE / "configs"
OUT = HERE / "out"


def enter_script_dir() -> None:
    """Make relative ``output`` paths in the configs land in ``scripts/out``."""
    OUT.mkdir(exist_ok=True)
    os.chdir(HERE)
