import argparse
from pathlib import Path

import numpy as np


def out_dir(description: str) -> Path:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default="demo_output", help="directory for the CSV files")
    path = Path(p.parse_args().out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save(path: Path, header: list[str], columns) -> None:
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header), comments="", fmt="%.10g")
    print(f"  wrote {path}")
