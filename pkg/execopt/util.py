# execopt/util.py
import json
import os
import time
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
from slugify import slugify

PathLike = Union[str, Path]


def ensure_dir(p: PathLike) -> Path:
    p = Path(p)
    p.mkdir(parents=True, exist_ok=True)
    return p


def safe_filename(name: str, suffix: str = "") -> str:
    stem = slugify(name or "", separator="_") or "unnamed"
    return stem + suffix


def _json_default(o):
    # numpy scalars/arrays leak into metadata dicts
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def load_json(path: PathLike) -> Any:
    with Path(path).open("r", encoding="utf-8") as f:
        return json.load(f)


def save_json(obj: Any, path: PathLike) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    with path.open("w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, default=_json_default)
    return path


def write_step_summary(lines: List[str]):
    """Append markdown lines to the CI step summary, if one is configured."""
    path = os.getenv("GITHUB_STEP_SUMMARY")
    if not path:
        return
    try:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError:
        pass


def heartbeat(label: str, done: int, total: int, t0: float, every: int = 50,
              force: bool = False) -> Optional[str]:
    """Print a progress line every `every` items (and on the last one)."""
    if not force and done % every != 0 and done != total:
        return None
    rate = done / max(1e-9, time.time() - t0)
    line = f"{label}: {done}/{total} (~{rate:.2f}/s)"
    print(line, flush=True)
    return line
