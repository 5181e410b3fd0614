import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

METRIC_KEYS = ("ffe", "gpe_frames", "vde_frames", "mcd_db", "wer", "f0_std_hz", "energy_std")


@dataclass
class MetricReport:
    ffe: Optional[float] = None
    gpe_frames: Optional[float] = None
    vde_frames: Optional[float] = None
    mcd_db: Optional[float] = None
    wer: Optional[float] = None
    f0_std_hz: Optional[float] = None
    energy_std: Optional[float] = None

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


def corpus_means(items: List[Dict]) -> MetricReport:
    if not items:
        return MetricReport()
    frame = pd.DataFrame(items).reindex(columns=list(METRIC_KEYS)).apply(pd.to_numeric, errors="coerce")
    means = frame.mean(skipna=True)
    return MetricReport(**{k: (None if pd.isna(v) else float(v)) for k, v in means.items()})


def write_report(
    items: List[Dict],
    path: Union[str, Path],
    skipped: Optional[List[Dict]] = None,
) -> Path:
    """JSON report with per-item metrics, corpus means and skipped items."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "means": corpus_means(items).to_dict(),
        "n_items": len(items),
        "items": items,
        "skipped": skipped or [],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, default=_to_builtin)
    logger.info(f"Wrote metric report for {len(items)} items to {path}")
    return path


def write_item_csv(items: List[Dict], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(items).to_csv(path, index=False, encoding="utf-8-sig")
    return path


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")
