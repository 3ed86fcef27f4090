"""
Run records: per domain results, metrics stream and their on-disk layout

run directory: config.snapshot, metrics.jsonl, ckpt_domain_<k>, summary.json and
timing.json; wall clock times live only in timing.json so summary.json is a
pure function of the config
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from ..io.atomic import atomic_write

log = logging.getLogger("IADA")

SUMMARY_FILE = "summary.json"
METRICS_FILE = "metrics.jsonl"
SNAPSHOT_FILE = "config.snapshot"
TIMING_FILE = "timing.json"


def checkpoint_name(index) -> str:
    return f"ckpt_domain_{index}"


@dataclass
class DomainResult:
    index: int
    factor: float
    accuracy: Optional[float] = None
    steps: int = 0
    wall_clock: float = 0.0
    start_hash: str = ""
    end_hash: str = ""
    checkpoint: Optional[str] = None
    domain_share: Optional[dict] = None


@dataclass
class RunRecord:
    mode: str
    sdm: bool = False
    seed: int = 0
    count: int = 1
    experiment: str = ""
    config: dict = field(default_factory=dict)
    domains: List[DomainResult] = field(default_factory=list)
    metrics: List[dict] = field(default_factory=list)
    audit: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    source_accuracy_before: Optional[float] = None
    source_accuracy_after: Optional[float] = None
    partial: bool = False

    def __str__(self):
        label = f"{self.mode}{' sdm' if self.sdm else ''}"
        return f"RunRecord {label}, seed: {self.seed}, domains: {len(self.domains)}, steps: {len(self.metrics)}"

    @property
    def label(self) -> str:
        return cell_label(self.mode, self.sdm)

    @property
    def final(self) -> Optional[DomainResult]:
        return self.domains[-1] if self.domains else None

    def accuracies(self) -> dict:
        return {d.factor: d.accuracy for d in self.domains if d.accuracy is not None}

    def summary(self) -> dict:
        data = asdict(self)
        data.pop("metrics")
        data.pop("config")
        for domain in data["domains"]:
            domain.pop("wall_clock")
        return data

    def timing(self) -> dict:
        return {str(d.index): d.wall_clock for d in self.domains}

    def save(self, run_dir, snapshot_text=None):
        os.makedirs(run_dir, exist_ok=True)
        if snapshot_text is not None:
            with atomic_write(os.path.join(run_dir, SNAPSHOT_FILE), "w") as f:
                f.write(snapshot_text)
        with atomic_write(os.path.join(run_dir, METRICS_FILE), "w") as f:
            for entry in self.metrics:
                f.write(json.dumps(entry, sort_keys=True) + "\n")
        summary = self.summary()
        summary["config"] = self.config
        with atomic_write(os.path.join(run_dir, SUMMARY_FILE), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        with atomic_write(os.path.join(run_dir, TIMING_FILE), "w") as f:
            json.dump(self.timing(), f, indent=2, sort_keys=True)
        log.info(f"saved run record {self} to {run_dir}")

    @classmethod
    def from_dict(cls, data, metrics=None, timing=None) -> "RunRecord":
        data = dict(data)
        timing = timing or {}
        domains = []
        for entry in data.pop("domains", []):
            entry = dict(entry)
            entry.setdefault("wall_clock", timing.get(str(entry["index"]), 0.0))
            domains.append(DomainResult(**entry))
        return cls(domains=domains, metrics=list(metrics or []), **data)

    @classmethod
    def load(cls, run_dir, with_metrics=False) -> "RunRecord":
        with open(os.path.join(run_dir, SUMMARY_FILE)) as f:
            data = json.load(f)
        metrics = []
        path = os.path.join(run_dir, METRICS_FILE)
        if with_metrics and os.path.exists(path):
            with open(path) as f:
                metrics = [json.loads(line) for line in f if line.strip()]
        timing = {}
        path = os.path.join(run_dir, TIMING_FILE)
        if os.path.exists(path):
            with open(path) as f:
                timing = json.load(f)
        return cls.from_dict(data, metrics, timing)


def cell_label(mode, sdm) -> str:
    return f"{mode}_sdm" if sdm else mode


def find_records(root) -> list:
    """
    Load every run record below root (directories holding a summary.json)
    """
    records = []
    for directory, _, files in sorted(os.walk(root)):
        if SUMMARY_FILE in files:
            records.append(RunRecord.load(directory))
    log.debug(f"found {len(records)} run records below {root}")
    return records
