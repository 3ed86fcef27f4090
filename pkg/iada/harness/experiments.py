"""
Experiment protocols: the mode comparison table over one drifting sequence
and the sub-domain count sweep under an equal total step budget
"""
import copy
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import median
from typing import Dict, Tuple

from ..config import CELLS, RunConfig, serialize
from ..engine.records import DomainResult, RunRecord
from ..engine.trainer import adapt, evaluate, train_source, train_source_gan
from ..exceptions import IADAError, InvalidArgumentError
from ..forge.domains import DomainSpec, make_domain_sequence, sweep_start_factor
from ..forge.streams import DomainStream, realize_domain
from ..io.auditio import AccessAudit
from ..nets.models import build_bundle
from ..seeding import SeedSplitter

log = logging.getLogger("IADA")

SOURCE_MODE = "source"
COLUMNS = ("only source", "ADA", "ADA SDM", "ADA Union", "IADA", "IADA SDM")
COLUMN_FOR_LABEL = {
    SOURCE_MODE: "only source",
    "ada": "ADA",
    "ada_sdm": "ADA SDM",
    "ada_union": "ADA Union",
    "iada": "IADA",
    "iada_sdm": "IADA SDM",
}
SWEEP_SUFFIX = "_sweep"

# (left, relation, right) expected at the final factor
ORDERING_CHECKS = (
    ("only source", "<", "ADA"),
    ("ADA", "<", "IADA"),
    ("ADA", "<=", "ADA Union"),
    ("ADA Union", "<", "IADA"),
)
SDM_PAIRS = (("ADA SDM", "ADA"), ("IADA SDM", "IADA"))
SDM_GAP = 0.015
GAIN_COUNTS = (10, 1)


def split_cell(cell) -> Tuple[str, bool]:
    """
    'iada_sdm' -> ('iada', True), 'ada_union' -> ('ada_union', False)
    """
    if cell not in CELLS:
        raise InvalidArgumentError(f"unknown experiment cell {cell}")
    if cell.endswith("_sdm"):
        return cell[: -len("_sdm")], True
    return cell, False


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    start_factor: float
    end_factor: float
    count: int
    cells: Tuple[str, ...]
    seeds: Tuple[int, ...]
    desk_scale: bool = True
    sweep_end_factor: float = 0.3
    sweep_counts: Tuple[int, ...] = (1, 2, 5, 10, 20, 40)
    sweep_sdm: bool = True

    def __post_init__(self):
        if not self.seeds:
            raise InvalidArgumentError("an experiment needs at least one seed")
        if not self.cells:
            raise InvalidArgumentError("an experiment needs at least one cell")
        for cell in self.cells:
            split_cell(cell)
        if any(c < 1 for c in self.sweep_counts):
            raise InvalidArgumentError(f"sweep counts must be >= 1, got {self.sweep_counts}")

    @classmethod
    def from_config(cls, config: RunConfig) -> "ExperimentSpec":
        return cls(
            name=config.name,
            start_factor=config.start_factor,
            end_factor=config.end_factor,
            count=config.count,
            cells=tuple(config.cells),
            seeds=tuple(config.seeds),
            desk_scale=config.desk_scale,
            sweep_end_factor=config.sweep_end_factor,
            sweep_counts=tuple(config.sweep_counts),
            sweep_sdm=config.sweep_sdm,
        )

    @property
    def sweep_name(self) -> str:
        return self.name + SWEEP_SUFFIX


def _spread(values):
    return (min(values), max(values)) if values else None


def _majority(left, right):
    """
    Compare two {seed: accuracy} maps seed by seed and return the majority
    relation with the number of shared seeds
    """
    seeds = sorted(set(left) & set(right))
    less = sum(left[s] < right[s] for s in seeds)
    greater = sum(left[s] > right[s] for s in seeds)
    if less > greater:
        return "<", len(seeds)
    if greater > less:
        return ">", len(seeds)
    return "=", len(seeds)


def _holds(relation, observed) -> bool:
    return observed == relation or (relation == "<=" and observed in ("<", "="))


@dataclass
class ResultTable:
    """
    Accuracy per (factor, column), kept per seed so orderings can be taken
    seed by seed before aggregating
    """

    name: str
    factors: Tuple[float, ...]
    cells: Dict[Tuple[float, str], Dict[int, float]] = field(default_factory=dict)
    partial: bool = False
    failures: list = field(default_factory=list)

    def add(self, factor, column, seed, accuracy):
        if column not in COLUMNS:
            raise InvalidArgumentError(f"unknown result column {column}")
        if factor not in self.factors:
            raise InvalidArgumentError(f"factor {factor} is not a row of table {self.name}")
        self.cells.setdefault((factor, column), {})[seed] = accuracy

    def values(self, factor, column) -> Dict[int, float]:
        return dict(self.cells.get((factor, column), {}))

    def median(self, factor, column):
        values = list(self.values(factor, column).values())
        return median(values) if values else None

    def spread(self, factor, column):
        return _spread(list(self.values(factor, column).values()))

    def majority_order(self, a, b, factor=None) -> str:
        """
        '<', '>' or '=' for column a against column b, decided by a majority of
        per-seed comparisons (on the final factor unless given)
        """
        factor = self.factors[-1] if factor is None else factor
        observed, seeds = _majority(self.values(factor, a), self.values(factor, b))
        if not seeds:
            raise InvalidArgumentError(f"columns {a} and {b} share no seed at factor {factor}")
        return observed

    def orderings(self) -> list:
        """
        Expected mode orderings on the final factor, each decided by per-seed
        majority; pairs without a shared seed are skipped
        """
        if not self.factors:
            return []
        factor = self.factors[-1]
        checks = []
        for left, relation, right in ORDERING_CHECKS:
            observed, seeds = _majority(self.values(factor, left), self.values(factor, right))
            if not seeds:
                continue
            checks.append(
                {
                    "left": left,
                    "relation": relation,
                    "right": right,
                    "factor": factor,
                    "observed": observed,
                    "seeds": seeds,
                    "holds": _holds(relation, observed),
                }
            )
        return checks

    def sdm_gaps(self) -> list:
        """
        Distance between the medians of each sdm column and its counterpart
        """
        if not self.factors:
            return []
        factor = self.factors[-1]
        gaps = []
        for sdm_column, column in SDM_PAIRS:
            a = self.median(factor, sdm_column)
            b = self.median(factor, column)
            if a is None or b is None:
                continue
            gap = abs(a - b)
            gaps.append({"sdm": sdm_column, "plain": column, "factor": factor, "gap": gap, "holds": gap <= SDM_GAP})
        return gaps

    def as_dict(self) -> dict:
        rows = []
        for factor in self.factors:
            row = {"factor": factor, "cells": {}}
            for column in COLUMNS:
                values = self.values(factor, column)
                if not values:
                    continue
                low, high = self.spread(factor, column)
                row["cells"][column] = {
                    "median": self.median(factor, column),
                    "min": low,
                    "max": high,
                    "seeds": {str(s): v for s, v in sorted(values.items())},
                }
            rows.append(row)
        return {
            "name": self.name,
            "columns": list(COLUMNS),
            "rows": rows,
            "orderings": self.orderings(),
            "sdm_gaps": self.sdm_gaps(),
            "partial": self.partial,
            "failures": list(self.failures),
        }


@dataclass
class SweepCurve:
    """
    Final-domain accuracy per sub-domain count, per seed, for each swept label
    """

    name: str
    end_factor: float
    counts: Tuple[int, ...]
    points: Dict[str, Dict[int, Dict[int, float]]] = field(default_factory=dict)
    partial: bool = False
    failures: list = field(default_factory=list)

    def add(self, label, count, seed, accuracy):
        self.points.setdefault(label, {}).setdefault(count, {})[seed] = accuracy

    def labels(self) -> list:
        return sorted(self.points)

    def values(self, label, count) -> Dict[int, float]:
        return dict(self.points.get(label, {}).get(count, {}))

    def median(self, label, count):
        values = list(self.values(label, count).values())
        return median(values) if values else None

    def spread(self, label, count):
        return _spread(list(self.values(label, count).values()))

    def reference(self, label="iada"):
        """
        A single domain holds only the end factor, so count 1 is plain ADA
        """
        return self.median(label, 1)

    def checks(self) -> list:
        """
        Per label: more sub-domains beat a single one (per-seed majority) and
        the two largest counts agree within their seed spread
        """
        checks = []
        more, fewer = GAIN_COUNTS
        for label in self.labels():
            observed, seeds = _majority(self.values(label, more), self.values(label, fewer))
            if seeds:
                checks.append(
                    {
                        "label": label,
                        "kind": "gain",
                        "counts": [more, fewer],
                        "observed": observed,
                        "seeds": seeds,
                        "holds": observed == ">",
                    }
                )
            filled = [c for c in self.counts if self.values(label, c)]
            if len(filled) < 2:
                continue
            previous, last = filled[-2], filled[-1]
            difference = abs(self.median(label, last) - self.median(label, previous))
            band = max(high - low for low, high in (self.spread(label, previous), self.spread(label, last)))
            checks.append(
                {
                    "label": label,
                    "kind": "saturation",
                    "counts": [last, previous],
                    "difference": difference,
                    "spread": band,
                    "holds": difference <= band,
                }
            )
        return checks

    def as_dict(self) -> dict:
        modes = {}
        for label in self.labels():
            modes[label] = {}
            for count in self.counts:
                values = self.values(label, count)
                if not values:
                    continue
                low, high = self.spread(label, count)
                modes[label][str(count)] = {
                    "median": self.median(label, count),
                    "min": low,
                    "max": high,
                    "seeds": {str(s): v for s, v in sorted(values.items())},
                }
        return {
            "name": self.name,
            "end_factor": self.end_factor,
            "counts": list(self.counts),
            "reference": self.reference(),
            "modes": modes,
            "checks": self.checks(),
            "partial": self.partial,
            "failures": list(self.failures),
        }


@dataclass
class SeedData:
    """
    Everything one seed trains and evaluates on: the base pools and source stream
    """

    seed: int
    train: object
    test: object
    source: DomainStream


def load_seed_data(config: RunConfig, data_io, seed) -> SeedData:
    seeds = SeedSplitter(seed)
    train_size = config.train_size if config.desk_scale else None
    test_size = config.test_size if config.desk_scale else None
    train = data_io.load_subset("train", train_size, seed=seeds.seed("data", 0))
    test = data_io.load_subset("test", test_size, seed=seeds.seed("data", 1))
    # the source domain is the undeformed pool
    source = DomainStream(DomainSpec(1.0, 0, seeds.seed("stream", 0)), train.images, train.labels)
    return SeedData(seed=seed, train=train, test=test, source=source)


def prepare_domains(config: RunConfig, data, sequence):
    """
    Unlabeled training streams and labeled test streams for every domain of sequence
    """
    targets = []
    tests = []
    for spec in sequence:
        shard = (spec.index, sequence.count) if config.pool_mode == "disjoint" else None
        targets.append(realize_domain(data.train, spec, labeled=False, shard=shard))
        tests.append(realize_domain(data.test, spec, labeled=True))
    return targets, tests


def prepare_source(config: RunConfig, data, with_gan):
    """
    Source trained bundle, plus its generator-equipped copy when sdm cells run
    """
    bundle = build_bundle(seed=data.seed, noise_dim=config.noise_dim, input_shape=data.source.image_shape)
    bundle.to(config.device)
    train_source(bundle, data.source, config.source_epochs, config.batch_size, config.optimizer())
    gan_bundle = None
    if with_gan:
        gan_bundle = copy.deepcopy(bundle)
        train_source_gan(
            gan_bundle,
            data.source,
            config.gan_steps,
            config.batch_size,
            config.lambda_adv,
            config.optimizer(),
            config.scale_discriminator,
        )
    return bundle, gan_bundle


def _run_dir(config, experiment, seed, label, count=None):
    parts = [config.run_dir, experiment, f"seed_{seed}"]
    if count is not None:
        parts.append(f"count_{count}")
    parts.append(label)
    return os.path.join(*parts)


def only_source_record(bundle, sequence, tests, seed, experiment) -> RunRecord:
    record = RunRecord(mode=SOURCE_MODE, seed=seed, count=sequence.count, experiment=experiment)
    for spec, test in zip(sequence, tests):
        record.domains.append(
            DomainResult(index=spec.index, factor=spec.factor, accuracy=evaluate(bundle, test))
        )
    return record


def run_cell(config, cell, bundle, sequence, targets, tests, data, seed, experiment, count=None) -> RunRecord:
    """
    Adapt a private copy of bundle under one (mode, sdm) cell and save its record
    """
    mode, sdm = split_cell(cell)
    run_dir = _run_dir(config, experiment, seed, cell, count)
    adaptation = config.adaptation(mode=mode, sdm=sdm, count=sequence.count, seed=seed)
    log.info(f"{experiment} seed {seed}: running cell {cell} over {sequence.count} domains")

    def eval_hook(snapshot, spec):
        return evaluate(snapshot, tests[spec.index])

    record = adapt(
        copy.deepcopy(bundle),
        sequence,
        adaptation,
        eval_hook=eval_hook,
        targets=targets,
        source_data=None if sdm else data.source,
        source_test=data.test,
        audit=AccessAudit(),
        run_dir=run_dir,
    )
    record.experiment = experiment
    record.save(run_dir, serialize(config))
    return record


def _failure(cell, seed, error, count=None):
    where = f"count {count} " if count is not None else ""
    return {
        "cell": cell,
        "seed": seed,
        "count": count,
        "error": f"{type(error).__name__}: {error}",
        "message": f"{where}seed {seed} cell {cell} aborted",
    }


def table1_seed(spec: ExperimentSpec, config: RunConfig, data_io, seed):
    """
    All cells of the mode comparison for one seed: (records, failures)
    """
    config = config.replace(seed=seed)
    data = load_seed_data(config, data_io, seed)
    sequence = make_domain_sequence(spec.start_factor, spec.end_factor, spec.count, seed)
    targets, tests = prepare_domains(config, data, sequence)
    with_gan = any(split_cell(cell)[1] for cell in spec.cells)
    bundle, gan_bundle = prepare_source(config, data, with_gan)

    source_record = only_source_record(bundle, sequence, tests, seed, spec.name)
    source_record.save(_run_dir(config, spec.name, seed, SOURCE_MODE), serialize(config))
    records = [source_record]
    failures = []
    for cell in spec.cells:
        start = gan_bundle if split_cell(cell)[1] else bundle
        try:
            records.append(run_cell(config, cell, start, sequence, targets, tests, data, seed, spec.name))
        except IADAError as e:
            log.error(f"seed {seed} cell {cell} aborted: {e}")
            failures.append(_failure(cell, seed, e))
    return records, failures


def sweep_seed(spec: ExperimentSpec, config: RunConfig, data_io, seed):
    """
    iada (and iada_sdm) at every sweep count for one seed: (records, failures)
    """
    config = config.replace(seed=seed)
    data = load_seed_data(config, data_io, seed)
    bundle, gan_bundle = prepare_source(config, data, spec.sweep_sdm)
    cells = ("iada", "iada_sdm") if spec.sweep_sdm else ("iada",)
    records = []
    failures = []
    for count in spec.sweep_counts:
        start_factor = sweep_start_factor(spec.sweep_end_factor, count)
        sequence = make_domain_sequence(start_factor, spec.sweep_end_factor, count, seed)
        targets, tests = prepare_domains(config, data, sequence)
        for cell in cells:
            start = gan_bundle if split_cell(cell)[1] else bundle
            try:
                records.append(
                    run_cell(config, cell, start, sequence, targets, tests, data, seed, spec.sweep_name, count)
                )
            except IADAError as e:
                log.error(f"sweep count {count} seed {seed} cell {cell} aborted: {e}")
                failures.append(_failure(cell, seed, e, count))
    return records, failures


def _run_seeds(worker, spec, config, data_io):
    records = []
    failures = []
    if config.workers > 1 and len(spec.seeds) > 1:
        log.info(f"running {len(spec.seeds)} seeds on {config.workers} worker processes")
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(worker, spec, config, data_io, seed) for seed in spec.seeds]
            results = [future.result() for future in futures]
    else:
        results = [worker(spec, config, data_io, seed) for seed in spec.seeds]
    for seed_records, seed_failures in results:
        records.extend(seed_records)
        failures.extend(seed_failures)
    return records, failures


def run_table1(spec: ExperimentSpec, config: RunConfig, data_io) -> ResultTable:
    from .report import table_from_records

    log.info(f"running experiment {spec.name}: cells {spec.cells}, seeds {spec.seeds}")
    records, failures = _run_seeds(table1_seed, spec, config, data_io)
    table = table_from_records(records, spec.name)
    table.failures = failures
    table.partial = table.partial or bool(failures)
    return table


def run_subdomain_sweep(spec: ExperimentSpec, config: RunConfig, data_io) -> SweepCurve:
    from .report import curve_from_records

    too_many = [c for c in spec.sweep_counts if c > config.steps_total]
    if too_many:
        raise InvalidArgumentError(f"sweep counts {too_many} exceed the total budget of {config.steps_total} steps")
    log.info(f"running sweep {spec.sweep_name}: counts {spec.sweep_counts}, seeds {spec.seeds}")
    records, failures = _run_seeds(sweep_seed, spec, config, data_io)
    curve = curve_from_records(records, spec.sweep_name, spec.sweep_end_factor, spec.sweep_counts)
    curve.failures = failures
    curve.partial = curve.partial or bool(failures)
    return curve
