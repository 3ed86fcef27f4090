"""
Aggregate run records into result tables / sweep curves and render them as text
"""
import logging

from ..exceptions import InvalidArgumentError
from .experiments import COLUMN_FOR_LABEL, COLUMNS, SDM_GAP, SWEEP_SUFFIX, ResultTable, SweepCurve

log = logging.getLogger("IADA")

EMPTY = "–"
TABLE_TAG = "table1"
SWEEP_TAG = "sweep"
FACTOR_WIDTH = 8
CELL_WIDTH = 22


def _select(records, experiment):
    if experiment is None:
        return list(records)
    return [r for r in records if r.experiment == experiment]


def table_from_records(records, experiment=None) -> ResultTable:
    """
    Build the mode comparison table; one-step cells only carry the final factor
    """
    records = [r for r in _select(records, experiment) if not r.experiment.endswith(SWEEP_SUFFIX)]
    factors = sorted({d.factor for r in records for d in r.domains}, reverse=True)
    name = experiment or (records[0].experiment if records else "")
    table = ResultTable(name=name, factors=tuple(factors))
    for record in records:
        column = COLUMN_FOR_LABEL.get(record.label)
        if column is None:
            log.warning(f"skipping record with unknown cell {record.label}")
            continue
        for result in record.domains:
            if result.accuracy is not None:
                table.add(result.factor, column, record.seed, result.accuracy)
        table.partial = table.partial or record.partial
    return table


def curve_from_records(records, experiment=None, end_factor=None, counts=None) -> SweepCurve:
    records = [r for r in _select(records, experiment) if r.experiment.endswith(SWEEP_SUFFIX)]
    if counts is None:
        counts = sorted({r.count for r in records})
    if end_factor is None:
        finals = {r.final.factor for r in records if r.final is not None}
        end_factor = min(finals) if finals else None
    name = experiment or (records[0].experiment if records else "")
    curve = SweepCurve(name=name, end_factor=end_factor, counts=tuple(counts))
    for record in records:
        final = record.final
        if final is None or final.accuracy is None:
            continue
        curve.add(record.label, record.count, record.seed, final.accuracy)
        curve.partial = curve.partial or record.partial
    return curve


def _percent(value):
    return f"{100.0 * value:.2f}"


def _cell(median, spread):
    if median is None:
        return EMPTY
    low, high = spread
    return f"{_percent(median)} [{_percent(low)}-{_percent(high)}]"


def _verdict(holds) -> str:
    return "holds" if holds else "FAILS"


def render_table(table: ResultTable) -> str:
    """
    Aligned text: one row per factor, median [min-max] accuracy in percent per column
    """
    lines = [f"Target accuracy: {table.name}" + (" (partial)" if table.partial else "")]
    header = f"{'factor':<{FACTOR_WIDTH}}" + "".join(f"{c:>{CELL_WIDTH}}" for c in COLUMNS)
    lines.append(header)
    lines.append("-" * len(header))
    for factor in table.factors:
        cells = [_cell(table.median(factor, c), table.spread(factor, c)) for c in COLUMNS]
        lines.append(f"{factor:<{FACTOR_WIDTH}.4g}" + "".join(f"{c:>{CELL_WIDTH}}" for c in cells))
    for check in table.orderings():
        lines.append(
            f"check {check['left']} {check['relation']} {check['right']} at {check['factor']:.4g}: "
            f"{_verdict(check['holds'])} (per-seed majority {check['observed']} over {check['seeds']} seeds)"
        )
    for check in table.sdm_gaps():
        lines.append(
            f"check |{check['sdm']} - {check['plain']}| <= {_percent(SDM_GAP)} points: "
            f"{_verdict(check['holds'])} (gap {_percent(check['gap'])})"
        )
    for failure in table.failures:
        lines.append(f"aborted: {failure['message']} ({failure['error']})")
    return "\n".join(lines) + "\n"


def render_curve(curve: SweepCurve) -> str:
    labels = curve.labels()
    lines = [
        f"Final-domain accuracy by sub-domain count: {curve.name} (end factor {curve.end_factor})"
        + (" (partial)" if curve.partial else "")
    ]
    header = f"{'count':<{FACTOR_WIDTH}}" + "".join(f"{COLUMN_FOR_LABEL.get(label, label):>{CELL_WIDTH}}" for label in labels)
    lines.append(header)
    lines.append("-" * len(header))
    for count in curve.counts:
        cells = [_cell(curve.median(label, count), curve.spread(label, count)) for label in labels]
        lines.append(f"{count:<{FACTOR_WIDTH}d}" + "".join(f"{c:>{CELL_WIDTH}}" for c in cells))
    reference = curve.reference()
    lines.append(f"ADA reference (count 1): {EMPTY if reference is None else _percent(reference)}")
    for check in curve.checks():
        more, fewer = check["counts"]
        label = COLUMN_FOR_LABEL.get(check["label"], check["label"])
        if check["kind"] == "gain":
            lines.append(
                f"check {label} count {more} > count {fewer}: {_verdict(check['holds'])} "
                f"(per-seed majority {check['observed']} over {check['seeds']} seeds)"
            )
        else:
            lines.append(
                f"check {label} |count {more} - count {fewer}| within seed spread: {_verdict(check['holds'])} "
                f"(difference {_percent(check['difference'])}, spread {_percent(check['spread'])})"
            )
    for failure in curve.failures:
        lines.append(f"aborted: {failure['message']} ({failure['error']})")
    return "\n".join(lines) + "\n"


def render_report(records, experiment=None, outputs=None, report_dir="report") -> str:
    """
    Render whatever the records hold: the mode table, the sweep curve or both

    experiment selects one table experiment together with its sweep. When
    output processors are given each table and curve is also handed to them,
    tagged table1 and sweep
    """
    if experiment is not None:
        records = [r for r in records if r.experiment in (experiment, experiment + SWEEP_SUFFIX)]
    records = list(records)
    if not records:
        raise InvalidArgumentError("no run records to report on")
    payloads = []
    table_records = [r for r in records if not r.experiment.endswith(SWEEP_SUFFIX)]
    sweep_records = [r for r in records if r.experiment.endswith(SWEEP_SUFFIX)]
    for name in sorted({r.experiment for r in table_records}):
        payloads.append((TABLE_TAG, table_payload(table_from_records(table_records, name))))
    for name in sorted({r.experiment for r in sweep_records}):
        payloads.append((SWEEP_TAG, curve_payload(curve_from_records(sweep_records, name))))
    for tag, payload in payloads:
        for op in outputs or []:
            op.output(data=payload, tag=tag, report_dir=report_dir)
    return "\n".join(payload["text"] for _, payload in payloads)


def table_payload(table: ResultTable) -> dict:
    return {"title": table.name, "text": render_table(table), "json": table.as_dict()}


def curve_payload(curve: SweepCurve) -> dict:
    data = curve.as_dict()
    return {"title": curve.name, "text": render_curve(curve), "json": data, "curve": data}
