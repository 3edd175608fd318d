"""
Experiment Reports
CSV and JSON views of run records: per-run rows, the per-cell summary,
the representation x metric grid, the budget sweep and the adequate
scenario. Wall time is logged, never written, so reruns are identical.
"""
import csv
import logging
from pathlib import Path

import numpy as np
import orjson

logger = logging.getLogger(__name__)

MISSING = 'NA'


def _mean(values):
    values = [v for v in values if v is not None]
    return round(float(np.mean(values)), 6) if values else None


def _budget(value):
    return round(float(value), 6)


def technique_label(record) -> str:
    if record.technique == 'ga':
        return f'ga:{record.preprocessing}/{record.representation}/{record.metric}/{record.init}'
    if record.technique == 'greedy':
        return f'greedy:{record.preprocessing}/{record.representation}/{record.metric}'
    return record.technique


class ExperimentReports:
    """
    Build and write the experiment's report tables
    """

    RUN_FIELDS = [
        'technique', 'preprocessing', 'representation', 'metric', 'init', 'budget', 'seed',
        'adequate', 'rl', 'suite', 'fdr', 'coverage', 'fitness', 'generations', 'error',
    ]
    SUMMARY_FIELDS = [
        'technique', 'preprocessing', 'representation', 'metric', 'init', 'budget',
        'mean_fdr', 'mean_coverage', 'repeats',
    ]
    ADEQUATE_FIELDS = ['technique', 'budget', 'mean_fdr', 'mean_coverage', 'repeats']
    REDUNDANCY_FIELDS = ['rl', 'budget', 'technique', 'mean_fdr', 'mean_coverage', 'runs']

    @staticmethod
    def _group(records, key):
        groups = {}
        for record in records:
            groups.setdefault(key(record), []).append(record)
        return groups

    @staticmethod
    def summarize(records):
        """
        One row per (technique, preprocessing, representation, metric,
        init, budget); means over successful repeats, NA when none succeeded
        """
        groups = ExperimentReports._group(records, lambda r: (
            r.technique, r.preprocessing, r.representation, r.metric, r.init, _budget(r.budget),
        ))
        rows = []
        for (technique, method, representation, metric, init, budget), members in groups.items():
            ok = [r for r in members if r.ok]
            rows.append({
                'technique': technique,
                'preprocessing': method,
                'representation': representation,
                'metric': metric,
                'init': init,
                'budget': budget,
                'mean_fdr': _mean([r.fdr for r in ok]),
                'mean_coverage': _mean([r.coverage for r in ok]),
                'repeats': len(ok),
                'adequate': any(r.adequate for r in members),
            })
        return rows

    @staticmethod
    def grid_rows(summary):
        """GA cells laid out as rows budget x representation x metric, columns init/preprocessing"""
        columns = []
        table = {}
        for row in summary:
            if row['technique'] != 'ga':
                continue
            column = f"{row['init']}/{row['preprocessing']}"
            if column not in columns:
                columns.append(column)
            key = (row['budget'], row['representation'], row['metric'])
            table.setdefault(key, {'budget': key[0], 'representation': key[1], 'metric': key[2]})
            table[key][column] = row['mean_fdr']
        return list(table.values()), ['budget', 'representation', 'metric', *columns]

    @staticmethod
    def sweep_rows(records):
        """Mean FDR per technique label (rows) and budget (columns), adequate runs excluded"""
        swept = [r for r in records if not r.adequate]
        budgets = sorted({_budget(r.budget) for r in swept})
        groups = ExperimentReports._group(swept, technique_label)
        rows = []
        for label, members in groups.items():
            row = {'technique': label}
            for budget in budgets:
                row[str(budget)] = _mean([r.fdr for r in members if r.ok and _budget(r.budget) == budget])
            rows.append(row)
        return rows, ['technique', *(str(b) for b in budgets)]

    @staticmethod
    def adequate_rows(records):
        groups = ExperimentReports._group([r for r in records if r.adequate], technique_label)
        rows = []
        for label, members in groups.items():
            ok = [r for r in members if r.ok]
            rows.append({
                'technique': label,
                'budget': _budget(members[0].budget),
                'mean_fdr': _mean([r.fdr for r in ok]),
                'mean_coverage': _mean([r.coverage for r in ok]),
                'repeats': len(ok),
            })
        return rows

    @staticmethod
    def summarize_redundancy(records):
        groups = ExperimentReports._group(
            [r for r in records if r.rl is not None],
            lambda r: (r.rl, _budget(r.budget), technique_label(r)),
        )
        rows = []
        for (rl, budget, label), members in groups.items():
            ok = [r for r in members if r.ok]
            rows.append({
                'rl': rl,
                'budget': budget,
                'technique': label,
                'mean_fdr': _mean([r.fdr for r in ok]),
                'mean_coverage': _mean([r.coverage for r in ok]),
                'runs': len(ok),
            })
        return rows

    @staticmethod
    def write_csv(path, rows, fields):
        """
        Write rows to CSV; missing values become NA
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=fields, lineterminator='\n')
            writer.writeheader()
            for row in rows:
                writer.writerow({
                    field: MISSING if row.get(field) is None else row.get(field)
                    for field in fields
                })
        logger.info(f'Wrote {len(rows)} rows to {path}')
        return path

    @staticmethod
    def write_json(path, records):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = [
            {field: getattr(record, field) for field in ExperimentReports.RUN_FIELDS}
            for record in records
        ]
        path.write_bytes(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE))
        return path

    @staticmethod
    def write_experiment(output_dir, records, summary):
        output_dir = Path(output_dir)
        fields = ExperimentReports.RUN_FIELDS
        files = {
            'runs_csv': ExperimentReports.write_csv(
                output_dir / 'runs.csv', [{f: getattr(r, f) for f in fields} for r in records], fields
            ),
            'runs_json': ExperimentReports.write_json(output_dir / 'runs.json', records),
            'summary': ExperimentReports.write_csv(
                output_dir / 'summary.csv', summary, ExperimentReports.SUMMARY_FIELDS
            ),
        }
        grid, grid_fields = ExperimentReports.grid_rows(summary)
        files['grid'] = ExperimentReports.write_csv(output_dir / 'grid.csv', grid, grid_fields)
        sweep, sweep_fields = ExperimentReports.sweep_rows(records)
        files['budget_sweep'] = ExperimentReports.write_csv(output_dir / 'budget_sweep.csv', sweep, sweep_fields)
        adequate = ExperimentReports.adequate_rows(records)
        if adequate:
            files['adequate'] = ExperimentReports.write_csv(
                output_dir / 'adequate.csv', adequate, ExperimentReports.ADEQUATE_FIELDS
            )
        return files
