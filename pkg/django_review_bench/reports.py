# -*- coding: utf-8 -*-
"""
Report bundle.

Every number here is derived from persisted profiles through the stats
kernel; nothing is read back from the judge or the retrieval cache.
"""
import dataclasses
import logging
import math
import os
from collections import Counter
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .corpus import ACCEPT_DECISIONS, HUMAN
from .errors import InsufficientDataError
from .judge import atomic_write
from .pipelines import DimensionProfile, dump_json
from .schemas import ARC_DIMENSIONS, ASPECTS, STANCES
from .stats import (PairedSample, TestResult, correlation_magnitude, holm_correction, jensen_shannon_divergence,
                    mann_whitney_u, pearson_with_ttest, shannon_entropy, significance_stars, wilcoxon_signed_rank)

logger = logging.getLogger('django_review_bench.reports')

MACRO = 'macro'
TESTS = ('wilcoxon', 'mw', 'pearson')
CORRELATED_METRICS = ('doa', 'ns', 'critical_recall', 'minor_recall', 'ncps', 'mcs')
CSV_FLOAT_FORMAT = '%.6f'


def _attr(component: str, field: str) -> Callable[[DimensionProfile], Optional[float]]:
    def getter(profile: DimensionProfile) -> Optional[float]:
        result = getattr(profile, component)
        return getattr(result, field) if result is not None else None
    return getter


METRICS: Dict[str, Callable[[DimensionProfile], Optional[float]]] = {
    'doa': _attr('doa', 'doa'),
    'ns': _attr('novelty', 'ns'),
    'sr': _attr('novelty', 'sr'),
    'ssr': _attr('novelty', 'ssr'),
    'critical_recall': _attr('flaws', 'critical_recall'),
    'minor_recall': _attr('flaws', 'minor_recall'),
    'ncps': _attr('flaws', 'ncps'),
    'mcs': _attr('mcs', 'mcs'),
    'ar': _attr('mcs', 'ar'),
    'sd': _attr('mcs', 'sd'),
    'cd': _attr('mcs', 'cd'),
}


@dataclasses.dataclass
class ReportBundle:
    tables: Dict[str, pd.DataFrame]
    report: Dict[str, Any]
    plots: Dict[str, Any]


def _number(value):
    """JSON-ready scalar; NaN and missing values become ``None``."""
    if value is None:
        return None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    return value


def table_records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return [{k: _number(v) for k, v in row.items()} for row in frame.to_dict(orient='records')]


def label_order(labels: Iterable[str]) -> List[str]:
    return sorted(set(labels), key=lambda label: (label != HUMAN, label))


def profiles_frame(profiles: Sequence[DimensionProfile]) -> pd.DataFrame:
    """One row per profile with every scalar metric; absent components stay NaN."""
    rows = []
    for p in sorted(profiles, key=lambda p: p.key):
        row = {'paper_id': p.paper_id, 'reviewer_id': p.reviewer_id, 'label': p.reviewer_label,
               'venue': p.venue, 'year': p.year, 'decision': p.decision, 'accepted': p.decision in ACCEPT_DECISIONS,
               'review_count': p.review_count}
        for name, getter in METRICS.items():
            value = getter(p)
            row[name] = float(value) if value is not None else np.nan
        rows.append(row)
    columns = ['paper_id', 'reviewer_id', 'label', 'venue', 'year', 'decision', 'accepted', 'review_count']
    return pd.DataFrame(rows, columns=columns + list(METRICS))


def summary_table(frame: pd.DataFrame) -> pd.DataFrame:
    """Per-venue and macro mean/std/n of every metric per reviewer label; macro pools all profiles."""
    rows = []
    for label in label_order(frame['label']):
        mine = frame[frame['label'] == label]
        groups = [(venue, mine[mine['venue'] == venue]) for venue in sorted(mine['venue'].unique())]
        groups.append((MACRO, mine))
        for venue, group in groups:
            for metric in METRICS:
                values = group[metric].dropna()
                rows.append({
                    'label': label,
                    'venue': venue,
                    'metric': metric,
                    'n': int(values.size),
                    'mean': float(values.mean()) if values.size else np.nan,
                    'std': float(values.std(ddof=1)) if values.size > 1 else np.nan,
                })
    return pd.DataFrame(rows, columns=['label', 'venue', 'metric', 'n', 'mean', 'std'])


def _result_row(result: Optional[TestResult], reason: str = '') -> Dict[str, Any]:
    if result is None:
        return {'statistic': np.nan, 'p_value': np.nan, 'effect_size': np.nan, 'n_effective': 0,
                'method': '', 'absent': True, 'reason': reason}
    return {'statistic': result.statistic if result.statistic is not None else np.nan,
            'p_value': result.p_value,
            'effect_size': result.effect_size if result.effect_size is not None else np.nan,
            'n_effective': result.n_effective, 'method': result.method, 'absent': False, 'reason': result.reason}


def _apply_holm(rows: List[Dict[str, Any]], family: str):
    computable = [r for r in rows if not r['absent']]
    if len(computable) < len(rows):
        logger.warning(f"Holm family {family} shrinks from {len(rows)} to {len(computable)} comparisons")
    adjusted = holm_correction([r['p_value'] for r in computable])
    for row, p in zip(computable, adjusted):
        row['p_holm'] = p
        row['stars'] = significance_stars(p)
    for row in rows:
        row.setdefault('p_holm', np.nan)
        row.setdefault('stars', '')
        row['family_size'] = len(computable)


def significance_table(frame: pd.DataFrame, metrics: Sequence[str] = tuple(METRICS)) -> pd.DataFrame:
    """
    Paired Wilcoxon of each system label against the human bundle of the same
    papers, one Holm family per (label, metric) across venues.
    """
    rows = []
    human = frame[frame['label'] == HUMAN].set_index('paper_id')
    for label in label_order(frame['label']):
        if label == HUMAN:
            continue
        mine = frame[frame['label'] == label]
        for metric in metrics:
            family = []
            for venue in sorted(mine['venue'].unique()):
                system = mine[mine['venue'] == venue].set_index('paper_id')[metric].dropna()
                paired = pd.concat([system.rename('system'), human[metric].rename('human')], axis=1,
                                   join='inner').dropna().sort_index()
                result, reason = None, ''
                try:
                    result = wilcoxon_signed_rank(PairedSample(tuple(paired.index), tuple(paired['system']),
                                                               tuple(paired['human'])))
                except InsufficientDataError as e:
                    reason = str(e)
                row = {'label': label, 'metric': metric, 'venue': venue, 'n_pairs': int(len(paired)),
                       'mean_delta': float((paired['system'] - paired['human']).mean()) if len(paired) else np.nan}
                row.update(_result_row(result, reason))
                family.append(row)
            _apply_holm(family, f"{label}/{metric}")
            rows.extend(family)
    columns = ['label', 'metric', 'venue', 'n_pairs', 'mean_delta', 'statistic', 'p_value', 'effect_size',
               'n_effective', 'method', 'absent', 'reason', 'p_holm', 'stars', 'family_size']
    return pd.DataFrame(rows, columns=columns)


def accept_reject_table(frame: pd.DataFrame, metrics: Sequence[str] = tuple(METRICS)) -> pd.DataFrame:
    """Accepted-minus-rejected mean delta with an unpaired Mann-Whitney test, Holm within each label."""
    rows = []
    for label in label_order(frame['label']):
        mine = frame[frame['label'] == label]
        family = []
        for metric in metrics:
            accepted = mine[mine['accepted']][metric].dropna()
            rejected = mine[~mine['accepted']][metric].dropna()
            result, reason = None, ''
            try:
                result = mann_whitney_u(accepted.to_numpy(), rejected.to_numpy())
            except InsufficientDataError as e:
                reason = str(e)
            row = {'label': label, 'metric': metric, 'n_accept': int(accepted.size), 'n_reject': int(rejected.size),
                   'delta': float(accepted.mean() - rejected.mean()) if accepted.size and rejected.size else np.nan}
            row.update(_result_row(result, reason))
            family.append(row)
        _apply_holm(family, f"{label}/accept-reject")
        rows.extend(family)
    columns = ['label', 'metric', 'n_accept', 'n_reject', 'delta', 'statistic', 'p_value', 'effect_size',
               'n_effective', 'method', 'absent', 'reason', 'p_holm', 'stars', 'family_size']
    return pd.DataFrame(rows, columns=columns)


def pearson_table(frame: pd.DataFrame, metrics: Sequence[str] = CORRELATED_METRICS) -> pd.DataFrame:
    """Pairwise metric correlations over every profile that has both values."""
    rows = []
    for x in metrics:
        for y in metrics:
            both = frame[list(dict.fromkeys((x, y)))].dropna()
            xs, ys = both[x].to_numpy(), both[y].to_numpy()
            result, reason = None, ''
            try:
                result = pearson_with_ttest(xs, ys)
            except InsufficientDataError as e:
                reason = str(e)
            row = {'metric_x': x, 'metric_y': y, 'n': int(xs.size)}
            if result is None or result.degenerate:
                row.update({'r': np.nan, 't': np.nan, 'p_value': np.nan, 'stars': '', 'magnitude': '',
                            'absent': True, 'reason': reason or result.reason})
            else:
                row.update({'r': result.effect_size, 't': result.statistic, 'p_value': result.p_value,
                            'stars': significance_stars(result.p_value),
                            'magnitude': correlation_magnitude(result.effect_size), 'absent': False, 'reason': ''})
            rows.append(row)
    return pd.DataFrame(rows, columns=['metric_x', 'metric_y', 'n', 'r', 't', 'p_value', 'stars', 'magnitude',
                                       'absent', 'reason'])


def _premise_distributions(profiles: Sequence[DimensionProfile]) -> Dict[Tuple[str, str], Tuple[float, ...]]:
    out = {}
    for p in profiles:
        if p.doa is not None:
            dist = p.doa.distribution(premises_only=True)
            if dist is not None:
                out[p.key] = dist
    return out


def aspect_table(profiles: Sequence[DimensionProfile]) -> pd.DataFrame:
    """
    Premise-level aspect alignment per label: the macro distribution, the mean
    per-paper JSD against the human bundle and the mean per-profile entropy.
    """
    dists = _premise_distributions(profiles)
    human = {p.paper_id: dists[p.key] for p in profiles if p.is_human and p.key in dists}
    rows = []
    for label in label_order(p.reviewer_label for p in profiles):
        mine = [p for p in profiles if p.reviewer_label == label and p.key in dists]
        row = {'label': label, 'n': len(mine)}
        if mine:
            matrix = np.array([dists[p.key] for p in mine])
            row.update({aspect: float(v) for aspect, v in zip(ASPECTS, matrix.mean(axis=0))})
            row['entropy'] = float(np.mean([shannon_entropy(dists[p.key]) for p in mine]))
            jsd = [jensen_shannon_divergence(dists[p.key], human[p.paper_id]) for p in mine if p.paper_id in human]
            row['jsd'] = float(np.mean(jsd)) if jsd else np.nan
        else:
            row.update({aspect: np.nan for aspect in ASPECTS})
            row.update({'entropy': np.nan, 'jsd': np.nan})
        rows.append(row)
    return pd.DataFrame(rows, columns=['label', 'n', *ASPECTS, 'entropy', 'jsd'])


def plot_series(profiles: Sequence[DimensionProfile]) -> Dict[str, Any]:
    by_label: Dict[str, List[DimensionProfile]] = {}
    for p in profiles:
        by_label.setdefault(p.reviewer_label, []).append(p)
    stance, grounding, arc_dims, densities, claims, flaw_counts, aspect_doa = {}, {}, {}, {}, {}, {}, {}
    for label in label_order(by_label):
        mine = by_label[label]
        counts = Counter()
        for p in mine:
            counts.update(p.extras.get('stance_counts') or {})
        total = sum(counts.values())
        stance[label] = {s: counts.get(s, 0) / total if total else None for s in STANCES}

        levels = Counter()
        for p in mine:
            if p.doa is not None:
                levels.update(p.doa.grounding_histogram)
        grounding[label] = {level: levels.get(level, 0) for level in ('0', '1', '2')}

        scored = [p.mcs for p in mine if p.mcs is not None]
        arc_dims[label] = {d: float(np.mean([m.dim_means[i] for m in scored])) if scored else None
                           for i, d in enumerate(ARC_DIMENSIONS)}
        densities[label] = {k: float(np.mean([getattr(m, k) for m in scored])) if scored else None
                            for k in ('ar', 'sd', 'cd')}

        per_review = [p.extras['claims_per_review'] for p in mine if 'claims_per_review' in p.extras]
        claims[label] = float(np.mean(per_review)) if per_review else None

        flaw_counts[label] = {
            'valid': sum(p.flaws.counts['valid'] for p in mine if p.flaws is not None),
            'hallucinated': sum(p.flaws.counts['hallucinated'] for p in mine if p.flaws is not None),
        }

        aspect_doa[label] = {}
        for aspect in ASPECTS:
            values = [p.doa.aspect_doa[aspect] for p in mine if p.doa is not None and aspect in p.doa.aspect_doa]
            aspect_doa[label][aspect] = float(np.mean(values)) if values else None
    return {
        'stance_distribution': stance,
        'grounding_histogram': grounding,
        'arc_dimension_means': arc_dims,
        'arc_densities': densities,
        'claims_per_review': claims,
        'flaw_validity': flaw_counts,
        'aspect_doa': aspect_doa,
    }


def compute_statistics(profiles: Sequence[DimensionProfile], tests: Sequence[str] = TESTS) -> Dict[str, pd.DataFrame]:
    unknown = set(tests) - set(TESTS)
    if unknown:
        raise ValueError(f"Unknown tests {sorted(unknown)}, expected a subset of {list(TESTS)}")
    frame = profiles_frame(profiles)
    tables = {}
    if 'wilcoxon' in tests:
        tables['significance'] = significance_table(frame)
    if 'mw' in tests:
        tables['accept_reject'] = accept_reject_table(frame)
    if 'pearson' in tests:
        tables['pearson'] = pearson_table(frame)
    return tables


def emit_report(profiles: Sequence[DimensionProfile], config=None, out_dir: Optional[str] = None) -> ReportBundle:
    """Builds the report bundle and, when an output directory is known, writes it."""
    if not profiles:
        raise InsufficientDataError('A report needs at least one profile')
    profiles = sorted(profiles, key=lambda p: p.key)
    frame = profiles_frame(profiles)
    tables = {'profiles': frame, 'summary': summary_table(frame)}
    tables.update(compute_statistics(profiles))
    tables['aspects'] = aspect_table(profiles)
    report = {name: table_records(table) for name, table in tables.items()}
    report['labels'] = label_order(frame['label'])
    report['venues'] = sorted(frame['venue'].unique().tolist())
    bundle = ReportBundle(tables=tables, report=report, plots=plot_series(profiles))
    out_dir = out_dir or (config.output_dir if config is not None else None)
    if out_dir:
        write_report(bundle, out_dir)
    return bundle


def write_report(bundle: ReportBundle, out_dir: str) -> None:
    dump_json(os.path.join(out_dir, 'report.json'), bundle.report)
    dump_json(os.path.join(out_dir, 'plots.json'), bundle.plots)
    tables_dir = os.path.join(out_dir, 'tables')
    for name, table in bundle.tables.items():
        path = os.path.join(tables_dir, f"{name}.csv")
        csv = table.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
        atomic_write(path, csv.encode('utf-8'))
    logger.info(f"Wrote report with {len(bundle.tables)} tables to {out_dir}")
