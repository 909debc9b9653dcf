import csv
import io
import json

from django.core.serializers.json import DjangoJSONEncoder

from bell.models import OutputFormat
from bell.values import InequalityReport, SuiteResult
from optics.values import FractionReport
from pilotwave.values import McResult

SCAN_COLUMNS = [
    'theta_deg', 'phi_deg',
    'f1_coarse', 'f1_xtheta_phi', 'f1_xthetabar_phi',
    'f2_coarse', 'f2_ytheta_phi', 'f2_ytheta_phibar',
    'f3_coarse', 'f3_xtheta_phi', 'f3_ytheta_phi',
    'eq4_lhs', 'eq4_rhs', 'eq5_residual', 'eq6_lhs', 'eq6_rhs', 'eq6_satisfied',
    'identification_gap',
]
STAGE_COLUMNS = ['stage', 'engine', 'component', 'probability']
MC_COLUMNS = ['stage', 'seed', 'seed_source', 'n', 'n_conditioned', 'channels', 'count', 'frequency', 'stderr']


def format_value(value) -> str:
    """
    Serialize a CSV cell: floats with 17 significant digits, booleans lowercase.
    """
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


class ReportServices:
    """
    Renders results as CSV or JSON documents. Rendering is pure, so identical inputs give identical bytes.
    """

    @classmethod
    def _csv(cls, columns: list[str], rows: list[list]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
        return buffer.getvalue()

    @classmethod
    def _json(cls, document: dict) -> str:
        return json.dumps(document, indent=2, cls=DjangoJSONEncoder) + '\n'

    @classmethod
    def _fraction_dict(cls, report: FractionReport) -> dict:
        return {'coarse': report.coarse, 'components': report.components}

    @classmethod
    def render_stages(cls, stages: list[dict], fmt: str, metadata: dict) -> str:
        """
        :param stages: Entries with `label`, `quantum` and `pilot_wave` FractionReports.
        :type stages: list[dict]
        """
        if fmt == OutputFormat.JSON:
            return cls._json({
                'metadata': metadata,
                'stages': [
                    {
                        'label': entry['label'],
                        'quantum': cls._fraction_dict(entry['quantum']),
                        'pilot_wave': cls._fraction_dict(entry['pilot_wave']),
                    }
                    for entry in stages
                ],
            })

        rows = []
        for entry in stages:
            for engine in ('quantum', 'pilot_wave'):
                report = entry[engine]
                rows.append([entry['label'], engine, 'coarse', report.coarse])
                for channels, p in (report.components or {}).items():
                    rows.append([entry['label'], engine, channels, p])
        return cls._csv(STAGE_COLUMNS, rows)

    @classmethod
    def render_scan(cls, reports: list[InequalityReport], fmt: str, metadata: dict) -> str:
        if fmt == OutputFormat.JSON:
            return cls._json({
                'metadata': metadata,
                'columns': SCAN_COLUMNS,
                'points': [
                    {column: row[column] for column in SCAN_COLUMNS}
                    for row in (report.as_row() for report in reports)
                ],
            })
        rows = []
        for report in reports:
            row = report.as_row()
            rows.append([row[column] for column in SCAN_COLUMNS])
        return cls._csv(SCAN_COLUMNS, rows)

    @classmethod
    def render_mc(cls, results: list[McResult], fmt: str, metadata: dict) -> str:
        if fmt == OutputFormat.JSON:
            return cls._json({
                'metadata': metadata,
                'runs': [
                    {
                        **result.to_dict(),
                        'detection_frequency': result.detection_frequency,
                        'detection_stderr': result.detection_stderr,
                        'frequencies': {
                            channels: {'frequency': result.frequency(channels), 'stderr': result.stderr(channels)}
                            for channels in result.counts
                        },
                    }
                    for result in results
                ],
            })
        rows = []
        for result in results:
            for channels, count in result.counts.items():
                rows.append([
                    result.label, result.seed, metadata['seed_source'], result.n, result.n_conditioned,
                    channels, count, result.frequency(channels), result.stderr(channels),
                ])
        return cls._csv(MC_COLUMNS, rows)

    @classmethod
    def render_check(cls, results: list[SuiteResult], fmt: str, metadata: dict) -> str:
        passed = sum(1 for r in results if r.passed)
        if fmt == OutputFormat.JSON:
            return cls._json({
                'metadata': metadata,
                'passed': passed == len(results),
                'suites': [{'name': r.name, 'passed': r.passed, 'detail': r.detail} for r in results],
            })
        lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
        if passed == len(results):
            lines.append(f'All {len(results)} suites passed')
        else:
            lines.append(f'{len(results) - passed} of {len(results)} suites failed')
        return '\n'.join(lines) + '\n'
