"""Report and histogram file formats."""

import csv
import json
import math

from .metrics import NetworkReport

LINK_CSV_COLUMNS = ("link", "coinc_rate", "acc_rate", "v_hv", "v_da", "qber", "s", "fidelity", "sifted", "secure")


def _cell(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if not isinstance(x, str) else x


def write_link_csv(report, path):
    """One row per link; ``secure`` is the clamped (reporting) rate."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LINK_CSV_COLUMNS)
        for name, m in report.links.items():
            w.writerow([name] + [_cell(v) for v in (
                m.coincidence_rate, m.accidental_rate, m.v_hv, m.v_da, m.qber,
                m.s_param, m.fidelity, m.sifted_rate, m.secure_rate)])


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_report_json(report, path, extra=None):
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(_json_safe(doc), fh, indent=2, sort_keys=True)


def read_report_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    for m in doc["links"].values():
        if m.get("accidental_rate") is None:
            m["accidental_rate"] = float("nan")
    return NetworkReport.from_dict(doc)


def write_histogram_csv(hist, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("delay_ps", "counts"))
        for d, c in hist.to_rows():
            w.writerow((repr(d), c))
