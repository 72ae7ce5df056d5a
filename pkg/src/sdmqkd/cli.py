"""Command-line entry point: ``sdmqkd plan|simulate|analyze|scan|report``."""

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis.coincidence import delay_scan
from .analysis.io import read_report_json, write_histogram_csv, write_link_csv, write_report_json
from .analysis.metrics import LinkAnalyzer
from .config import RunConfig, load_config, load_reference_config, resolve_profile
from .exceptions import (
    ConfigError,
    ContractViolationError,
    DataParseError,
    DomainError,
    IncompleteReportError,
    InsufficientDataError,
    SdmQkdError,
)
from .sim.campaign import run_campaign
from .sim.scan import DIRECT_LINK, fit_slopes, scan_power
from .sim.timetags import channel_id, read_tags, write_tags
from .topology.build import expected_link_count, sources_required
from .topology.io import dump_topology, to_dot
from .topology.model import validate

log = logging.getLogger("sdmqkd")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3
TAG_SUFFIX = {"csv": ".csv", "bin": ".bin"}
MANIFEST = "manifest.json"


def _config(args):
    return load_reference_config() if args.config is None else load_config(args.config)


def _out_dir(args, cfg):
    out = Path(args.out or cfg.section("output").get("dir", "out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _format(args, cfg, default):
    return args.format or cfg.section("output").get("format", default)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def scaling_table(n_values=(4, 6, 8, 10, 12)):
    """Source and link counts of both schemes for each N."""
    rows = []
    for n in n_values:
        rows.append({
            "n_users": n,
            "cyclic_sources": sources_required(n, "cyclic"),
            "cyclic_links": expected_link_count(n, "cyclic"),
            "complete_sources": sources_required(n, "complete"),
            "complete_links": expected_link_count(n, "complete"),
            "all_pairs": n * (n - 1) // 2,
        })
    return rows


def cmd_plan(args):
    cfg = _config(args)
    topo = cfg.topology()
    out = _out_dir(args, cfg)
    dump_topology(topo, out / "topology.json")
    (out / "topology.dot").write_text(to_dot(topo))
    n = len(topo.users)
    k = topo.n_sources
    print(f"scheme={topo.scheme} users={n} sources={k} links={len(topo.links)}")
    for problem in validate(topo):
        print(f"warning: {problem}")
    if topo.scheme == "complete" and k > n // 2:
        print(f"warning: {k} sources required, more than the N/2 = {n // 2} of the cyclic wiring")
    print("N  cyclic(src,links)  complete(src,links)  all-pairs")
    for r in scaling_table():
        print(f"{r['n_users']:<3}{r['cyclic_sources']:>4}{r['cyclic_links']:>7}"
              f"{r['complete_sources']:>14}{r['complete_links']:>7}{r['all_pairs']:>12}")
    _write_json(out / "plan.json", {"sources": k, "links": [lk.name for lk in topo.links],
                                    "config_hash": cfg.hash, "scaling": scaling_table()})
    return EXIT_OK


def cmd_simulate(args):
    cfg = _config(args)
    fmt = _format(args, cfg, "bin")
    if fmt not in TAG_SUFFIX:
        raise ConfigError(f"time tags are written as csv or bin, not {fmt!r}")
    topo = cfg.topology()
    params = cfg.source_params(topo)
    states, clipped = cfg.states(topo, params, args.window_ps)
    for name in clipped:
        log.warning("visibility target for %s above the accidental ceiling; using v=1", name)
    sim = cfg.sim_config(seed=args.seed, threads=args.threads, window_ps=args.window_ps)
    out = _out_dir(args, cfg)
    runs = run_campaign(topo, params, states, sim, cfg.runs(topo))
    entries = []
    for tags in runs:
        path = out / f"tags_{tags.meta['run'].replace(':', '_')}{TAG_SUFFIX[fmt]}"
        write_tags(tags, path, fmt)
        meta = dict(tags.meta, channels=sorted(tags.channels))
        entries.append({"file": path.name, "sha256": _sha256(path), "meta": meta})
        print(f"{path.name}: {tags.n_tags()} tags on {len(tags.channels)} channels")
    manifest = {
        "config_hash": cfg.hash,
        "config": cfg.data,
        "seed": sim.seed,
        "window_ps": sim.window_ps,
        "clipped_visibility_targets": clipped,
        "runs": entries,
    }
    _write_json(out / MANIFEST, manifest)
    print(f"manifest: {out / MANIFEST} (config {cfg.hash[:12]}, seed {sim.seed})")
    return EXIT_OK


def _load_runs(manifest_path):
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise DataParseError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataParseError(f"manifest is not valid JSON: {exc.msg}", exc.lineno) from exc
    runs = []
    for entry in manifest["runs"]:
        path = manifest_path.parent / entry["file"]
        if not path.exists():
            raise DataParseError(f"tag file {path} not found")
        meta = dict(entry["meta"])
        runs.append(read_tags(path, meta, meta.pop("channels", None)))
    return manifest, runs


def cmd_analyze(args):
    manifest_path = Path(args.inputs[0]) if args.inputs else Path(args.out or "out") / MANIFEST
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST
    manifest, runs = _load_runs(manifest_path)
    cfg = _config(args) if args.config else RunConfig.from_dict(manifest["config"])
    topo = cfg.topology()
    a = cfg.section("analysis")
    window = args.window_ps or manifest.get("window_ps") or cfg.window_ps
    analyzer = LinkAnalyzer(
        window_ps=window,
        m=a.get("m", 1.1),
        sifted_convention=a.get("sifted_convention", "mean"),
        subtract_accidentals=a.get("subtract_accidentals", False),
        background_delay_ps=a.get("background_delay_ps", 20_000.0),
        threads=args.threads or 1,
    ).fit(runs, topo)
    report = analyzer.report_
    out = _out_dir(args, cfg)
    write_report_json(report, out / "report.json",
                      {"config_hash": manifest.get("config_hash"), "seed": manifest.get("seed")})
    write_link_csv(report, out / "links.csv")
    if topo.links and runs:
        lk = topo.link(args.scan_link) if args.scan_link else topo.links[0]
        index = {u.id: i for i, u in enumerate(topo.users)}
        ta = runs[0].channels.get(channel_id(index[lk.user_a], 0))
        tb = runs[0].channels.get(channel_id(index[lk.user_b], 0))
        if ta is not None and tb is not None:
            hist = delay_scan(ta, tb, 20_000.0, window, window)
            write_histogram_csv(hist, out / f"delay_scan_{lk.name}.csv")
    _print_report(report)
    return EXIT_OK


def _print_report(report):
    print(f"{'link':<6}{'kind':<10}{'C/s':>10}{'acc/s':>9}{'V_HV':>8}{'V_DA':>8}{'S':>7}{'F':>7}"
          f"{'sifted':>10}{'secure':>10}")
    for name, m in report.links.items():
        s = "" if m.s_param is None else f"{m.s_param:.3f}"
        f = "" if m.fidelity is None else f"{m.fidelity:.3f}"
        print(f"{name:<6}{m.kind.value:<10}{m.coincidence_rate:>10.0f}{m.accidental_rate:>9.0f}"
              f"{m.v_hv:>8.3f}{m.v_da:>8.3f}{s:>7}{f:>7}{m.sifted_rate:>10.0f}{m.secure_rate:>10.0f}")
    for name, rates in report.same_splitter.items():
        print(f"{name}: same-splitter floor per port pair " + ", ".join(f"{r:.0f}" for r in rates) + " /s")
    print(f"sifted total {report.sifted_total / 1e3:.1f} kbps, secure total {report.secure_total / 1e3:.1f} kbps")


def _parse_powers(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad power list {text!r}") from exc


def cmd_scan(args):
    cfg = _config(args)
    sc = cfg.section("scan")
    powers = _parse_powers(args.powers) if args.powers is not None else sc.get("powers", [])
    if not powers:
        raise ConfigError("power list is empty")
    names = args.profiles.split(",") if args.profiles else sc.get("profiles", [cfg.data["source"]["profile"]])
    topo = cfg.topology() if sc.get("network") else None
    window = args.window_ps or cfg.window_ps
    out = _out_dir(args, cfg)
    rows = []
    for spec in names:
        prof = resolve_profile(spec)
        these = scan_power(prof, powers, topo, window)
        rows += these
        if len(powers) > 1 and topo is None:
            c_slope, s_slope = fit_slopes(these, DIRECT_LINK)
            print(f"{prof.name}: coincidence slope {c_slope:.4f} MHz/mW, S slope {s_slope:+.4f} per mW")
    path = out / "scan.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("profile", "power_mw", "link", "coincidence_rate", "true_rate", "s_param"))
        for r in rows:
            w.writerow((r.profile, repr(r.power_mw), r.link, repr(r.coincidence_rate),
                        repr(r.true_rate), repr(r.s_param)))
    for r in rows:
        if r.link == DIRECT_LINK:
            print(f"{r.profile:<8} P={r.power_mw:<5g} C={r.coincidence_rate / 1e3:8.1f} kHz  S={r.s_param:.3f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args):
    path = Path(args.inputs[0]) if args.inputs else Path(args.out or "out") / "report.json"
    if path.is_dir():
        path = path / "report.json"
    try:
        report = read_report_json(path)
    except OSError as exc:
        raise DataParseError(f"cannot read report {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataParseError(f"malformed report {path}: {exc}") from exc
    if args.format == "csv":
        target = path.with_name("links.csv")
        write_link_csv(report, target)
        print(f"wrote {target}")
    elif args.format == "json":
        print(json.dumps({"sifted_total": report.sifted_total, "secure_total": report.secure_total,
                          "partition": {k: v.value for k, v in report.partition.items()}}, indent=2))
        return EXIT_OK
    _print_report(report)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "scan": cmd_scan,
    "report": cmd_report,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON (default: shipped paper_n6 fit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override sim.seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    common.add_argument("--window-ps", type=float, dest="window_ps", help="coincidence window, ps")
    common.add_argument("--format", choices=("csv", "json", "bin"), help="output format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sdmqkd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="build the topology and print source budgets")
    sub.add_parser("simulate", parents=[common], help="simulate time tags and write a manifest")
    p = sub.add_parser("analyze", parents=[common], help="compute link metrics from a manifest")
    p.add_argument("inputs", nargs="*", help="manifest file or directory")
    p.add_argument("--scan-link", help="link for the delay-scan CSV (default: first link)")
    p = sub.add_parser("scan", parents=[common], help="sweep pump power")
    p.add_argument("--powers", help="comma-separated pump powers, mW")
    p.add_argument("--profiles", help="comma-separated profile names")
    p = sub.add_parser("report", parents=[common], help="print or convert a saved report")
    p.add_argument("inputs", nargs="*", help="report.json or its directory")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.seed is not None and not (0 <= args.seed < 2 ** 64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataParseError, IncompleteReportError, InsufficientDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ContractViolationError, SdmQkdError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
