"""y00lab command line: metrics, simulate, attack, sweep."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (MC_BLOCK, AttackKind, AttackReport, KeyReceiver, KeySpaceTooLarge, binomial_ci95,
                      eve_data_error, eve_key_receiver_error, gamma_masking, heterodyne_key_detection,
                      heterodyne_sample, nearest_grid_index, simulate_exhaustive_kpa)
from .keystream import KeystreamKind
from .metrics import METRIC_KEYS, metrics_report
from .protocol import bob_ber_analytic, phase_index, run_session
from .scenario import GridTooLarge, Scenario, ScenarioError, load_scenario, load_sweep
from . import seeding

EXIT_OK, EXIT_CONFIG, EXIT_REFUSED = 0, 2, 3

log = logging.getLogger("y00lab")


def _provenance_line(scn: Scenario) -> str:
    return f"y00lab {__version__} scenario_sha256={scn.source_hash}"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    log.info("wrote %s", path)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def cmd_metrics(scn: Scenario, out_dir: Path, threads: int = 1) -> dict:
    report = metrics_report(scn.params, scn.keylen, scn.channel, snr=scn.snr)
    doc = report.to_dict()
    doc["provenance"] = scn.provenance(__version__)
    _write(out_dir / "metrics.json", _dump(doc))
    for line in report.summary_lines():
        print(line)
    return doc


def cmd_simulate(scn: Scenario, out_dir: Path, threads: int = 1) -> dict:
    tr = run_session(scn.key(), scn.plaintext_bits(), scn.params, scn.channel, scn.channel_rng())
    _write(out_dir / "transcript.csv", tr.to_csv(_provenance_line(scn)))
    n = len(tr)
    errors = tr.bob_errors
    summary = {
        "slots": n,
        "bob_errors": errors,
        "bob_ber_empirical": errors / n if n else 0.0,
        "ci95": list(binomial_ci95(errors, n)) if n else [0.0, 0.0],
        "bob_ber_analytic": bob_ber_analytic(scn.params.alpha_mag, scn.channel),
        "channel": scn.channel.value,
        "params": scn.params.snapshot(),
        "provenance": scn.provenance(__version__),
    }
    _write(out_dir / "simulate_summary.json", _dump(summary))
    print(f"slots={n} bob_errors={errors} bob_ber_empirical={summary['bob_ber_empirical']:.6g} "
          f"analytic={summary['bob_ber_analytic']:.6g}")
    return summary


def _data_attack(scn: Scenario, threads: int) -> AttackReport:
    """Eve's heterodyne data decision: label of the nearest constellation point."""
    p = scn.params
    label = np.zeros(2 * p.M, dtype=np.int64)
    label[phase_index(1, np.arange(1, p.M + 1), p.M)] = 1
    hits = 0
    for idx, start, stop in seeding.blocks(scn.trials, MC_BLOCK):
        rng = seeding.rng_for(scn.seed, idx, "data-attack")
        n = stop - start
        m = rng.integers(1, p.M + 1, size=n)
        x = rng.integers(0, 2, size=n)
        osk = rng.integers(0, 2, size=n) if p.osk_enabled else np.zeros(n, dtype=np.int64)
        j = phase_index(x ^ osk, m, p.M)
        z = heterodyne_sample(p.alpha_mag * np.exp(1j * j * np.pi / p.M), rng)
        hits += int(np.count_nonzero(label[nearest_grid_index(z, p.M)] != x))
    err = hits / scn.trials
    return AttackReport(AttackKind.COA_DATA, eve_data_error(p), err, scn.trials,
                        binomial_ci95(hits, scn.trials), p.snapshot(),
                        {"note": "analytic = optimal binary measurement; empirical = heterodyne nearest-point"})


def _key_attack(scn: Scenario, threads: int) -> AttackReport:
    p = scn.params
    gamma = gamma_masking(p)
    pd, hits = heterodyne_key_detection(p, scn.view, scn.trials, scn.seed, threads)
    kind = AttackKind.KPA_KEY if scn.view == "kpa" else AttackKind.COA_KEY
    srm_pd = 1.0 - eve_key_receiver_error(p, KeyReceiver.SRM, scn.view)
    return AttackReport(kind, 1.0 / gamma, pd, scn.trials, binomial_ci95(hits, scn.trials),
                        p.snapshot() | {"gamma": gamma, "view": scn.view},
                        {"srm_detection": srm_pd})


def cmd_attack(scn: Scenario, out_dir: Path, threads: int = 1) -> dict:
    if scn.attack == "exhaustive":
        if scn.params.basis_kind != KeystreamKind.LFSR or (
                scn.params.osk_enabled and scn.params.osk_kind != KeystreamKind.LFSR):
            raise ScenarioError("protocol.basis_keystream", "exhaustive search needs lfsr keystreams")
        report = simulate_exhaustive_kpa(scn.params, scn.keylen, list(scn.known_plaintext), scn.trials,
                                         scn.seed, threads, window=scn.window)
    elif scn.attack == "key":
        report = _key_attack(scn, threads)
    else:
        report = _data_attack(scn, threads)
    doc = report.to_dict()
    doc["provenance"] = scn.provenance(__version__)
    _write(out_dir / "attack.json", _dump(doc))
    buf = io.StringIO()
    buf.write(f"# {_provenance_line(scn)}\n")
    row = report.csv_row()
    w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
    w.writeheader()
    w.writerow(row)
    _write(out_dir / "attack.csv", buf.getvalue())
    print(f"{doc['kind']}: analytic={report.analytic:.6g} empirical={report.empirical:.6g} trials={report.trials}")
    return doc


def _sweep_row(axes: dict, scn: Scenario) -> dict:
    rep = metrics_report(scn.params, scn.keylen, scn.channel, snr=scn.snr).to_dict()["metrics"]
    return {**{k: axes[k] for k in axes}, **rep}


def _fmt(v) -> str:
    if v is None:
        return "inf"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _plot(rows: list[dict], axis: str, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "y00lab"
    xs = [r[axis] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(xs, [r["chi_H_kpa"] for r in rows], "o-", label="KPA")
    ax1.plot(xs, [r["chi_H_coa"] for r in rows], "s-", label="COA")
    ax1.set_xlabel(axis)
    ax1.set_ylabel("Holevo information [bits/slot]")
    ax1.legend()
    ax2.plot(xs, [r["n_q1_lower"] if r["n_q1_lower"] is not None else float("nan") for r in rows], "o-", label="KPA")
    ax2.plot(xs, [r["n_q0_lower"] if r["n_q0_lower"] is not None else float("nan") for r in rows], "s-", label="COA")
    ax2.set_xlabel(axis)
    ax2.set_ylabel("unicity lower bound [slots]")
    ax2.legend()
    if axis == "M":
        ax1.set_xscale("log", base=2)
        ax2.set_xscale("log", base=2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_sweep(spec, out_dir: Path, threads: int = 1) -> list[dict]:
    points = list(spec.points())
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda pt: _sweep_row(*pt), points))
    else:
        rows = [_sweep_row(*pt) for pt in points]
    cols = list(spec.axes) + list(METRIC_KEYS)
    buf = io.StringIO()
    buf.write(f"# {_provenance_line(spec.base)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    table = spec.table if spec.table.is_absolute() else out_dir / spec.table
    _write(table, buf.getvalue())
    if spec.svg:
        axis = list(spec.axes)[0]
        _plot(rows, axis, table.with_suffix(".svg"))
    print(f"{len(rows)} rows -> {table}")
    return rows


COMMANDS = {"metrics": cmd_metrics, "simulate": cmd_simulate, "attack": cmd_attack, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("--trials", type=int, default=None, help="override run.trials")
    common.add_argument("--out-dir", type=Path, default=Path("out"))
    common.add_argument("--threads", type=int, default=1)
    parser = argparse.ArgumentParser(prog="y00lab", description=__doc__, parents=[common])
    parser.add_argument("--version", action="version", version=f"y00lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        p.add_argument("scenario", type=Path, help="scenario file" if name != "sweep" else "sweep file")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {"seed": args.seed, "trials": args.trials}
    try:
        if args.command == "sweep":
            target = load_sweep(args.scenario, overrides)
        else:
            target = load_scenario(args.scenario, overrides)
        COMMANDS[args.command](target, args.out_dir, args.threads)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeySpaceTooLarge, GridTooLarge) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
