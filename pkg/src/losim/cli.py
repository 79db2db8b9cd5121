"""Command-line entry point: one subcommand per experiment.

    losim [--config FILE] [--seed S] [--jobs J] [--out DIR] EXPERIMENT

Each run writes ``<out>/<experiment>.csv`` and ``<out>/<experiment>.json``.
Files are written under a ``.partial`` suffix and renamed once complete, so
an interrupted or failed run leaves only ``.partial`` files behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from . import sim
from .config import EXPERIMENTS, ConfigError, RunConfig, from_dict, override, parse_config
from .lo_arch import architecture_gamma
from .power_model import sweep_power

OUT_ENV = "LOSIM_OUT_DIR"

Result = Tuple[List[dict], dict, str]


def _power_sweep(cfg: RunConfig) -> Result:
    curve = sweep_power(cfg.power_params())
    best = curve.argmin
    rows = [{
        "N": b.N, "P_load_W": b.P_load_W, "P_distr_W": b.P_distr_W, "P_pll_W": b.P_pll_W,
        "P_vco_W": b.P_vco_W, "total_W": b.total_W, "argmin": int(b.N == best),
    } for b in curve.rows]
    total = curve.total_W
    summary = {
        "argmin_N": best, "min_total_W": curve.min_W,
        "ccg_over_min_db": 10 * math.log10(total[-1] / curve.min_W),
        "lcg_over_min_db": 10 * math.log10(total[0] / curve.min_W),
    }
    return rows, summary, f"argmin N={best}, min {curve.min_W * 1e3:.1f} mW"


def _link_budget(cfg: RunConfig) -> Result:
    rows = []
    for name, budget in cfg.budgets().items():
        rows.append({"column": name, **budget.rows()})
    tx = ", ".join(f"{r['column']} {r['ue_tx_power_dbm']:.1f} dBm" for r in rows)
    return rows, {}, f"UE Tx power: {tx}"


def _pll_bw_sweep(cfg: RunConfig) -> Result:
    s = sim.sweep_pll_bandwidth(cfg.sim_config(), cfg.sweep.pll_bw_hz, cfg.jobs)
    best = s.best
    return s.rows, {"best_pll_bw_hz": best["pll_bw_hz"], "best_sinr_db": best["sinr_db"]}, \
        f"best PLL bandwidth {best['pll_bw_hz']:g} Hz at {best['sinr_db']:.2f} dB"


def _user_sweep(cfg: RunConfig) -> Result:
    sc = cfg.sim_config()
    s = sim.sweep_users(sc, cfg.sweep.K, cfg.jobs)
    K, y = s.column("K"), s.column("sinr_db")
    arch = sc.arch
    summary: Dict[str, object] = {"N": arch.N}
    digest = f"SINR {y[0]:.2f} dB at K={K[0]}, {y[-1]:.2f} dB at K={K[-1]}"
    if 1 in K and len(K) > 1:
        if arch.N == arch.M or arch.N == 1:
            fit = sim.fit_sinr_model(K, y, architecture_gamma(arch))
            summary.update(gamma=architecture_gamma(arch), alpha=fit.value)
            digest += "; alpha undefined (gamma=0)" if fit.value is None else f"; alpha={fit.value:.3f}"
        elif cfg.sweep.alpha is not None:
            fit = sim.fit_gamma(K, y, cfg.sweep.alpha)
            summary.update(alpha=cfg.sweep.alpha, gamma=fit.value)
            digest += f"; gamma={fit.value:.3f}"
        else:
            fit = None
        if fit is not None:
            summary.update(n_p=fit.n_p, model_sinr_db=list(fit.predicted_db),
                           residual_db=list(fit.residual_db))
            for row, pred in zip(s.rows, fit.predicted_db):
                row["model_sinr_db"] = float(pred)
    return s.rows, summary, digest


def _subarray_sweep(cfg: RunConfig) -> Result:
    s = sim.sweep_subarray(cfg.sim_config(), cfg.sweep.N, cfg.sweep.separation_deg, cfg.jobs)
    best = s.best
    return s.rows, {}, f"best N={best['N']} at {best['sinr_db']:.2f} dB"


def _ber_curve(cfg: RunConfig) -> Result:
    policy = {k: tuple(tuple(r) for r in v) for k, v in cfg.sweep.cr_policy.items()}
    s = sim.ber_curve(cfg.sim_config(), cfg.sweep.thermal_snr_db, cfg.sweep.constellations,
                      policy, cfg.jobs)
    return s.rows, {}, f"{len(s.rows)} BER points"


def _single_run(cfg: RunConfig) -> Result:
    m = sim.run_uplink(cfg.sim_config(), cfg.jobs)
    row = m.row()
    for k, v in enumerate(m.per_user_sinr_db):
        row[f"sinr_db_user{k}"] = v
    return [row], {}, f"SINR {m.sinr_db:.2f} +/- {m.sinr_ci_db:.2f} dB, BER {m.ber:.3e}"


RUNNERS: Dict[str, Callable[[RunConfig], Result]] = {
    "power-sweep": _power_sweep,
    "link-budget": _link_budget,
    "pll-bw-sweep": _pll_bw_sweep,
    "user-sweep": _user_sweep,
    "subarray-sweep": _subarray_sweep,
    "ber-curve": _ber_curve,
    "single-run": _single_run,
}


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def csv_text(rows: List[dict], config_hash: str, seed: int) -> str:
    """RFC 4180 CSV; floats use repr so they parse back to the same value."""
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    cols += ["config_hash", "seed"]
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for r in rows:
        full = {**r, "config_hash": config_hash, "seed": seed}
        w.writerow([_cell(full.get(c, "")) for c in cols])
    return buf.getvalue()


def read_csv(path) -> List[dict]:
    """Inverse of ``csv_text``: numeric cells come back as int or float."""
    def parse(v: str):
        for t in (int, float):
            try:
                return t(v)
            except ValueError:
                pass
        return v
    with open(path, newline="") as fh:
        return [{k: parse(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return repr(o)


def _write(path: Path, text: str):
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, newline="")
    return tmp


def run(cfg: RunConfig, out_dir=None) -> int:
    out = Path(out_dir or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.experiment
    h = cfg.content_hash()
    summary = {"experiment": name, "run_id": h, "config_hash": h, "seed": cfg.seed,
               "config": cfg.to_dict()}
    csv_path, json_path = out / f"{name}.csv", out / f"{name}.json"
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rows, extra, digest = RUNNERS[name](cfg)
    except Exception as exc:
        summary.update(complete=False, error=f"{type(exc).__name__}: {exc}")
        _write(json_path, json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
        print(f"{name}: FAILED ({exc}); partial summary in {json_path}.partial", file=sys.stderr)
        return 1
    summary.update(extra, complete=True, n_rows=len(rows))
    tmp_csv = _write(csv_path, csv_text(rows, h, cfg.seed))
    tmp_json = _write(json_path, json.dumps(summary, indent=2, sort_keys=True,
                                            default=_json_default) + "\n")
    os.replace(tmp_csv, csv_path)
    os.replace(tmp_json, json_path)
    print(f"{name} [{h} seed={cfg.seed}]: {digest} -> {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="losim", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--jobs", type=int, help="worker processes for Monte Carlo trials")
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and config)")
    p.add_argument("experiment", choices=EXPERIMENTS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else from_dict({})
        cfg = override(cfg, experiment=args.experiment, seed=args.seed, jobs=args.jobs)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or os.environ.get(OUT_ENV) or cfg.out
    return run(cfg, out)


if __name__ == "__main__":
    sys.exit(main())
