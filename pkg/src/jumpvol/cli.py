"""Batch pipeline driver.

Subcommands ``simulate``, ``measures``, ``estimate`` and ``classify``
communicate through documented CSV/JSON files; identical inputs and
seeds reproduce outputs byte for byte.  Exit codes: 0 ok, 1
computation failure, 2 I/O or configuration failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from . import ajm, classify, diurnal, measures, synth
from .fit import FitOptions, fit as fit_model
from .ingest import (
    IngestError,
    SessionConfig,
    compute_returns,
    load_announcements,
    load_config_file,
    load_price_panel,
    write_announcements,
    write_price_panel,
)
from .ingest import AnnouncementEvent

__all__ = ["main"]


class ConfigError(ValueError):
    """Bad configuration or command-line input."""


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return load_config_file(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc


def _session_from(cfg: dict) -> SessionConfig:
    try:
        return SessionConfig.from_mapping(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad session geometry: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_overnight_csv(days, overnight, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "overnight"])
        for d, r in zip(days, overnight):
            w.writerow([d.isoformat(), repr(float(r))])


def _read_overnight_csv(path: Path):
    days, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "overnight"]:
            raise IngestError(f"unexpected overnight header {header!r} in {path}")
        for row in reader:
            days.append(date.fromisoformat(row[0]))
            values.append(float(row[1]))
    return days, np.array(values)


# --- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    session = _session_from(cfg)
    days = args.days if args.days is not None else cfg.get("days")
    if days is None:
        raise ConfigError("simulate needs --days or a 'days' config key")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    spec = synth.SynthSpec(
        days=int(days),
        sigma=float(cfg.get("sigma", 1.0)),
        jump_times=[tuple(map(int, c)) for c in cfg.get("jump_times", [])],
        jump_size=float(cfg.get("jump_size", 10.0)),
        diurnal=np.asarray(cfg["diurnal"], dtype=float) if "diurnal" in cfg else None,
        announcement_bins=[tuple(map(int, c)) for c in cfg.get("announcement_bins", [])],
        burst_size=float(cfg["burst_size"]) if "burst_size" in cfg else None,
        overnight_sigma=float(cfg.get("overnight_sigma", 0.0)),
        seed=seed,
        start_day=date.fromisoformat(cfg["start"]) if "start" in cfg else date(2015, 1, 5),
    )
    try:
        spec.validate(session)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    # A burst is planted in the bin whose close carries the announcement
    # timestamp, so the mapped bin (iota) is the one right after it and
    # the expected-jump path can react; the last bin has no successor.
    for t, b in spec.announcement_bins:
        if b + 2 > session.n_bins:
            raise ConfigError(
                f"announcement burst at bin {b} has no follow-up bin to map to")

    panel, mask = synth.gen_paths(spec, session)
    out = _out_dir(args)
    write_price_panel(panel, out / "prices.csv", session)
    with (out / "jump_mask.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "bin"])
        for t, i in np.argwhere(mask):
            w.writerow([panel.days[t].isoformat(), i + 1])
    if spec.announcement_bins:
        rng = np.random.default_rng(seed + 1)
        events = []
        for t, b in spec.announcement_bins:
            minutes = (b + 1) * session.bin_minutes
            stamp = (datetime.combine(panel.days[t], session.open_time)
                     + timedelta(minutes=minutes)).time()
            events.append(AnnouncementEvent(date=panel.days[t], time=stamp,
                                            forward_guidance=bool(rng.random() < 0.5)))
        events.sort(key=lambda e: (e.date, e.time))
        write_announcements(events, out / "announcements.csv")
    _write_json({"days": spec.days, "seed": seed, "sigma": spec.sigma,
                 "planted_jumps": int(mask.sum())}, out / "sim_meta.json")
    print(f"simulate: wrote {panel.n_days} days, {int(mask.sum())} planted jumps -> {out}")
    return 0


# --- measures ---------------------------------------------------------------

def cmd_measures(args) -> int:
    cfg = _load_config(args.config)
    if args.q is not None:
        cfg["q"] = args.q
    session = _session_from(cfg)
    if args.prices is None:
        raise ConfigError("measures needs --prices")
    panel = load_price_panel(args.prices, session, ticker=args.ticker or "")
    returns = compute_returns(panel)
    raw = measures.build_bin_measures(returns, m=session.m, q=session.q,
                                      days=panel.days, ticker=panel.ticker)
    profile = diurnal.estimate_profile(raw, source="bv")
    adjusted = diurnal.apply_profile(raw, profile)

    out = _out_dir(args)
    measures.write_measures_csv(raw, out / "measures.csv")
    measures.write_measures_csv(adjusted, out / "measures_adjusted.csv")
    diurnal.write_profile_csv(profile, out / "profile.csv")
    _write_overnight_csv(panel.days, returns.overnight, out / "overnight.csv")
    try:
        diag = diurnal.bin_diagnostics(adjusted)
    except ValueError as exc:
        print(f"measures: diagnostics skipped ({exc})", file=sys.stderr)
    else:
        with (out / "diagnostics.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin", "mean_rv", "mean_bv", "rho_next_rv", "rho_next_bv"])
            for i in range(adjusted.n_bins):
                row = [i + 1, repr(float(diag.rv_means[i])), repr(float(diag.bv_means[i]))]
                if i < adjusted.n_bins - 1:
                    row += [repr(float(diag.rv_adjacent_corr[i])),
                            repr(float(diag.bv_adjacent_corr[i]))]
                else:
                    row += ["", ""]
                w.writerow(row)
    _write_json({
        "ticker": panel.ticker, "m": session.m, "q": session.q,
        "n_days": raw.n_days, "n_bins": raw.n_bins,
        "fill_count": panel.fill_count,
        "rejected_days": [[d.isoformat(), why] for d, why in panel.rejected_days],
        "session": {"open": session.open_time.strftime("%H:%M"),
                    "close": session.close_time.strftime("%H:%M"),
                    "elementary_minutes": session.elementary_minutes,
                    "bin_minutes": session.bin_minutes},
        "significant_jump_bins": int(raw.jump_flags.sum()),
    }, out / "meta.json")
    print(f"measures: {raw.n_days} days x {raw.n_bins} bins, "
          f"{int(raw.jump_flags.sum())} significant jumps -> {out}")
    return 0


# --- estimate ---------------------------------------------------------------

def _load_measures_dir(measures_dir: Path):
    meta_path = measures_dir / "meta.json"
    if not meta_path.exists():
        raise IngestError(f"{measures_dir} has no meta.json (run `measures` first)")
    meta = json.loads(meta_path.read_text())
    panel = measures.read_measures_csv(measures_dir / "measures_adjusted.csv",
                                       m=int(meta["m"]), q=float(meta["q"]),
                                       ticker=meta.get("ticker", ""))
    days, overnight = _read_overnight_csv(measures_dir / "overnight.csv")
    if days != panel.days:
        raise IngestError("overnight.csv and measures_adjusted.csv disagree on days")
    return panel, overnight, meta


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    if args.measures is None and args.prices is None:
        raise ConfigError("estimate needs --measures DIR or --prices FILE")
    if args.measures is not None:
        panel, overnight, meta = _load_measures_dir(Path(args.measures))
    else:
        session = _session_from(cfg)
        price_panel = load_price_panel(args.prices, session)
        returns = compute_returns(price_panel)
        raw = measures.build_bin_measures(returns, m=session.m, q=session.q,
                                          days=price_panel.days,
                                          ticker=price_panel.ticker)
        panel = diurnal.apply_profile(raw, diurnal.estimate_profile(raw))
        overnight = returns.overnight
        meta = {"ticker": panel.ticker, "m": session.m, "q": session.q,
                "session": {"open": session.open_time.strftime("%H:%M"),
                            "close": session.close_time.strftime("%H:%M"),
                            "elementary_minutes": session.elementary_minutes,
                            "bin_minutes": session.bin_minutes}}
    spec = args.spec or cfg.get("spec", "unrestricted")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    options = FitOptions(seed=seed,
                         n_starts=int(cfg.get("n_starts", 5)),
                         maxiter=int(cfg.get("maxiter", 500)))
    result = fit_model(panel, overnight, spec=spec, options=options)

    out = _out_dir(args)
    names = result.param_names
    report = {
        "ticker": panel.ticker,
        "spec": result.spec,
        "coefficients": {n: float(getattr(result.params, n)) for n in names},
        "robust_se": {n: float(result.se_robust[i]) for i, n in enumerate(names)},
        "naive_se": {n: float(result.se_naive[i]) for i, n in enumerate(names)},
        "loglik": result.loglik,
        "persistence": result.persistence,
        "converged": result.converged,
        "iterations": result.iterations,
        "best_start": result.best_start,
        "n_zero_excluded": result.n_zero_excluded,
        "kappa_negative_count": result.state.kappa_negative_count,
        "ljung_box": [{"lag": r.lag, "statistic": r.statistic, "p_value": r.p_value}
                      for r in result.diagnostics],
        "warnings": result.warnings,
        "seed": seed,
        "n_days": panel.n_days,
        "n_bins": panel.n_bins,
    }
    _write_json(report, out / "fit.json")
    with (out / "fit_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ticker", "spec", "quantity", "value"])
        tick = panel.ticker
        for n in names:
            w.writerow([tick, spec, n, repr(float(getattr(result.params, n)))])
            w.writerow([tick, spec, f"se_{n}", repr(float(result.se_of(n)))])
        w.writerow([tick, spec, "loglik", repr(result.loglik)])
        w.writerow([tick, spec, "persistence", repr(result.persistence)])
        for r in result.diagnostics:
            w.writerow([tick, spec, f"lb{r.lag}_pvalue", repr(r.p_value)])
        w.writerow([tick, spec, "converged", int(result.converged)])
    ajm.write_state_csv(result.state, out / "state.csv")
    # the adjusted panel rides along so a run directory is self-contained
    measures.write_measures_csv(panel, out / "panel.csv")
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"estimate[{spec}]: loglik={result.loglik:.3f} "
          f"persistence={result.persistence:.4f} converged={result.converged} -> {out}")
    return 0 if result.converged else 1


# --- classify ---------------------------------------------------------------

def cmd_classify(args) -> int:
    cfg = _load_config(args.config)
    if args.announcements is None:
        raise ConfigError("classify needs --announcements FILE")
    if not args.run:
        raise ConfigError("classify needs at least one --run DIR")
    events = load_announcements(args.announcements)
    out = _out_dir(args)

    tables = []
    for run in args.run:
        run = Path(run)
        fit_path = run / "fit.json"
        if not fit_path.exists():
            raise IngestError(f"{run} has no fit.json (run `estimate` first)")
        report = json.loads(fit_path.read_text())
        meta = json.loads((run / "meta.json").read_text())
        session = _session_from(dict(meta.get("session", {}), q=meta.get("q", 0.55)))
        panel = measures.read_measures_csv(run / "panel.csv", m=int(meta["m"]),
                                           q=float(meta["q"]),
                                           ticker=report.get("ticker", run.name))
        state = ajm.read_state_csv(run / "state.csv")
        table = classify.classify_announcements(state, panel, events, session,
                                                ticker=report.get("ticker", run.name))
        tables.append(table)
        ticker = table.ticker or run.name
        classify.write_classification_csv(table, out / f"classification_{ticker}.csv")
        classify.write_counts_csv(table, out / f"counts_{ticker}.csv")
        for event, reason in table.unmatched:
            print(f"classify[{ticker}]: unmatched {event.event_id}: {reason}",
                  file=sys.stderr)

    if all(t.n_matched == 0 for t in tables):
        print("classify: no announcements matched the trading grid", file=sys.stderr)
        return 0
    if len(tables) >= 2:
        result = classify.agreement_matrix(tables, series="kappa")
        classify.write_agreement_csv(result, out / "agreement.csv")
        surprise = classify.agreement_matrix(tables, series="surprise")
        classify.write_agreement_csv(surprise, out / "agreement_surprise.csv")
    print(f"classify: {len(tables)} ticker(s), "
          f"{tables[0].n_matched} matched announcements -> {out}")
    return 0


# --- driver -----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumpvol",
        description="Intraday volatility measures, jump detection, jump-MEM "
                    "estimation and announcement classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or TOML configuration file")
        p.add_argument("--seed", type=int, help="seed overriding the config")
        p.add_argument("--out", required=True, help="output directory")

    p_sim = sub.add_parser("simulate", help="generate synthetic prices with ground truth")
    common(p_sim)
    p_sim.add_argument("--days", type=int, help="number of trading days")
    p_sim.set_defaults(func=cmd_simulate)

    p_me = sub.add_parser("measures", help="prices -> per-bin measures and diurnal adjustment")
    common(p_me)
    p_me.add_argument("--prices", help="timestamp,price CSV")
    p_me.add_argument("--ticker", help="ticker label for the outputs")
    p_me.add_argument("--q", type=float, help="significant-jump quantile level")
    p_me.set_defaults(func=cmd_measures)

    p_es = sub.add_parser("estimate", help="fit the jump MEM on adjusted measures")
    common(p_es)
    p_es.add_argument("--measures", help="directory produced by `measures`")
    p_es.add_argument("--prices", help="raw price CSV (runs the measures stage inline)")
    p_es.add_argument("--spec", choices=["restricted", "unrestricted"])
    p_es.set_defaults(func=cmd_estimate)

    p_cl = sub.add_parser("classify", help="label announcements and compare tickers")
    common(p_cl)
    p_cl.add_argument("--announcements", help="date,time,forward_guidance CSV")
    p_cl.add_argument("--run", action="append", default=[],
                      help="estimate output directory (repeatable)")
    p_cl.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestError, FileNotFoundError, NotADirectoryError,
            PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # computation failure
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
