"""Command-line interface: train, forecast, evaluate, diagnose, synth.

Exit codes: 0 success, 1 validation error, 2 partial success (some series
skipped), 3 numeric failure during training or forecasting.
"""

import argparse
import csv
import dataclasses
import glob
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import date, datetime, timedelta

import numpy as np

from .autodiff import NumericError
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import (
    ABLATIONS,
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_config,
)
from .errors import ValidationError
from .evaluation import compute_metrics, mean_report, naive_range
from .forecasting import forecast_ensemble, replay_states
from .synthetic import generate_fleet
from .timeseries import (
    HOURS_PER_DAY,
    HOURS_PER_WEEK,
    daily_pattern_distance,
    format_timestamp,
    harmonic_contributions,
    load_series_csv,
    parse_timestamp,
    variation_profile,
    write_series_csv,
)
from .training import train_member

FORECAST_HEADER = ["series_id", "timestamp", "point", "lower", "upper"]


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise ValidationError(message)


def _fmt(value: float) -> str:
    return repr(float(value))


def _parse_date(text: str) -> date:
    try:
        return datetime.strptime(text, "%Y-%m-%d").date()
    except ValueError as exc:
        raise ValidationError(f"bad date {text!r}, expected YYYY-MM-DD") from exc


def _parse_seeds(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise ValidationError(f"bad seed list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loadcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic hourly fleet as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--series", type=int, default=4)
    p.add_argument("--weeks", type=int, default=104)
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--start", default="2024-01-01")

    p = sub.add_parser("train", help="train an ensemble and write checkpoints")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seeds")
    p.add_argument("--ablation", choices=sorted(ABLATIONS))
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--jobs", type=int, default=0)

    p = sub.add_parser("forecast", help="roll day-ahead forecasts over a date range")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoints")
    p.add_argument("--from", dest="date_from", required=True)
    p.add_argument("--to", dest="date_to", required=True)
    p.add_argument("--naive", action="store_true")

    p = sub.add_parser("evaluate", help="score a forecast CSV against actuals")
    p.add_argument("--forecast", required=True)
    p.add_argument("--actuals", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("diagnose", help="per-series variability statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    return parser


# -- synth --------------------------------------------------------------------


def cmd_synth(args) -> int:
    start = _parse_date(args.start)
    fleet = generate_fleet(
        n_series=args.series,
        n_weeks=args.weeks,
        noise=args.noise,
        seed=args.seed,
        start=datetime(start.year, start.month, start.day),
    )
    write_series_csv(args.out, fleet)
    print(f"wrote {len(fleet)} series x {args.weeks} weeks to {args.out}")
    return 0


# -- train --------------------------------------------------------------------


def _train_worker(work) -> tuple:
    data_path, cfg_dict, seed, out_dir = work
    cfg = config_from_dict(cfg_dict)
    resolved = cfg.resolved()
    series_list = load_series_csv(data_path)
    member = train_member(series_list, resolved.network, resolved.schedule, resolved.loss, seed)
    es_states = {}
    meta = {}
    for series in series_list:
        state = replay_states(member.net, series, resolved.schedule)
        if state is not None:
            es_states[series.series_id] = state
        meta[series.series_id] = {
            "start": format_timestamp(series.start),
            "n_hours": len(series),
        }
    ckpt = Checkpoint(
        config=cfg,
        seed=seed,
        net=member.net,
        es_states=es_states,
        series_meta=meta,
        rng_state=member.rng_state,
    )
    save_checkpoint(
        ckpt,
        os.path.join(out_dir, f"member_{seed}.bin"),
        os.path.join(out_dir, f"member_{seed}.json"),
    )
    reports = [dataclasses.asdict(r) for r in member.reports]
    return seed, reports, member.excluded


def cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seeds:
        cfg = dataclasses.replace(cfg, seeds=_parse_seeds(args.seeds))
    if args.ablation:
        cfg = dataclasses.replace(cfg, ablation=args.ablation)
    if args.desk_scale:
        cfg = dataclasses.replace(cfg, desk_scale=True)
    cfg.validate()
    cfg.resolved()  # reject bad combinations before any compute
    load_series_csv(args.data)  # fail early on bad data
    os.makedirs(args.out, exist_ok=True)
    jobs = args.jobs if args.jobs > 0 else min(len(cfg.seeds), os.cpu_count() or 1)
    work = [(args.data, config_to_dict(cfg), seed, args.out) for seed in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_worker, work))
    else:
        results = [_train_worker(item) for item in work]
    log = {"members": {}}
    for seed, reports, excluded in sorted(results):
        log["members"][str(seed)] = {"epochs": reports, "excluded_series": excluded}
        last = reports[-1]
        print(
            f"member seed={seed}: {len(reports)} epochs, "
            f"final loss {last['mean_loss']:.5f} ({last['updates']} updates/epoch)"
        )
        if excluded:
            print(f"  excluded (too short): {', '.join(excluded)}", file=sys.stderr)
    with open(os.path.join(args.out, "training_log.json"), "w", encoding="utf-8") as fh:
        json.dump(log, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {len(results)} checkpoints to {args.out}")
    return 0


# -- forecast -----------------------------------------------------------------


def _load_members(ckpt_dir):
    sidecars = sorted(glob.glob(os.path.join(ckpt_dir, "member_*.json")))
    if not sidecars:
        raise ValidationError(f"no member_*.json checkpoints under {ckpt_dir}")
    members = []
    for sidecar in sidecars:
        with open(sidecar, "r", encoding="utf-8") as fh:
            binary = json.load(fh).get("binary")
        members.append(load_checkpoint(os.path.join(ckpt_dir, binary), sidecar))
    first = config_to_dict(members[0].config)
    for member in members[1:]:
        if config_to_dict(member.config) != first:
            raise ValidationError("checkpoints in the directory disagree on config")
    return members


def cmd_forecast(args) -> int:
    date_from = _parse_date(args.date_from)
    date_to = _parse_date(args.date_to)
    if date_to < date_from:
        raise ValidationError("--to must not be before --from")
    n_days = (date_to - date_from).days + 1
    series_list = load_series_csv(args.data)
    if args.naive:
        members = None
        schedule = None
    else:
        if not args.checkpoints:
            raise ValidationError("--checkpoints is required unless --naive is given")
        members = _load_members(args.checkpoints)
        schedule = members[0].config.resolved().schedule
    rows = []
    skipped = []
    for series in series_list:
        if series.start.hour != 0:
            skipped.append(f"{series.series_id}: series does not start at midnight")
            continue
        first_day = (date_from - series.start.date()).days
        try:
            if first_day < 0:
                raise ValidationError("range starts before the series does")
            if args.naive:
                flat = naive_range(series, first_day, n_days)
                start = series.hour_at(first_day * HOURS_PER_DAY)
                for h, value in enumerate(flat):
                    stamp = start + timedelta(hours=h)
                    rows.append(
                        (series.series_id, format_timestamp(stamp), _fmt(value), "", "")
                    )
            else:
                bundle = forecast_ensemble(
                    [m.net for m in members], series, schedule, first_day, n_days
                )
                stamps = bundle.timestamps()
                for h in range(len(bundle)):
                    rows.append(
                        (
                            series.series_id,
                            format_timestamp(stamps[h]),
                            _fmt(bundle.point[h]),
                            _fmt(bundle.lower[h]),
                            _fmt(bundle.upper[h]),
                        )
                    )
        except ValidationError as exc:
            skipped.append(f"{series.series_id}: {exc}")
    if not rows:
        raise ValidationError(
            "no series could be forecast: " + "; ".join(skipped) if skipped else "no series"
        )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} forecast rows to {args.out}")
    for line in skipped:
        print(f"skipped {line}", file=sys.stderr)
    return 2 if skipped else 0


# -- evaluate -----------------------------------------------------------------


def _read_forecast_csv(path):
    groups = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FORECAST_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(FORECAST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 columns")
            sid, ts, point, lower, upper = row
            if (lower == "") != (upper == ""):
                raise ValidationError(f"{path}:{lineno}: one-sided interval")
            entry = (
                parse_timestamp(ts),
                float(point),
                float(lower) if lower else None,
                float(upper) if upper else None,
            )
            groups.setdefault(sid, []).append(entry)
    if not groups:
        raise ValidationError(f"{path}: no forecast rows")
    return groups


def cmd_evaluate(args) -> int:
    groups = _read_forecast_csv(args.forecast)
    actuals = {s.series_id: s for s in load_series_csv(args.actuals)}
    offenders = []
    matched = {}
    for sid, entries in sorted(groups.items()):
        if sid not in actuals:
            offenders.append(f"{sid}: series not present in actuals")
            continue
        series = actuals[sid]
        values = []
        for stamp, _, _, _ in entries:
            try:
                values.append(series.values[series.index_of(stamp)])
            except ValidationError:
                offenders.append(f"{sid}: {format_timestamp(stamp)} not in actuals")
        if len(values) == len(entries):
            matched[sid] = np.asarray(values)
    if offenders:
        for line in offenders[:10]:
            print(f"unmatched: {line}", file=sys.stderr)
        more = len(offenders) - 10
        if more > 0:
            print(f"... and {more} more", file=sys.stderr)
        return 1
    reports = {}
    for sid, entries in sorted(groups.items()):
        stamps = [e[0] for e in entries]
        points = np.array([e[1] for e in entries])
        bounded = [e for e in entries if e[2] is not None]
        if bounded and len(bounded) != len(entries):
            raise ValidationError(f"{sid}: intervals present on only some rows")
        lower = np.array([e[2] for e in entries]) if bounded else None
        upper = np.array([e[3] for e in entries]) if bounded else None
        reports[sid] = compute_metrics(
            matched[sid], points, lower=lower, upper=upper, timestamps=stamps
        )
    overall = mean_report(reports.values())
    os.makedirs(args.out, exist_ok=True)
    document = {
        "series": {sid: r.as_dict() for sid, r in reports.items()},
        "mean": overall.as_dict(),
    }
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(document, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for key, attr in (("hour", "by_hour"), ("weekday", "by_weekday"), ("month", "by_month")):
        with open(os.path.join(args.out, f"breakdown_{key}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["series_id", key, "mape"])
            for sid, report in reports.items():
                for k, v in sorted(getattr(report, attr).items()):
                    writer.writerow([sid, k, _fmt(v)])
    pi = ""
    if overall.pi_inside is not None:
        pi = f"  PI inside {overall.pi_inside:.2f}%"
    print(f"mean MAPE {overall.mape:.3f}  RMSE {overall.rmse:.3f}{pi}")
    return 0


# -- diagnose -----------------------------------------------------------------


def cmd_diagnose(args) -> int:
    series_list = load_series_csv(args.data)
    rows = []
    notes = []
    for series in series_list:
        sid = series.series_id
        produced = 0
        try:
            profile = variation_profile(series.values)
            for key in ("v_d", "v_w", "v_y"):
                if profile[key] is not None:
                    rows.append((sid, key, _fmt(profile[key])))
                    produced += 1
        except ValueError as exc:
            notes.append(f"{sid}: variation profile failed: {exc}")
        try:
            shares = harmonic_contributions(series.values)
            top = np.argsort(shares)[::-1][:3]
            for rank, idx in enumerate(top, start=1):
                period_hours = len(series) / (idx + 1)
                rows.append((sid, f"top{rank}_harmonic_period_hours", _fmt(period_hours)))
                rows.append((sid, f"top{rank}_harmonic_share", _fmt(shares[idx])))
                produced += 2
        except ValueError as exc:
            notes.append(f"{sid}: harmonic decomposition failed: {exc}")
        try:
            n_weeks = len(series) // HOURS_PER_WEEK
            if n_weeks >= 2:
                weekly = series.values[: n_weeks * HOURS_PER_WEEK].reshape(n_weeks, 7, 24)
                profiles = weekly.mean(axis=1)
                distances = [
                    daily_pattern_distance(profiles[w - 1], profiles[w])
                    for w in range(1, n_weeks)
                ]
                rows.append((sid, "mean_weekly_pattern_distance", _fmt(np.mean(distances))))
                produced += 1
        except ValueError as exc:
            notes.append(f"{sid}: pattern distance failed: {exc}")
        if produced == 0:
            notes.append(f"{sid}: no diagnostics computable")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "metric", "value"])
        writer.writerows(rows)
    for line in notes:
        print(line, file=sys.stderr)
    print(f"wrote {len(rows)} diagnostic rows to {args.out}")
    return 2 if notes else 0


# -- entry point ---------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "synth": cmd_synth,
            "train": cmd_train,
            "forecast": cmd_forecast,
            "evaluate": cmd_evaluate,
            "diagnose": cmd_diagnose,
        }[args.command]
        return handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
