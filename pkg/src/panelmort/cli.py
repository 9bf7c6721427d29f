"""Command-line front end: fit, compare, diagnose, effects, simulate.

Exit codes: 0 success, 1 numerical/model failure, 2 input/validation
failure.  Every run writes a manifest.json beside its outputs; reruns
with an identical manifest produce byte-identical outputs (floats are
written with full round-trip precision, JSON keys are sorted, and no
timestamps are recorded).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .dataset import SERIES_KEYS, load_panel
from .design import LABEL_NATIONAL_UNEMP, LABEL_STATE_UNEMP, MODEL_TYPES, ModelSpec
from .diag import diagnostics_report, state_effect_dispersion
from .errors import NumericalError, ValidationError
from .estim import compare_models, fit_model
from .mc import SimConfig, run_monte_carlo, summary_metadata


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _write_atomic(path, buf.getvalue())


def _write_manifest(out: Path, args, command: str, specs, outputs) -> None:
    manifest = {
        "command": command,
        "artifact_version": __version__,
        "inputs": {
            key: str(getattr(args, key))
            for key in ("mortality", "unemployment", "agestructure", "config")
            if getattr(args, key, None) is not None
        },
        "specs": [s.to_json_dict() for s in specs],
        "flags": {
            key: getattr(args, key)
            for key in ("reps", "plot_data", "impute_national")
            if getattr(args, key, None) is not None
        },
        "seed": getattr(args, "seed", None),
        "outputs": sorted(str(out / name) for name in outputs),
    }
    _write_json(out / "manifest.json", manifest)


def _spec_from_args(args) -> ModelSpec:
    return ModelSpec(
        model_type=args.type,
        subtype=args.subtype,
        series=args.series,
        hp_lambda=getattr(args, "lambda"),
        apply_icd_correction=args.icd_correct == "on",
        weight_scheme=args.weights,
    )


def _load_from_args(args):
    return load_panel(
        args.mortality,
        args.unemployment,
        args.agestructure,
        impute_national=args.impute_national,
    )


def _centroids(data):
    out = {}
    for st in data.states:
        if st.lat is not None and st.lon is not None:
            out[st.code] = (st.lat, st.lon)
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args) -> None:
    data = _load_from_args(args)
    spec = _spec_from_args(args)
    mf = fit_model(data, spec)
    out = _out_dir(args)
    fit = mf.fit
    _write_csv(
        out / "coefficients.csv",
        ["term", "estimate", "se_ols", "se_clustered"],
        [
            (
                label,
                fit.coef(label),
                fit.se_ols(label),
                fit.se_clustered(label) if fit.cov_clustered is not None else "",
            )
            for label in fit.labels
        ],
    )
    _write_json(
        out / "effects.json",
        {term: rep.to_json_dict() for term, rep in mf.effects.items()},
    )
    _write_csv(
        out / "residuals.csv",
        ["state", "year", "residual"],
        [
            (fit.row_states[i], int(fit.row_years[i]), float(fit.residuals[i]))
            for i in range(fit.n)
        ],
    )
    _write_manifest(out, args, "fit", [spec], ["coefficients.csv", "effects.json", "residuals.csv"])


def _parse_spec_label(label: str, args) -> ModelSpec:
    label = label.strip()
    mt, sub = label[:-1], label[-1:]
    if mt not in MODEL_TYPES or sub not in "1234":
        raise ValidationError(f"bad spec label {label!r}; expected e.g. B1, L2, HP4")
    return ModelSpec(
        model_type=mt,
        subtype=int(sub),
        series=args.series,
        hp_lambda=getattr(args, "lambda"),
        apply_icd_correction=args.icd_correct == "on",
        weight_scheme=args.weights,
    )


def cmd_compare(args) -> None:
    if not args.spec:
        raise ValidationError("compare needs at least one --spec")
    data = _load_from_args(args)
    specs = [_parse_spec_label(lbl, args) for lbl in args.spec]
    rows = compare_models(data, specs)
    out = _out_dir(args)

    def effect_cell(row, term, attr):
        rep = row.effects.get(term)
        if rep is None:
            return ""
        value = getattr(rep, attr)
        return "" if value is None else value

    metrics = [
        ("effect_state_unemployment", LABEL_STATE_UNEMP, "effect_100beta"),
        ("se_ols_state_unemployment", LABEL_STATE_UNEMP, "se_ols"),
        ("se_clustered_state_unemployment", LABEL_STATE_UNEMP, "se_clustered"),
        ("stars_ols_state_unemployment", LABEL_STATE_UNEMP, "stars_ols"),
        ("stars_clustered_state_unemployment", LABEL_STATE_UNEMP, "stars_clustered"),
        ("effect_national_unemployment", LABEL_NATIONAL_UNEMP, "effect_100beta"),
        ("se_ols_national_unemployment", LABEL_NATIONAL_UNEMP, "se_ols"),
        ("se_clustered_national_unemployment", LABEL_NATIONAL_UNEMP, "se_clustered"),
        ("stars_ols_national_unemployment", LABEL_NATIONAL_UNEMP, "stars_ols"),
        ("stars_clustered_national_unemployment", LABEL_NATIONAL_UNEMP, "stars_clustered"),
    ]
    table = [["metric"] + [row.label for row in rows]]
    for name, term, attr in metrics:
        table.append([name] + [_fmt(effect_cell(row, term, attr)) for row in rows])
    table.append(["year_effects"] + ["yes" if row.year_effects else "no" for row in rows])
    table.append(["aic"] + [_fmt(row.aic) for row in rows])
    table.append(["delta_aic"] + [_fmt(row.delta_aic) for row in rows])
    table.append(["aic_group"] + [row.aic_group for row in rows])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(table)
    _write_atomic(out / "comparison.csv", buf.getvalue())
    _write_json(out / "comparison.json", [row.to_json_dict() for row in rows])
    _write_manifest(out, args, "compare", specs, ["comparison.csv", "comparison.json"])


def cmd_diagnose(args) -> None:
    data = _load_from_args(args)
    spec = _spec_from_args(args)
    mf = fit_model(data, spec)
    report = diagnostics_report(mf.fit, _centroids(data))
    out = _out_dir(args)
    _write_csv(
        out / "acf.csv",
        ["state", "lag1", "lag2", "band_lag1", "band_lag2"],
        [
            (code, r1, r2, report.acf_bands.lag1, report.acf_bands.lag2)
            for code, (r1, r2) in sorted(report.per_state_acf.items())
        ],
    )
    _write_csv(
        out / "xcorr.csv",
        ["state_a", "state_b", "distance_km", "correlation", "band"],
        [(a, b, d, c, report.xcorr_band) for a, b, d, c in report.pair_xcorr],
    )
    n_states = len(report.per_state_acf)
    _write_json(
        out / "summary.json",
        {
            "spec": spec.to_json_dict(),
            "n_states": n_states,
            "n_pairs": len(report.pair_xcorr),
            "acf_band_lag1": report.acf_bands.lag1,
            "acf_band_lag2": report.acf_bands.lag2,
            "xcorr_band": report.xcorr_band,
            "pct_within_band": report.pct_within_band,
        },
    )
    outputs = ["acf.csv", "xcorr.csv", "summary.json"]
    if args.plot_data:
        _write_csv(
            out / "plot_acf.csv",
            ["x", "y", "state"],
            [(r1, r2, code) for code, (r1, r2) in sorted(report.per_state_acf.items())],
        )
        _write_csv(
            out / "plot_xcorr.csv",
            ["x", "y", "pair"],
            [(d, c, f"{a}-{b}") for a, b, d, c in report.pair_xcorr],
        )
        outputs += ["plot_acf.csv", "plot_xcorr.csv"]
    _write_manifest(out, args, "diagnose", [spec], outputs)


def cmd_effects(args) -> None:
    data = _load_from_args(args)
    spec = _spec_from_args(args)
    report = state_effect_dispersion(data, spec)
    out = _out_dir(args)
    _write_csv(
        out / "effects_by_state.csv",
        ["state", "population", "effect_100beta"],
        [
            (code, report.population[code], effect)
            for code, effect in sorted(report.per_state_effect.items())
        ],
    )
    _write_json(
        out / "summary.json",
        {
            "spec": spec.to_json_dict(),
            "mean": report.mean,
            "std": report.std,
            "n_states": len(report.per_state_effect),
        },
    )
    _write_manifest(out, args, "effects", [spec], ["effects_by_state.csv", "summary.json"])


def cmd_simulate(args) -> None:
    config_path = Path(args.config)
    if not config_path.exists():
        raise FileNotFoundError(f"input file not found: {config_path}")
    try:
        cfg = SimConfig.from_json(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{config_path}: invalid JSON ({exc})") from exc
    if args.seed is not None:
        cfg = SimConfig.from_json_dict({**cfg.to_json_dict(), "seed": args.seed})
    spec = _spec_from_args(args)
    summary = run_monte_carlo(cfg, spec, args.reps)
    out = _out_dir(args)
    _write_json(
        out / "mc_summary.json",
        {"summary": summary.to_json_dict(), "metadata": summary_metadata(cfg, spec, args.reps)},
    )
    fields = summary.to_json_dict()
    _write_csv(out / "mc_summary.csv", list(fields), [tuple(fields.values())])
    _write_manifest(out, args, "simulate", [spec], ["mc_summary.json", "mc_summary.csv"])


def _add_data_options(parser) -> None:
    parser.add_argument("--mortality", required=True, help="mortality.csv (state,year,category,rate)")
    parser.add_argument("--unemployment", required=True, help="unemployment.csv (state,year,rate; US rows = national)")
    parser.add_argument("--agestructure", required=True, help="agestructure.csv (state,year,prop_under5,prop_over65,population)")
    parser.add_argument(
        "--impute-national",
        action="store_true",
        help="fill missing national unemployment with the population-weighted state mean",
    )


def _add_spec_options(parser, subtypes="1234") -> None:
    parser.add_argument("--type", required=True, choices=MODEL_TYPES)
    parser.add_argument("--subtype", required=True, type=int, choices=[int(c) for c in subtypes])
    parser.add_argument("--series", default="total", choices=SERIES_KEYS)
    parser.add_argument("--lambda", dest="lambda", type=float, default=100.0, help="HP smoothing parameter")
    parser.add_argument("--weights", choices=("pop", "sqrt-pop"), default="pop")
    parser.add_argument("--icd-correct", choices=("on", "off"), default="on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panelmort",
        description="Panel regressions of state mortality on macroeconomic fluctuations",
    )
    parser.add_argument("--version", action="version", version=f"panelmort {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", help="fit one model specification")
    _add_data_options(p_fit)
    _add_spec_options(p_fit)
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--out", required=True)
    p_fit.set_defaults(func=cmd_fit)

    p_cmp = sub.add_parser("compare", help="fit several specifications side by side")
    _add_data_options(p_cmp)
    p_cmp.add_argument("--spec", action="append", default=[], help="spec label like B1 (repeatable)")
    p_cmp.add_argument("--series", default="total", choices=SERIES_KEYS)
    p_cmp.add_argument("--lambda", dest="lambda", type=float, default=100.0)
    p_cmp.add_argument("--weights", choices=("pop", "sqrt-pop"), default="pop")
    p_cmp.add_argument("--icd-correct", choices=("on", "off"), default="on")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_diag = sub.add_parser("diagnose", help="residual autocorrelation and cross-correlation reports")
    _add_data_options(p_diag)
    _add_spec_options(p_diag)
    p_diag.add_argument("--plot-data", action="store_true", help="also write plot-ready x/y CSVs")
    p_diag.add_argument("--seed", type=int, default=None)
    p_diag.add_argument("--out", required=True)
    p_diag.set_defaults(func=cmd_diagnose)

    p_eff = sub.add_parser("effects", help="state-by-state effect estimates (subtype 2-4)")
    _add_data_options(p_eff)
    _add_spec_options(p_eff, subtypes="234")
    p_eff.add_argument("--seed", type=int, default=None)
    p_eff.add_argument("--out", required=True)
    p_eff.set_defaults(func=cmd_effects)

    p_sim = sub.add_parser("simulate", help="Monte Carlo bias/coverage experiment")
    p_sim.add_argument("--config", required=True, help="SimConfig JSON file")
    _add_spec_options(p_sim)
    p_sim.add_argument("--reps", type=int, default=500)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"panelmort: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"panelmort: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
