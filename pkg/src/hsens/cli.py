"""Command-line workflow: fit, compare, sensitivity, summary, simulate, plot.

Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .dataio import (
    ECOLOGY_TABLE,
    FORESTRY_TABLE,
    DataError,
    LogUniformCovariates,
    QuantileCovariates,
    load_csv,
    save_csv,
    summarize as summarize_data,
    synthesize,
)
from .likelihood import ObsKind, ObservationModel
from .mcmc import (
    Chain,
    SamplerConfig,
    export_trace,
    read_chain_csv,
    run_chains,
    summarize,
    write_chain_csv,
)
from .models import ModelKind, ParamVector, param_names
from .sensitivity import (
    UnsupportedCombination,
    build_grid,
    propagate,
    read_curve_csv,
    sensitivity_index,
    si_to_dict,
    write_curve_csv,
)
from .svg import line_plot, trace_plot, violin_plot

log = logging.getLogger("hsens")

# (family, likelihood) pairs fitted in the reference analysis
REFERENCE_COMBOS = {("gs", "gaussian"), ("er", "nb"), ("h", "gaussian"), ("h", "nb")}


class UserError(Exception):
    """Bad input from the command line; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: Optional[dict] = None
    model: Optional[str] = None
    likelihood: Optional[str] = None
    input: Optional[str] = None
    input_sha256: Optional[str] = None
    output: Optional[str] = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    tool_version: str = __version__

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.__dict__, indent=2) + "\n", encoding="utf-8")


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(path):
    try:
        return load_csv(path)
    except FileNotFoundError:
        raise UserError(f"no such file: {path}") from None


# ---------------------------------------------------------------- fit

def summary_dict(chains: Sequence[Chain], kind: ModelKind, obs_kind: ObsKind, family: str,
                 data, config: SamplerConfig) -> dict:
    post = summarize(chains if len(chains) > 1 else chains[0])
    return {
        "model": family,
        "model_kind": kind.value,
        "model_label": kind.label,
        "likelihood": obs_kind.value,
        "params": {name: s.to_dict() for name, s in post.params.items()},
        "mean_deviance": post.mean_deviance,
        "config": config.to_dict(),
        "chains": len(chains),
        "accept_rates": [c.accept_rates for c in chains],
        "n_records": len(data),
        "data_sha256": data.sha256(),
    }


def cmd_fit(args) -> int:
    combo = (args.model, args.likelihood)
    if combo not in REFERENCE_COMBOS and not args.allow_nonpaper:
        raise UserError(
            f"model {args.model!r} with likelihood {args.likelihood!r} is not one of the "
            "reference combinations (gs+gaussian, er+nb, h+gaussian, h+nb); pass --allow-nonpaper"
        )
    data = _load(args.data)
    if len(data) == 0:
        raise UserError("dataset has no records")
    obs_kind = ObsKind(args.likelihood)
    kind = ModelKind.from_family(args.model, args.likelihood)
    if obs_kind is ObsKind.NegBinomial and not data.h_is_integral:
        log.warning("rounding non-integer h values to the nearest integer for the NB likelihood")
    config = SamplerConfig(iterations=args.iters, burn_in=args.burnin, seed=args.seed, thin=args.thin)
    out = Path(args.out or f"fit_{args.model}_{args.likelihood}")
    out.mkdir(parents=True, exist_ok=True)

    chains = run_chains(config, kind, obs_kind, data, args.chains)
    if len(chains) == 1:
        write_chain_csv(chains[0], out / "chain.csv")
    else:
        for k, ch in enumerate(chains, start=1):
            write_chain_csv(ch, out / f"chain_{k}.csv")
    summary = summary_dict(chains, kind, obs_kind, args.model, data, config)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    RunManifest("fit", args.argv, config.to_dict(),
                args.model, args.likelihood, str(args.data), _sha256_file(args.data), str(out)).write(
        out / "manifest.json")

    print(f"{kind.label} / {obs_kind.value}: mean deviance {summary['mean_deviance']:.2f}")
    for name, s in summary["params"].items():
        print(f"  {name:>6s}  {s['median']:.4g}  ({s['ci_low']:.4g} - {s['ci_high']:.4g})  "
              f"ess={s['ess']:.0f}  geweke_z={s['geweke_z']:.2f}")
    return 0


# ---------------------------------------------------------------- compare

def compare_table(summaries: Sequence[dict]) -> list[dict]:
    """Rows sorted by ascending mean deviance (ties by model then likelihood)."""
    rows = sorted(summaries, key=lambda s: (s["mean_deviance"], s["model"], s["likelihood"]))
    best = rows[0]["mean_deviance"] if rows else None
    return [
        {"rank": i + 1, "model": s["model"], "likelihood": s["likelihood"],
         "label": s.get("model_label", s["model"]), "mean_deviance": s["mean_deviance"],
         "best": s["mean_deviance"] == best}
        for i, s in enumerate(rows)
    ]


def cmd_compare(args) -> int:
    summaries = []
    for path in args.summaries:
        try:
            summaries.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UserError(f"cannot read summary {path}: {exc}") from None
    if len(summaries) < 2 and not args.force:
        raise UserError("need at least two summaries (use --force for one)")
    hashes = {s.get("data_sha256") for s in summaries}
    if len(hashes) > 1:
        raise UserError("summaries were fitted to different datasets")
    rows = compare_table(summaries)
    print(f"{'rank':>4}  {'model':<36} {'likelihood':<10} {'mean deviance':>14}")
    for r in rows:
        flag = "  <- best" if r["best"] else ""
        print(f"{r['rank']:>4}  {r['label']:<36} {r['likelihood']:<10} {r['mean_deviance']:>14.2f}{flag}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "model", "likelihood", "mean_deviance", "best"])
            for r in rows:
                w.writerow([r["rank"], r["model"], r["likelihood"], repr(r["mean_deviance"]), int(r["best"])])
    return 0


# ---------------------------------------------------------------- sensitivity

def cmd_sensitivity(args) -> int:
    data = _load(args.data)
    try:
        chain = read_chain_csv(args.chain)
    except FileNotFoundError:
        raise UserError(f"no such file: {args.chain}") from None
    if chain.kind is None:
        raise UserError(f"cannot infer the model from {args.chain}")
    kind, obs_kind = chain.kind, chain.obs_kind
    if args.model and ModelKind.from_family(args.model, obs_kind.value).family != kind.family:
        raise UserError(f"chain columns {chain.param_names} do not match model {args.model!r}")
    grid = build_grid(data, args.vary, args.mode)
    curve = propagate(chain, kind, grid, max_draws=None if args.all_draws else args.max_draws)
    result = sensitivity_index(curve)

    out = Path(args.out or "sensitivity")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{args.vary}_{args.mode}"
    write_curve_csv(curve, out / f"curve_{stem}.csv")
    (out / f"si_{stem}.json").write_text(
        json.dumps(si_to_dict(result, kind, obs_kind.value, grid), indent=2) + "\n", encoding="utf-8")
    title = f"{kind.label}: h vs {args.vary} ({args.mode})"
    (out / f"curve_{stem}.svg").write_text(
        line_plot({"posterior mean": (grid.values, curve.h_mean), "posterior median": (grid.values, curve.h_q50)},
                  title=title, xlabel=args.vary, ylabel="h-index",
                  band=(grid.values, curve.h_q025, curve.h_q975)), encoding="utf-8")
    (out / f"progressive_{stem}.svg").write_text(
        line_plot({"progressive SI": (np.arange(len(grid.values)), result.progressive)},
                  title=f"{kind.label}: progressive SI ({args.vary}, {args.mode})",
                  xlabel=f"{args.vary} grid point", ylabel="SI",
                  categorical_x=[f"{v:.4g}" for v in grid.values]), encoding="utf-8")
    RunManifest("sensitivity", args.argv, None, kind.value,
                obs_kind.value, str(args.data), _sha256_file(args.data), str(out)).write(
        out / f"manifest_{stem}.json")
    print(f"{kind.label} {args.vary} ({args.mode}): SI = {result.si:.3f} "
          f"(h_min {result.h_min:.3g}, h_max {result.h_max:.3g})")
    return 0


# ---------------------------------------------------------------- summary

def cmd_summary(args) -> int:
    data = _load(args.data)
    if len(data) == 0:
        raise UserError("dataset has no records")
    table = summarize_data(data)
    print(table.to_text())
    if args.json:
        Path(args.json).write_text(table.to_json() + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    obs_kind = ObsKind(args.likelihood)
    kind = ModelKind.from_family(args.model, args.likelihood)
    values = {"alpha": args.alpha, "c": args.c, "a": args.a, "b": args.b}
    missing = [n for n in param_names(kind) if values[n] is None]
    if missing:
        raise UserError(f"model {args.model!r} needs --{' --'.join(missing)}")
    params = ParamVector(**{n: values[n] for n in param_names(kind)})
    if obs_kind is ObsKind.TruncGaussian:
        if args.sigma is None:
            raise UserError("gaussian likelihood needs --sigma")
        obs = ObservationModel.gaussian(args.sigma)
    else:
        if args.r is None:
            raise UserError("nb likelihood needs --r")
        obs = ObservationModel.negbinom(args.r)
    table = {"ecology": ECOLOGY_TABLE, "forestry": FORESTRY_TABLE}
    if args.covariates == "loguniform":
        gen = LogUniformCovariates(*args.ranges) if args.ranges else LogUniformCovariates.from_table(ECOLOGY_TABLE)
    else:
        gen = QuantileCovariates.from_table(table[args.covariates], rho=args.rho)
    data = synthesize(kind, params, obs, args.n, gen, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, out)
    RunManifest("simulate", args.argv,
                {"params": params.as_dict(), "noise": obs.noise_param, "n": args.n, "seed": args.seed,
                 "covariates": args.covariates},
                args.model, args.likelihood, None, None, str(out)).write(
        out.with_name(out.stem + ".manifest.json"))
    print(f"wrote {len(data)} journals to {out}")
    return 0


# ---------------------------------------------------------------- plot

def _chain_label(path: Path, chain: Chain) -> str:
    if chain.kind is not None:
        return f"{chain.kind.value}/{chain.obs_kind.value}"
    return path.parent.name or path.stem


def cmd_plot(args) -> int:
    if args.trace:
        chain = read_chain_csv(args.trace)
        if not args.param:
            raise UserError("--trace needs --param")
        try:
            trace = export_trace(chain, args.param)
        except KeyError as exc:
            raise UserError(str(exc.args[0])) from None
        svg = trace_plot(trace[:, 0], trace[:, 1], args.param)
    elif args.violin:
        groups = {}
        for p in args.violin:
            ch = read_chain_csv(p)
            label = _chain_label(Path(p), ch)
            if label in groups:
                label = f"{label} ({len(groups) + 1})"
            groups[label] = ch.deviance_draws
        svg = violin_plot(groups)
    elif args.curve:
        cols = read_curve_csv(args.curve)
        x = cols["grid_value"]
        svg = line_plot({"posterior mean": (x, cols["h_mean"]), "posterior median": (x, cols["h_q50"])},
                        title="Sensitivity curve", xlabel="covariate", ylabel="h-index",
                        band=(x, cols["h_q025"], cols["h_q975"]))
    elif args.progressive:
        si = json.loads(Path(args.progressive).read_text(encoding="utf-8"))
        prog = si["progressive"]
        svg = line_plot({"progressive SI": (np.arange(len(prog)), prog)},
                        title=f"Progressive SI ({si.get('varied')}, {si.get('mode')})",
                        xlabel="grid point", ylabel="SI")
    else:
        raise UserError("choose one of --trace, --violin, --curve, --progressive")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")
    RunManifest("plot", args.argv, output=str(out)).write(
        out.with_name(out.stem + ".manifest.json"))
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hsens", description="Bayesian h-index model fitting and sensitivity analysis")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit one model by MCMC")
    f.add_argument("--data", required=True)
    f.add_argument("--model", required=True, choices=["er", "gs", "h"])
    f.add_argument("--likelihood", required=True, choices=["gaussian", "nb"])
    f.add_argument("--iters", type=int, default=50_000)
    f.add_argument("--burnin", type=int, default=5_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--thin", type=int, default=1)
    f.add_argument("--chains", type=int, default=1)
    f.add_argument("--out")
    f.add_argument("--allow-nonpaper", action="store_true",
                   help="permit model/likelihood pairs outside the reference set")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("compare", help="rank fitted models by mean posterior deviance")
    c.add_argument("summaries", nargs="+")
    c.add_argument("--force", action="store_true", help="allow a single summary")
    c.add_argument("--out", help="optional CSV output")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sensitivity", help="probabilistic sensitivity analysis of a fitted chain")
    s.add_argument("--chain", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--vary", required=True, choices=["P", "C"])
    s.add_argument("--mode", required=True, choices=["global", "local"])
    s.add_argument("--model", choices=["er", "gs", "h"])
    s.add_argument("--max-draws", type=int, default=5000)
    s.add_argument("--all-draws", action="store_true", help="do not thin the posterior sample")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sensitivity)

    m = sub.add_parser("summary", help="descriptive statistics table")
    m.add_argument("--data", required=True)
    m.add_argument("--json")
    m.set_defaults(func=cmd_summary)

    g = sub.add_parser("simulate", help="write a synthetic journal dataset")
    g.add_argument("--model", required=True, choices=["er", "gs", "h"])
    g.add_argument("--likelihood", default="gaussian", choices=["gaussian", "nb"])
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--c", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--r", type=float)
    g.add_argument("--n", type=int, default=130)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--covariates", default="loguniform", choices=["loguniform", "ecology", "forestry"])
    g.add_argument("--ranges", type=float, nargs=4, metavar=("P_MIN", "P_MAX", "C_MIN", "C_MAX"))
    g.add_argument("--rho", type=float, default=0.8)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_simulate)

    pl = sub.add_parser("plot", help="render SVG figures from earlier outputs")
    pl.add_argument("--trace")
    pl.add_argument("--param")
    pl.add_argument("--violin", nargs="+")
    pl.add_argument("--curve")
    pl.add_argument("--progressive")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.showwarning = _show_warning
            return args.func(args)
    except (UserError, DataError, UnsupportedCombination, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
