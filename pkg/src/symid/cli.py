"""Command-line experiment orchestration.

Subcommands: ``generate`` (benchmark system + dataset files), ``identify``
(subspace init + optimizer run on a saved dataset), ``evaluate`` (score an
estimate against the saved truth), ``batch`` (seeded trials aggregated into
stability/error tables), and ``bode`` (frequency-response table of a saved
continuous system).

Every file is reproducible from (config, seed): per-trial generators are
split off the root seed by counter, so trials can run in parallel without
changing any result.  Exit codes: 0 success, 1 usage, 2 numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import benchmark, evaluation, model, optimize, subspace
from .errors import SymidError
from .manifold import SystemTriple, TripleKind

__all__ = ["ExperimentConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


@dataclasses.dataclass
class ExperimentConfig:
    n: int = 20
    m: int = 1
    p: int = 1
    K: int = 400
    h: float = 0.1
    sigma2: tuple = (0.1,)
    input_variance: float = 100.0
    mean_degree: int = 10
    rewire_p: float = 0.4
    variants: tuple = ("CG1",)
    trials: int = 100
    seed: int = 0
    outdir: str = "out"
    max_iters: int = 20
    hybrid_switch: int = 15
    jobs: int = 1
    order: int | None = None  # model order for identification; default n
    weighting: str = "plain"  # observability weighting of the subspace init

    def __post_init__(self):
        for name in ("n", "m", "p", "K", "trials", "max_iters", "jobs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.variants:
            raise ValueError("at least one variant is required")
        self.sigma2 = tuple(float(s) for s in np.atleast_1d(self.sigma2))
        self.variants = tuple(self.variants)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-split generator: reproducible and disjoint across trials."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _enc_float(v: float):
    return v if np.isfinite(v) else "inf" if v > 0 else "-inf"


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _system_to_dict(sys: benchmark.ContinuousSystem) -> dict:
    return {
        "F": sys.F.tolist(),
        "G": sys.G.tolist(),
        "C": sys.C.tolist(),
        "h": sys.h,
    }


def _system_from_dict(d: dict) -> benchmark.ContinuousSystem:
    return benchmark.ContinuousSystem(
        np.array(d["F"]), np.array(d["G"]), np.array(d["C"]), float(d["h"])
    )


def _generate_trial(cfg: ExperimentConfig, sigma2: float, trial: int):
    """One seeded draw of (true system, dataset, snr)."""
    rng = trial_rng(cfg.seed, trial)
    sys, graph, spec = benchmark.random_benchmark_system(
        cfg.n, cfg.m, cfg.p, rng, h=cfg.h,
        mean_degree=cfg.mean_degree, rewire_p=cfg.rewire_p,
    )
    theta_true = benchmark.discretize(sys)
    data, snr = benchmark.generate_dataset(
        theta_true, cfg.K, cfg.input_variance, sigma2, rng, cfg.h
    )
    return sys, graph, spec, theta_true, data, snr, rng


def cmd_generate(cfg: ExperimentConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sigma2 = cfg.sigma2[0]
    sys, graph, spec, _, data, snr, _ = _generate_trial(cfg, sigma2, 0)
    model.save_dataset(
        data, outdir / "dataset.csv", outdir / "dataset_meta.json",
        n=cfg.n, seed=cfg.seed, sigma2=sigma2, snr=snr,
    )
    payload = _system_to_dict(sys)
    payload["graph_edges"] = [list(e) for e in graph.edges]
    payload["c_cap"] = spec.c_cap.tolist()
    payload["r_res"] = spec.r_res.tolist()
    payload["g_con"] = spec.g_con.tolist()
    _write_json(outdir / "true_system.json", payload)
    print(f"wrote dataset ({data.K + 1} samples, SNR {snr:.3f} dB) to {outdir}")
    return EXIT_OK


def _identify_once(data, order: int, variant: str, cfg: ExperimentConfig, rng):
    kind = TripleKind.DIAG_POS if variant == "CG3" else TripleKind.SPD
    sub_cfg = subspace.SubspaceConfig(weighting=cfg.weighting)
    theta0 = subspace.initial_point(data, order, rng, kind=kind, cfg=sub_cfg)
    opt = optimize.OptConfig(
        variant=variant, max_iters=cfg.max_iters,
        hybrid_switch=cfg.hybrid_switch, seed=cfg.seed,
    )
    if variant == "GN":
        trace = optimize.run_gn_baseline(theta0, data, opt)
    else:
        trace = optimize.run(theta0, data, opt)
    return theta0, trace


def cmd_identify(cfg: ExperimentConfig, variant: str) -> int:
    outdir = Path(cfg.outdir)
    data, meta = model.load_dataset(
        outdir / "dataset.csv", outdir / "dataset_meta.json"
    )
    order = cfg.order or int(meta["n"])
    rng = trial_rng(cfg.seed, 0)
    theta0, trace = _identify_once(data, order, variant, cfg, rng)

    trace.to_csv(outdir / f"trace_{variant}.csv")
    trace.to_json(outdir / f"trace_{variant}_summary.json")
    if variant == "GN":
        a, b, c = trace.gn_final
        est = {
            "A": a.tolist(), "B": b.tolist(), "C": c.tolist(),
            "kind": "unconstrained",
            "symmetry_defect": float(np.linalg.norm(a - a.T)),
        }
        _write_json(outdir / f"estimate_{variant}.json", est)
    else:
        theta = trace.theta_final
        est = {
            "A": theta.A.tolist(), "B": theta.B.tolist(), "C": theta.C.tolist(),
            "kind": theta.kind.value,
        }
        _write_json(outdir / f"estimate_{variant}.json", est)
        rec = evaluation.recover_continuous(theta, data.h)
        _write_json(outdir / f"recovered_{variant}.json", _system_to_dict(rec))
    print(
        f"{variant}: f {trace.records[0].f:.6g} -> {trace.f_final:.6g} "
        f"({trace.reason})"
    )
    return EXIT_OK


def cmd_evaluate(cfg: ExperimentConfig, variant: str) -> int:
    outdir = Path(cfg.outdir)
    data, meta = model.load_dataset(
        outdir / "dataset.csv", outdir / "dataset_meta.json"
    )
    true_sys = _system_from_dict(json.loads((outdir / "true_system.json").read_text()))
    est = json.loads((outdir / f"estimate_{variant}.json").read_text())
    if est["kind"] == "unconstrained":
        raise SymidError(
            "estimate is not on the SPD search space; it cannot be converted "
            "to a continuous-time model"
        )
    kind = TripleKind(est["kind"])
    theta = SystemTriple(np.array(est["A"]), np.array(est["B"]), np.array(est["C"]), kind)
    snr = meta.get("snr", float("nan"))
    snr = float("inf") if snr == "inf" else float(snr)
    report = evaluation.evaluate_estimate(theta, true_sys, data, snr)
    _write_json(outdir / f"report_{variant}.json", report.to_dict())
    print(report.to_json())
    return EXIT_OK


def run_batch_trial(cfg: ExperimentConfig, sigma2: float, trial: int) -> list:
    """One trial: generate, initialize, run every variant, score.

    Returns one record per variant plus one for the subspace initializer."""
    sys, _, _, _, data, snr, rng = _generate_trial(cfg, sigma2, trial)
    order = cfg.order or cfg.n
    results = []

    def record(name, report, extra=None):
        row = {"trial": trial, "sigma2": sigma2, "variant": name, "snr": snr}
        if report is not None:
            row.update(report.to_dict())
        if extra:
            row.update(extra)
        results.append(row)

    sub_cfg = subspace.SubspaceConfig(weighting=cfg.weighting)
    try:
        theta0 = subspace.initial_point(data, order, rng, cfg=sub_cfg)
    except SymidError as exc:
        record("init", None, {"error": str(exc)})
        return results
    record("init", evaluation.evaluate_estimate(theta0, sys, data, snr))
    theta0_diag = None
    for variant in cfg.variants:
        try:
            if variant == "CG3":
                if theta0_diag is None:
                    rng_d = trial_rng(cfg.seed, trial)
                    theta0_diag = subspace.initial_point(
                        data, order, rng_d, kind=TripleKind.DIAG_POS, cfg=sub_cfg
                    )
                start = theta0_diag
            else:
                start = theta0
            opt = optimize.OptConfig(
                variant=variant, max_iters=cfg.max_iters,
                hybrid_switch=cfg.hybrid_switch, seed=cfg.seed,
            )
            if variant == "GN":
                trace = optimize.run_gn_baseline(start, data, opt)
                a, _, _ = trace.gn_final
                record("GN", None, {
                    "f_value": trace.f_final,
                    "symmetry_defect": float(np.linalg.norm(a - a.T)),
                })
            else:
                trace = optimize.run(start, data, opt)
                record(variant, evaluation.evaluate_estimate(
                    trace.theta_final, sys, data, snr
                ))
        except SymidError as exc:
            record(variant, None, {"error": str(exc)})
    return results


def _median(values):
    return float(np.median(values)) if values else float("nan")


def aggregate_batch(rows: list) -> list:
    """Reduce per-trial rows to one summary row per (sigma2, variant)."""
    keys = sorted({(r["sigma2"], r["variant"]) for r in rows})
    out = []
    for sigma2, variant in keys:
        grp = [r for r in rows if r["sigma2"] == sigma2 and r["variant"] == variant]
        scored = [r for r in grp if "stable" in r]
        unstable = sum(1 for r in scored if not r["stable"])
        snrs = [r["snr"] for r in grp if np.isfinite(r.get("snr", np.nan))]
        g2s = [r["g2"] for r in scored if isinstance(r.get("g2"), float) and np.isfinite(r["g2"])]
        gis = [r["g_inf"] for r in scored if isinstance(r.get("g_inf"), float) and np.isfinite(r["g_inf"])]
        out.append({
            "sigma2": sigma2,
            "variant": variant,
            "trials": len(grp),
            "failed": sum(1 for r in grp if "error" in r),
            "unstable": unstable,
            "snr_mean": float(np.mean(snrs)) if snrs else float("nan"),
            "snr_dev": float(np.std(snrs)) if snrs else float("nan"),
            "f_median": _median([r["f_value"] for r in grp if "f_value" in r]),
            "g2_median": _median(g2s),
            "g_inf_median": _median(gis),
            "lambda_max_median": _median(
                [r["lambda_max_est"] for r in scored if np.isfinite(r.get("lambda_max_est", np.nan))]
            ),
        })
    return out


def cmd_batch(cfg: ExperimentConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tasks = [(sigma2, trial) for sigma2 in cfg.sigma2 for trial in range(cfg.trials)]
    rows: list = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for chunk in pool.map(
                _batch_star, [(cfg, s, t) for s, t in tasks], chunksize=4
            ):
                rows.extend(chunk)
    else:
        for sigma2, trial in tasks:
            rows.extend(run_batch_trial(cfg, sigma2, trial))

    with open(outdir / "trials.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    summary = aggregate_batch(rows)
    cols = list(summary[0].keys())
    with open(outdir / "summary.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in summary:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    for row in summary:
        print(
            f"sigma2={row['sigma2']:<6g} {row['variant']:<7} "
            f"unstable {row['unstable']:>3}/{row['trials']:<3} "
            f"snr {row['snr_mean']:.3f} f~ {row['f_median']:.4g} "
            f"g2~ {row['g2_median']:.4g} ginf~ {row['g_inf_median']:.4g}"
        )
    return EXIT_OK


def _batch_star(args):
    return run_batch_trial(*args)


def cmd_bode(cfg: ExperimentConfig, system_file: str, omega_min: float,
             omega_max: float, points: int) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sys = _system_from_dict(json.loads(Path(system_file).read_text()))
    omega = np.logspace(np.log10(omega_min), np.log10(omega_max), points)
    omega, mag, phase = evaluation.bode_data(sys, omega)
    out = outdir / "bode.csv"
    evaluation.bode_to_csv(out, omega, mag, phase)
    print(f"wrote {out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="symid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", type=str, help="JSON config file")
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--p", type=int)
        sp.add_argument("--K", type=int)
        sp.add_argument("--h", type=float)
        sp.add_argument("--sigma2", type=float, nargs="+")
        sp.add_argument("--input-variance", dest="input_variance", type=float)
        sp.add_argument("--mean-degree", dest="mean_degree", type=int)
        sp.add_argument("--rewire-p", dest="rewire_p", type=float)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--outdir", type=str)
        sp.add_argument("--max-iters", dest="max_iters", type=int)
        sp.add_argument("--hybrid-switch", dest="hybrid_switch", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--order", type=int)
        sp.add_argument("--weighting", type=str, choices=("plain", "balanced"))
        sp.add_argument("--variants", type=str, nargs="+",
                        choices=optimize.VARIANTS)

    for name in ("generate", "identify", "evaluate", "batch", "bode"):
        sp = sub.add_parser(name)
        add_common(sp)
        if name in ("identify", "evaluate"):
            sp.add_argument("--variant", type=str, required=True,
                            choices=optimize.VARIANTS)
        if name == "bode":
            sp.add_argument("--system", type=str, required=True,
                            help="continuous-system JSON file")
            sp.add_argument("--omega-min", type=float, default=1e-3)
            sp.add_argument("--omega-max", type=float, default=1e3)
            sp.add_argument("--points", type=int, default=200)
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "identify":
            return cmd_identify(cfg, args.variant)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.variant)
        if args.command == "batch":
            return cmd_batch(cfg)
        if args.command == "bode":
            return cmd_bode(cfg, args.system, args.omega_min, args.omega_max,
                            args.points)
        parser.error(f"unknown command {args.command}")
    except (ValueError, TypeError) as exc:
        print(f"symid: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SymidError, np.linalg.LinAlgError) as exc:
        print(f"symid: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"symid: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
