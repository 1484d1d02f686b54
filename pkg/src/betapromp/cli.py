"""Command-line experiments.

Subcommands: gen, fit, classify, generate, train-phase-net,
compare-covariance.  Options come from a JSON config document (``--config``)
overridden by flags; the seed falls back to ``$PROMP_SEED`` and then 0.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data, perception, promp, recognition
from .basis import BasisConfig
from .phase import AlignOptions, PhaseProfile


@dataclass
class BasisSection:
    n_features: int = 9
    width: float = 0.15
    include_velocity: bool = False

    def build(self) -> BasisConfig:
        return BasisConfig(self.n_features, widths=(self.width,) * self.n_features,
                           include_velocity=self.include_velocity)


@dataclass
class ParabolicSection:
    n: int = 100
    timing_jitter: float = 0.15


@dataclass
class JointspaceSection:
    n_joints: int = 7
    n_demos: int = 11
    timing_jitter: float = 0.15
    spatial_noise: float = 0.02


@dataclass
class ExperimentConfig:
    basis: BasisSection = field(default_factory=BasisSection)
    align: AlignOptions = field(default_factory=AlignOptions)
    benchmark: dict = field(default_factory=dict)
    parabolic: ParabolicSection = field(default_factory=ParabolicSection)
    jointspace: JointspaceSection = field(default_factory=JointspaceSection)
    phase_net: dict = field(default_factory=dict)
    output_dir: str = "."
    seed: int | None = None

    def benchmark_spec(self, seed: int) -> data.BenchmarkSpec:
        return data.BenchmarkSpec(**{**self.benchmark, "seed": seed})

    def net_config(self, seed: int) -> perception.PhaseNetConfig:
        return perception.PhaseNetConfig(**{**self.phase_net, "seed": seed})


class ConfigError(ValueError):
    pass


def _section(cls, raw, name):
    if not isinstance(raw, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad '{name}' section: {exc}") from None


def load_config(path=None) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text()) if path else {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig()
    sections = {"basis": BasisSection, "align": AlignOptions, "benchmark": data.BenchmarkSpec,
                "parabolic": ParabolicSection, "jointspace": JointspaceSection,
                "phase_net": perception.PhaseNetConfig}
    for name, cls in sections.items():
        if name in raw:
            if name in ("benchmark", "phase_net") and isinstance(raw[name], dict) and "seed" in raw[name]:
                raise ConfigError(f"'{name}' takes its seed from the top-level 'seed' key")
            # validate eagerly; the dict-valued ones are rebuilt with the run seed later
            obj = _section(cls, raw[name], name)
            setattr(cfg, name, raw[name] if name in ("benchmark", "phase_net") else obj)
    if "output_dir" in raw:
        cfg.output_dir = str(raw["output_dir"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    return cfg


def resolve_seed(flag, cfg: ExperimentConfig) -> int:
    if flag is not None:
        return int(flag)
    if cfg.seed is not None:
        return cfg.seed
    return int(os.environ.get("PROMP_SEED", "0"))


def _out(path: str | None, cfg: ExperimentConfig, default: str) -> Path:
    p = Path(path) if path else Path(cfg.output_dir) / default
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_gen(args, cfg):
    seed = resolve_seed(args.seed, cfg)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.dataset == "reaching":
        train, test = data.gen_reaching(cfg.benchmark_spec(seed))
        data.write_csv(out / "train.csv", train)
        data.write_csv(out / "test.csv", test)
        _emit({"dataset": "reaching", "train": len(train), "test": len(test), "total": len(train) + len(test)})
    elif args.dataset == "parabolic":
        n = args.n if args.n is not None else cfg.parabolic.n
        trs = data.gen_parabolic(n, seed, timing_jitter=cfg.parabolic.timing_jitter)
        data.write_csv(out / "parabolic.csv", trs)
        _emit({"dataset": "parabolic", "total": len(trs)})
    else:
        js = cfg.jointspace
        n = args.n if args.n is not None else js.n_demos
        trs = data.gen_jointspace(js.n_joints, n, seed, js.timing_jitter, js.spatial_noise)
        data.write_csv(out / "jointspace.csv", trs)
        _emit({"dataset": "jointspace", "total": len(trs)})


def _read_nonempty(path):
    trs = data.read_csv(path)
    if not trs:
        raise ValueError(f"{path} contains no trajectories")
    return trs


def _alignment_report(fits):
    return {
        lab: {
            "iterations": f.alignment.iterations,
            "final_objective": f.alignment.final_objective,
            "objective_trace": f.alignment.trace,
            "profiles": [{"delta1": p.delta1, "delta2": p.delta2, "duration": p.duration}
                         for p in f.alignment.profiles],
            "warnings": f.warnings,
        }
        for lab, f in fits.items()
    }


def cmd_fit(args, cfg):
    trs = _read_nonempty(args.train_csv)
    if any(t.label is None for t in trs):
        raise ValueError("fit needs labelled trajectories")
    fits = promp.fit_library(trs, cfg.basis.build(), cfg.align)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for lab, f in fits.items():
        f.model.save(out / f"{lab}.json")
    (out / "alignment_report.json").write_text(json.dumps(_alignment_report(fits), indent=1) + "\n")
    _emit({"models": sorted(fits), "count": len(fits)})


def load_library(models_dir) -> recognition.MovementLibrary:
    models = []
    for p in sorted(Path(models_dir).glob("*.json")):
        doc = json.loads(p.read_text())
        if "mu_w" in doc:
            models.append(promp.ProMPModel.from_dict(doc))
    if not models:
        raise ValueError(f"no model files in {models_dir}")
    return recognition.MovementLibrary(models)


def cmd_classify(args, cfg):
    trs = _read_nonempty(args.test_csv)
    lib = load_library(args.models_dir)
    if args.phase == "net":
        if not args.net:
            raise ValueError("--phase net requires --net")
        net = perception.PhaseNet.load(args.net)
    traces = []
    for tr in trs:
        obs = recognition.trajectory_observations(tr)
        if args.phase == "net":
            traces.append(perception.classify_with_phase_estimate(lib, obs, net))
        else:
            traces.append(recognition.classify_stream(lib, obs))
    out = _out(args.out, cfg, "trace.csv")
    recognition.export_traces(out, traces)
    dt = min(t.dt for t in trs)
    times, active, acc = recognition.accuracy_over_time(traces, [t.label for t in trs], dt)
    summary = out.with_name(out.stem + "_summary.csv")
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "n_active", "accuracy"])
        for row in zip(times, active, acc):
            w.writerow([repr(float(row[0])), int(row[1]), repr(float(row[2]))])
    final = float(np.mean([tr.final_label == t.label for tr, t in zip(traces, trs)]))
    _emit({"phase": args.phase, "trials": len(trs), "final_accuracy": final})


def _parse_via(text: str):
    phi, sep, vec = text.partition(":")
    if not sep:
        raise ValueError(f"via-point {text!r} must look like 'phi:v1,v2,...'")
    return float(phi), np.array([float(v) for v in vec.split(",")])


def cmd_generate(args, cfg):
    model = promp.ProMPModel.load(args.model_json)
    for spec in args.via or []:
        phi, y = _parse_via(spec)
        model = promp.condition(model, phi, y, args.obs_noise)
    seed = resolve_seed(args.seed, cfg)
    duration = args.duration or float(model.phase_prior.time_grid[-1])
    grid = np.arange(int(round(duration / args.dt)) + 1) * args.dt
    mode = "deterministic" if args.deterministic else "stochastic"
    trs = promp.generate(model, mode, seed, grid, PhaseProfile(0.0, 0.0, float(grid[-1])), n=args.n)
    data.write_csv(_out(args.out, cfg, "generated.csv"), trs)
    _emit({"generated": len(trs), "mode": mode, "via_points": len(args.via or [])})


def cmd_train_phase_net(args, cfg):
    trs = _read_nonempty(args.train_csv)
    fits = promp.fit_library(trs, cfg.basis.build(), cfg.align)
    demos = [d for f in fits.values() for d in f.demonstrations]
    ncfg = cfg.net_config(resolve_seed(args.seed, cfg))
    pairs = perception.build_training_pairs(demos, ncfg.window)
    net = perception.train(pairs, ncfg)
    net.save(_out(args.out, cfg, "phase_net.json"))
    _emit({"pairs": int(pairs[1].size), "train_rmse": perception.rmse(net, pairs)})


def cmd_compare_covariance(args, cfg):
    trs = _read_nonempty(args.train_csv)
    labels = sorted({t.label for t in trs}, key=str)
    if args.label is not None:
        trs = [t for t in trs if t.label == args.label]
        if not trs:
            raise ValueError(f"no trajectories labelled {args.label!r}")
    elif len(labels) > 1:
        raise ValueError(f"several labels {labels}: pick one with --label")
    basis = cfg.basis.build()
    aligned = promp.fit(trs, basis, dataclasses.replace(cfg.align, method="beta")).model.sigma_w
    plain = promp.fit(trs, basis, dataclasses.replace(cfg.align, method="reference")).model.sigma_w
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "cov_aligned.csv", aligned, delimiter=",", fmt="%.17g")
    np.savetxt(out / "cov_unaligned.csv", plain, delimiter=",", fmt="%.17g")
    ea = np.linalg.eigvalsh(aligned)[::-1]
    eu = np.linalg.eigvalsh(plain)[::-1]
    np.savetxt(out / "eigenvalues.csv", np.column_stack([ea, eu]), delimiter=",", fmt="%.17g",
               header="aligned,unaligned", comments="")
    summary = {"trace_aligned": float(np.trace(aligned)), "trace_unaligned": float(np.trace(plain)),
               "min_eigenvalue_aligned": float(ea[-1]), "min_eigenvalue_unaligned": float(eu[-1])}
    (out / "covariance_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    _emit(summary)


class _Parser(argparse.ArgumentParser):
    """Usage errors become the same one-line JSON record as runtime errors."""

    def error(self, message):
        print(json.dumps({"error": "UsageError", "message": f"{self.prog}: {message}"}), file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="promp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        return sp

    g = common(sub.add_parser("gen", help="write a synthetic dataset as CSV"))
    g.add_argument("dataset", choices=["parabolic", "reaching", "jointspace"])
    g.add_argument("--n", type=int)
    g.set_defaults(func=cmd_gen)

    f = common(sub.add_parser("fit", help="fit one model per label"))
    f.add_argument("train_csv")
    f.set_defaults(func=cmd_fit)

    c = common(sub.add_parser("classify", help="streaming recognition of test trajectories"))
    c.add_argument("test_csv")
    c.add_argument("models_dir")
    c.add_argument("--phase", choices=["integral", "net"], default="integral")
    c.add_argument("--net", help="phase-net JSON for --phase net")
    c.set_defaults(func=cmd_classify)

    gn = common(sub.add_parser("generate", help="sample trajectories from a model"))
    gn.add_argument("model_json")
    gn.add_argument("--n", type=int, default=10)
    gn.add_argument("--via", action="append", metavar="PHI:V1,V2", help="via-point, repeatable")
    gn.add_argument("--obs-noise", type=float, default=promp.OBS_NOISE)
    gn.add_argument("--deterministic", action="store_true")
    gn.add_argument("--duration", type=float)
    gn.add_argument("--dt", type=float, default=data.DEFAULT_DT)
    gn.set_defaults(func=cmd_generate)

    t = common(sub.add_parser("train-phase-net", help="train the phase estimator"))
    t.add_argument("train_csv")
    t.set_defaults(func=cmd_train_phase_net)

    cc = common(sub.add_parser("compare-covariance", help="weight covariance with and without alignment"))
    cc.add_argument("train_csv")
    cc.add_argument("--label")
    cc.set_defaults(func=cmd_compare_covariance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
