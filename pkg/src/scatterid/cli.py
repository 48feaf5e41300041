"""Command-line entry point.

Subcommands: simulate, reconstruct, dict build, identify, experiment.
Every numeric parameter lives in a JSON config; --set overrides individual
keys.  Outputs are pure functions of (config, seed): no timestamps, stable
key order, binary formats with JSON headers.  Logs go to stderr as
machine-parsable key=value lines; data go to files only.

Exit codes: 0 ok, 2 configuration error, 3 numeric/solver error.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import os
import sys

import numpy as np

from . import acquisition as acq
from . import bie
from . import coefficients as co
from . import geometry as geo
from . import identify as idf
from ._parallel import default_threads
from .specfun import DomainError

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------
_GRID = {"type": "object", "additionalProperties": False,
         "required": ["min", "max", "count"],
         "properties": {"min": {"type": "number"},
                        "max": {"type": "number"},
                        "count": {"type": "integer", "minimum": 1}}}
_MOTION = {"type": "object", "additionalProperties": False,
           "properties": {"z": {"type": "array", "minItems": 2,
                                "maxItems": 2,
                                "items": {"type": "number"}},
                          "s": {"type": "number", "exclusiveMinimum": 0},
                          "theta": {"type": "number"}}}
_GEOMETRY = {"type": "object", "additionalProperties": False,
             "properties": {"radius": {"type": "number"},
                            "n_sources": {"type": "integer"},
                            "n_receivers": {"type": "integer"},
                            "center": {"type": "array", "minItems": 2,
                                       "maxItems": 2,
                                       "items": {"type": "number"}}}}

SCHEMAS = {
    "simulate": {
        "type": "object", "additionalProperties": False,
        "required": ["target", "frequencies", "out_dir"],
        "properties": {
            "target": {"type": "string"},
            "targets_file": {"type": "string"},
            "motion": _MOTION,
            "geometry": _GEOMETRY,
            "frequencies": _GRID,
            "n_nodes": {"type": "integer"},
            "k_src": {"type": "integer"},
            "noise": {"type": "object", "additionalProperties": False,
                      "properties": {"sigma0": {"type": "number"}}},
            "seed": {"type": "integer"},
            "out_dir": {"type": "string"},
        },
    },
    "reconstruct": {
        "type": "object", "additionalProperties": False,
        "required": ["input_dir", "out_dir"],
        "properties": {
            "input_dir": {"type": "string"},
            "k_order": {"type": "integer"},
            "out_dir": {"type": "string"},
            "sigma0_sweep": {"type": "array", "items": {"type": "number"}},
            "trials": {"type": "integer"},
            "seed": {"type": "integer"},
            "truth": {"type": "object", "additionalProperties": False,
                      "properties": {"target": {"type": "string"},
                                     "targets_file": {"type": "string"},
                                     "motion": _MOTION,
                                     "n_nodes": {"type": "integer"}}},
        },
    },
    "dict_build": {
        "type": "object", "additionalProperties": False,
        "required": ["out_dir"],
        "properties": {
            "targets_file": {"type": "string"},
            "operating": _GRID,
            "scales": _GRID,
            "dictionary_count": {"type": "integer"},
            "n_v": {"type": "integer"},
            "k_order": {"type": "integer"},
            "n_nodes": {"type": "integer"},
            "out_dir": {"type": "string"},
        },
    },
    "identify": {
        "type": "object", "additionalProperties": False,
        "required": ["dictionary", "measurements", "out_dir"],
        "properties": {
            "dictionary": {"type": "string"},
            "measurements": {"type": "string"},
            "scales": _GRID,
            "k_order": {"type": "integer"},
            "out_dir": {"type": "string"},
        },
    },
    "experiment": {
        "type": "object", "additionalProperties": False,
        "required": ["dictionary", "out_dir"],
        "properties": {
            "dictionary": {"type": "string"},
            "targets": {"type": "array", "items": {"type": "string"}},
            "targets_file": {"type": "string"},
            "motion": _MOTION,
            "sigma0_list": {"type": "array", "items": {"type": "number"}},
            "trials": {"type": "integer"},
            "operating": _GRID,
            "scales": _GRID,
            "k_order": {"type": "integer"},
            "n_v": {"type": "integer"},
            "n_nodes": {"type": "integer"},
            "geometry": _GEOMETRY,
            "seed": {"type": "integer"},
            "out_dir": {"type": "string"},
        },
    },
}

# desk-scale defaults; --paper-scale switches to the full settings
DESK = {"operating": {"min": 0.5 * math.pi, "max": math.pi, "count": 26},
        "scales": {"min": 0.5, "max": 1.5, "count": 250},
        "dictionary_count": 78, "n_v": 128, "k_order": 20, "n_nodes": 128,
        "trials": 100}
FULL_SCALE = {"operating": {"min": 0.5 * math.pi, "max": math.pi, "count": 52},
         "scales": {"min": 0.5, "max": 1.5, "count": 250},
         "dictionary_count": 78, "n_v": 512, "k_order": 25, "n_nodes": 512,
         "trials": 1000}


def log(**kv) -> None:
    print(" ".join(f"{k}={v}" for k, v in kv.items()), file=sys.stderr,
          flush=True)


def _load_config(args, command: str) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    scale = FULL_SCALE if getattr(args, "paper_scale", False) else DESK
    # identify/experiment inherit n_v and k_order from the dictionary
    skip = {"identify": {"k_order", "n_v", "scales"},
            "experiment": {"k_order", "n_v"}}.get(command, set())
    if command != "identify":
        for key, val in scale.items():
            if key in SCHEMAS[command]["properties"] and key not in skip:
                cfg.setdefault(key, val)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        keys = path.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    env_seed = os.environ.get("SCATTERID_SEED")
    if env_seed is not None:
        cfg["seed"] = int(env_seed)
    elif args.seed is not None:
        cfg["seed"] = args.seed
    if jsonschema is not None:
        try:
            jsonschema.validate(cfg, SCHEMAS[command])
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config invalid: {exc.message}") from exc
    return cfg


def _targets(cfg: dict) -> dict:
    if cfg.get("targets_file"):
        with open(cfg["targets_file"]) as f:
            targets = geo.catalog_from_json(f.read())
    else:
        targets = geo.catalog()
    return {c.name: c for c in targets}


def _motion(cfg: dict) -> geo.RigidMotion:
    m = cfg.get("motion", {})
    return geo.RigidMotion(z=tuple(m.get("z", (0.0, 0.0))),
                           s=m.get("s", 1.0), theta=m.get("theta", 0.0))


def _geometry(cfg: dict) -> acq.AcquisitionGeometry:
    g = cfg.get("geometry", {})
    return acq.AcquisitionGeometry(
        radius=g.get("radius", 3.0), n_sources=g.get("n_sources", 91),
        n_receivers=g.get("n_receivers", 91),
        center=tuple(g.get("center", (0.0, 0.0))))


def _freq_grid(spec: dict, role: str) -> idf.FrequencyGrid:
    return idf.FrequencyGrid.uniform(spec["min"], spec["max"], spec["count"],
                                     role=role)


def _scale_grid(spec: dict) -> idf.ScaleGrid:
    return idf.ScaleGrid.uniform(spec["min"], spec["max"], spec["count"])


def _resolve_target(cfg: dict) -> geo.TargetConfig:
    by_name = _targets(cfg)
    name = cfg["target"]
    if name not in by_name:
        raise ConfigError(f"unknown target {name!r}; "
                          f"choose from {sorted(by_name)}")
    return geo.apply_motion(by_name[name], _motion(cfg))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_simulate(cfg: dict, threads: int) -> None:
    target = _resolve_target(cfg)
    geom = _geometry(cfg)
    freqs = _freq_grid(cfg["frequencies"], "operating")
    n_nodes = cfg.get("n_nodes", DESK["n_nodes"])
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    msrs = idf.simulate_clean_msrs(target, geom, freqs, n_nodes,
                                   threads=threads)
    sigma0 = cfg.get("noise", {}).get("sigma0", 0.0)
    seed = cfg.get("seed", 0)
    for i, msr in enumerate(msrs):
        if sigma0 > 0.0:
            msr = acq.add_noise(msr, sigma0, seed + i)
        path = os.path.join(out, f"msr_{i:04d}.msr")
        acq.save_msr(msr, path)
        log(event="simulate", omega=f"{msr.omega:.8g}", file=path)
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump({"command": "simulate", "config": cfg}, f, indent=2,
                  sort_keys=True)


def _load_msr_dir(path: str) -> list:
    files = sorted(glob.glob(os.path.join(path, "*.msr")))
    if not files:
        raise ConfigError(f"no .msr files in {path!r}")
    return [acq.load_msr(f) for f in files]


def cmd_reconstruct(cfg: dict, threads: int) -> None:
    msrs = _load_msr_dir(cfg["input_dir"])
    K = cfg["k_order"]
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    truth = cfg.get("truth")
    rows = []
    for i, msr in enumerate(msrs):
        west = acq.reconstruct_w(msr, K)
        path = os.path.join(out, f"w_{i:04d}.wmat")
        co.save_wmat(west, path)
        log(event="reconstruct", omega=f"{msr.omega:.8g}", file=path)
        if truth:
            tcfg = _resolve_target({**cfg, "target": truth["target"],
                                    "motion": truth.get("motion", {}),
                                    "targets_file":
                                        truth.get("targets_file")})
            wtrue = co.scattering_matrix(tcfg, msr.omega, K,
                                         truth.get("n_nodes", 256))
            rows.append((msr.omega, acq.rel_error(west, wtrue)))
    if rows:
        with open(os.path.join(out, "errors.csv"), "w") as f:
            f.write("omega,rel_error\n")
            for om, err in rows:
                f.write(f"{om},{err}\n")
    sweep = cfg.get("sigma0_sweep")
    if sweep:
        trials = cfg.get("trials", 100)
        seed = cfg.get("seed", 0)
        with open(os.path.join(out, "noise_sweep.csv"), "w") as f:
            f.write("omega,sigma0,median_rel_error_vs_clean\n")
            for msr in msrs:
                wclean = acq.reconstruct_w(msr, K)
                for si, s0 in enumerate(sweep):
                    errs = [acq.rel_error(
                        acq.reconstruct_w(
                            acq.add_noise(msr, s0, seed + 7919 * si + t), K),
                        wclean) for t in range(trials)]
                    f.write(f"{msr.omega},{s0},{float(np.median(errs))}\n")


def cmd_dict_build(cfg: dict, threads: int) -> None:
    by_name = _targets(cfg)
    op = _freq_grid(cfg["operating"], "operating")
    scales = _scale_grid(cfg["scales"])
    dic_grid = idf.dictionary_grid_for(op, scales, cfg["dictionary_count"])
    log(event="dict_build", targets=len(by_name),
        freqs=len(dic_grid.values), n_v=cfg["n_v"], k_order=cfg["k_order"])
    d = idf.build_dictionary(list(by_name.values()), dic_grid,
                             n_v=cfg["n_v"], K=cfg["k_order"],
                             n_nodes=cfg["n_nodes"], out_dir=cfg["out_dir"],
                             threads=threads)
    log(event="dict_done", hash=d.build_hash)


def cmd_identify(cfg: dict, threads: int) -> None:
    if not os.path.isdir(cfg["dictionary"]):
        raise ConfigError(f"dictionary directory {cfg['dictionary']!r} "
                          f"does not exist")
    d = idf.load_dictionary(cfg["dictionary"])
    msrs = _load_msr_dir(cfg["measurements"])
    op = idf.FrequencyGrid(np.array([m.omega for m in msrs]),
                           role="operating")
    scales = _scale_grid(cfg["scales"])
    K = cfg.get("k_order", d.k_order)
    tensor = idf.descriptor_tensor_from_msrs(msrs, K, d.n_v)
    rep = idf.identify(tensor, d, op, scales)
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.json"), "w") as f:
        json.dump({"identified": rep.identified_name,
                   "identified_index": rep.identified,
                   "s_est": rep.s_est,
                   "eps": {n: float(e) for n, e in zip(rep.names, rep.eps)}},
                  f, indent=2, sort_keys=True)
    with open(os.path.join(out, "errorbars.csv"), "w") as f:
        f.write("target_id,candidate_id,eps_mean,eps_std\n")
        for n, e in zip(rep.names, rep.eps):
            f.write(f"unknown,{n},{float(e)},0.0\n")
    log(event="identify", result=rep.identified_name,
        s_est=f"{rep.s_est:.6g}")


def cmd_experiment(cfg: dict, threads: int) -> None:
    if not os.path.isdir(cfg["dictionary"]):
        raise ConfigError(f"dictionary directory {cfg['dictionary']!r} "
                          f"does not exist")
    d = idf.load_dictionary(cfg["dictionary"])
    by_name = _targets(cfg)
    names = cfg.get("targets") or [n for n in d.names
                                   if len(by_name[n].inclusions) > 0]
    for n in names:
        if n not in by_name:
            raise ConfigError(f"unknown target {n!r}")
    op = _freq_grid(cfg["operating"], "operating")
    scales = _scale_grid(cfg["scales"])
    geom = _geometry(cfg)
    motion = _motion(cfg)
    reports = []
    for name in names:
        plan = idf.ExperimentPlan(
            target=name, motion=motion,
            sigma0_list=tuple(cfg.get("sigma0_list", [0.4])),
            trials=cfg.get("trials", DESK["trials"]),
            master_seed=cfg.get("seed", 0), geometry=geom, op_grid=op,
            scale_grid=scales, k_order=cfg.get("k_order", d.k_order),
            n_v=d.n_v, n_nodes=cfg.get("n_nodes", DESK["n_nodes"]))
        log(event="experiment", target=name, trials=plan.trials)
        rep = idf.run_experiment(plan, d, by_name)
        for res in rep["results"]:
            log(event="experiment_result", target=name,
                sigma0=res["sigma0"], prob=res["probability"],
                s_median=f"{res['s_est_median']:.4g}")
        reports.append(rep)
    idf.write_experiment_files(reports, cfg["out_dir"])


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (dotted path, JSON value)")
    p.add_argument("--out-dir", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="master seed "
                   "(SCATTERID_SEED env var takes precedence)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: SCATTERID_THREADS or "
                        "logical cores)")
    p.add_argument("--paper-scale", action="store_true",
                   help="use the full-scale parameter set instead of the "
                        "desk-scale defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterid",
        description="Simulate multistatic scattering, extract scattering "
                    "coefficients, and identify targets from a descriptor "
                    "dictionary.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate response matrices over a "
                                        "frequency grid")
    _add_common(p)
    p.set_defaults(func=cmd_simulate, schema="simulate")

    p = sub.add_parser("reconstruct", help="least-squares coefficient "
                                           "reconstruction from .msr files")
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct, schema="reconstruct")

    pd = sub.add_parser("dict", help="dictionary operations")
    dsub = pd.add_subparsers(dest="dict_command", required=True)
    p = dsub.add_parser("build", help="precompute the descriptor dictionary")
    _add_common(p)
    p.set_defaults(func=cmd_dict_build, schema="dict_build")

    p = sub.add_parser("identify", help="match measured .msr files against "
                                        "a dictionary")
    _add_common(p)
    p.set_defaults(func=cmd_identify, schema="identify")

    p = sub.add_parser("experiment", help="repeated-trial noise-robustness "
                                          "experiments")
    _add_common(p)
    p.set_defaults(func=cmd_experiment, schema="experiment")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = args.threads if args.threads is not None else default_threads()
    try:
        cfg = _load_config(args, args.schema)
        args.func(cfg, threads)
    except ConfigError as exc:
        log(event="error", kind="config", message=str(exc))
        return 2
    except (bie.SingularSystemError, bie.EvaluationError, geo.GeometryError,
            DomainError, ValueError, RuntimeError) as exc:
        log(event="error", kind="numeric", message=str(exc))
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
