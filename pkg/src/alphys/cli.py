"""Command-line entry point: ``alphys <group> <action> [options]``.

Every experiment reads one JSON config (``--config``); unknown keys are
rejected. Trial ``i`` draws from ``numpy.random.default_rng(seed ^ i)``
(PCG64), so outputs do not depend on ``--workers``.

Exit codes: 0 success, 1 validation failed, 2 bad config, 3 I/O error.
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import active_learning as al
from . import datasets as ds
from . import weak_measurement as wm
from .classifiers import PhaseOvrModel, RbfSvmModel
from .classifiers.io import load_model, save_model


class ConfigError(Exception):
    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.args[0]}"


# --- config handling ------------------------------------------------------------

STRATEGIES = ["random", "lc", "margin", "entropy"]

SCHEMAS = {
    "dataset gen": {"kind": "qutrit", "case": 1, "side": ds.SIDE, "step": 0.01, "seed": 0},
    "al qutrit": {
        "case": 1, "side": ds.SIDE, "learner": "logistic", "strategies": STRATEGIES,
        "budget": 66, "min_fidelity": None, "coupling": None, "trials": 200, "seed": 0,
    },
    "al phase": {
        "target": "triple", "mode": "separate", "k": 50.0, "strategies": ["random", "margin"],
        "budget": 100, "step": 0.01, "C": 1.0, "gamma": None, "trials": 100, "seed": 0,
        "snapshot": True,
    },
    "ssl phase": {
        "mode": "separate", "k": 100.0, "strategy": "margin", "budget": 100,
        "checkpoints": [20, 40, 60, 80, 100], "threshold": 0.95, "max_iter": 5,
        "step": 0.01, "C": 1.0, "gamma": None, "trials": 100, "seed": 0,
    },
    "ctqmc run": {
        "lattice": "triangular", "L": 3, "J": 1.0, "Gamma": 0.8, "T": 1.0,
        "sweeps": 20000, "thermalization": 1000, "metropolis": False, "trials": 1, "seed": 0,
    },
    "ctqmc validate": {
        "points": [[1.0, 0.8, 1.0], [1.0, 0.3, 0.5]], "lattices": ["triangle", "triangular"],
        "L": 3, "sweeps": 20000, "thermalization": 1000, "sigmas": 3.0, "trials": 1, "seed": 0,
    },
    "reconstruct demo": {
        "theta_a": [0.1, 0.5, 1.0, 1.5707963267948966], "theta_b": None, "shots": None,
        "states": 20, "trials": 1, "seed": 0,
    },
}

COUPLING_KEYS = {"theta_a", "theta_b", "shots", "fresh_copy", "estimate_source"}


def _key_line(text, key):
    for n, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return n
    return None


def load_config(path, command):
    """Merge the JSON document at `path` (if any) over the command's defaults."""
    cfg = json.loads(json.dumps(SCHEMAS[command]))
    if path is None:
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", 1)
    for key, value in doc.items():
        if key not in cfg:
            raise ConfigError(f"unknown key {key!r} for '{command}'", _key_line(text, key))
        cfg[key] = value
    try:
        _validate(cfg, command)
    except ConfigError as exc:
        if exc.line is None and exc.key:
            exc.line = _key_line(text, exc.key)
        raise
    return cfg


def _bad(key, message):
    return ConfigError(f"{key}: {message}", key=key)


def _validate(cfg, command):
    if "trials" in cfg and (not isinstance(cfg["trials"], int) or cfg["trials"] < 1):
        raise _bad("trials", "must be an integer >= 1")
    if "seed" in cfg and (not isinstance(cfg["seed"], int) or cfg["seed"] < 0):
        raise _bad("seed", "must be a non-negative integer")
    for s in cfg.get("strategies", []):
        _strategy(s, "strategies")
    if "strategy" in cfg:
        _strategy(cfg["strategy"], "strategy")
    if command == "al qutrit":
        if cfg["case"] not in (1, 2):
            raise _bad("case", "must be 1 or 2")
        if cfg["learner"] not in al.LEARNERS:
            raise _bad("learner", f"must be one of {sorted(al.LEARNERS)}")
        if cfg["budget"] is not None and (not isinstance(cfg["budget"], int) or cfg["budget"] < 3):
            raise _bad("budget", "must be an integer >= 3 (one seed per class)")
        if cfg["budget"] is None and cfg["min_fidelity"] is None:
            raise _bad("budget", "set budget or min_fidelity")
        if cfg["coupling"] is not None:
            extra = set(cfg["coupling"]) - COUPLING_KEYS
            if extra:
                raise _bad(sorted(extra)[0], "unknown coupling key")
            try:
                _coupling(cfg["coupling"])
            except (TypeError, ValueError) as exc:
                raise _bad("coupling", str(exc)) from exc
    if command in ("al phase", "ssl phase"):
        if not (isinstance(cfg["k"], (int, float)) and cfg["k"] >= 0):
            raise _bad("k", "must be a number >= 0")
        if not isinstance(cfg["budget"], int) or cfg["budget"] < 2:
            raise _bad("budget", "must be an integer >= 2")
        if cfg["mode"] not in ("separate", "joint"):
            raise _bad("mode", "must be 'separate' or 'joint'")
    if command == "al phase" and cfg["target"] not in al.PHASE_TARGETS:
        raise _bad("target", f"must be one of {list(al.PHASE_TARGETS)}")
    if command == "ssl phase":
        if any((not isinstance(c, int)) or c < 2 or c > cfg["budget"] for c in cfg["checkpoints"]):
            raise _bad("checkpoints", "must be integers within [2, budget]")
    if command == "dataset gen":
        if cfg["kind"] not in ("qutrit", "phase"):
            raise _bad("kind", "must be 'qutrit' or 'phase'")
        if cfg["case"] not in (1, 2):
            raise _bad("case", "must be 1 or 2")
    if command in ("ctqmc run", "ctqmc validate"):
        if not (isinstance(cfg["sweeps"], int) and isinstance(cfg["thermalization"], int)
                and cfg["sweeps"] > cfg["thermalization"] >= 0):
            raise _bad("sweeps", "need integers with sweeps > thermalization >= 0")
    if command == "ctqmc run":
        if cfg["lattice"] not in ("triangle", "triangular"):
            raise _bad("lattice", "must be 'triangle' or 'triangular'")
        try:
            _lattice(cfg["lattice"], cfg["L"], cfg["J"], cfg["Gamma"], cfg["T"])
        except (TypeError, ValueError) as exc:
            raise _bad("L", str(exc)) from exc
    if command == "reconstruct demo":
        try:
            for ta in _as_list(cfg["theta_a"]):
                _coupling({"theta_a": ta, "theta_b": cfg["theta_b"] or ta, "shots": cfg["shots"]})
        except (TypeError, ValueError) as exc:
            raise _bad("theta_a", str(exc)) from exc


def _strategy(value, key):
    try:
        return al.Strategy.parse(value)
    except ValueError as exc:
        raise _bad(key, f"unknown strategy {value!r}") from exc


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _coupling(c):
    return wm.CouplingConfig(theta_a=float(c["theta_a"]), theta_b=float(c.get("theta_b", c["theta_a"])),
                             shots=c.get("shots"), fresh_copy=bool(c.get("fresh_copy", False)),
                             estimate_source=c.get("estimate_source", "original"))


def _lattice(kind, L, J, Gamma, T):
    from .ctqmc import LatticeSpec
    if kind == "triangle":
        return LatticeSpec.triangle(J=J, Gamma=Gamma, T=T)
    return LatticeSpec.triangular(L, J=J, Gamma=Gamma, T=T)


def resolve_seed(flag, cfg):
    if flag is not None:
        return flag
    env = os.environ.get("ALPHYS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"ALPHYS_SEED must be an integer, got {env!r}") from exc
    return cfg.get("seed", 0)


def trial_rng(seed, trial):
    return np.random.default_rng(seed ^ trial)


# --- output helpers --------------------------------------------------------------


def _fmt(x):
    return f"{x:.6f}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def aggregate(curves):
    """``[(n_labels, n_trials, mean, std, mean_fidelity)]`` over trials in order.

    `curves` is a list (ascending trial index) of CurvePoint lists.
    """
    by_n = {}
    for curve in curves:
        for p in curve:
            by_n.setdefault(p.n_labels, []).append(p)
    out = []
    for n in sorted(by_n):
        pts = by_n[n]
        acc = [p.accuracy for p in pts]
        mean = math.fsum(acc) / len(acc)
        var = math.fsum((a - mean) ** 2 for a in acc) / (len(acc) - 1) if len(acc) > 1 else 0.0
        fid = math.fsum(p.mean_fidelity for p in pts) / len(pts)
        out.append((n, len(pts), mean, math.sqrt(var), fid))
    return out


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _write_curves(out, name, results, strategies):
    trial_rows, agg_rows = [], []
    for s in strategies:
        curves = [r[s] for r in results]
        for t, curve in enumerate(curves):
            for p in curve:
                trial_rows.append([s, t, p.n_labels, _fmt(p.accuracy), _fmt(p.mean_fidelity)])
        for n, cnt, mean, std, fid in aggregate(curves):
            agg_rows.append([s, n, cnt, _fmt(mean), _fmt(std), _fmt(fid)])
    write_csv(out / f"{name}_trials.csv",
              ["strategy", "trial", "n_labels", "accuracy", "mean_fidelity"], trial_rows)
    write_csv(out / f"{name}_aggregate.csv",
              ["strategy", "n_labels", "n_trials", "mean_accuracy", "std_accuracy", "mean_fidelity"],
              agg_rows)


# --- experiments ---------------------------------------------------------------


def _qutrit_trial(job):
    cfg, seed, trial = job
    grid = ds.gen_case(cfg["case"], cfg["side"])
    coupling = _coupling(cfg["coupling"]) if cfg["coupling"] else None
    stop = al.StoppingRule(cfg["budget"], cfg["min_fidelity"])
    out = {}
    for s in cfg["strategies"]:
        rng = trial_rng(seed, trial)
        st = al.run_qutrit_al(grid, s, stop, rng, learner=cfg["learner"], coupling=coupling)
        out[s] = st.curve
    return out


def cmd_al_qutrit(cfg, args, seed, out):
    jobs = [(cfg, seed, t) for t in range(cfg["trials"])]
    results = _map(_qutrit_trial, jobs, args.workers)
    _write_curves(out, "qutrit", results, cfg["strategies"])
    return 0


def _phase_trial(job):
    cfg, seed, trial, snapshot_dir = job
    grid = ds.gen_phase_grid(cfg["step"])
    out = {}
    for s in cfg["strategies"]:
        rng = trial_rng(seed, trial)
        if cfg["target"] == "triple":
            run = al.run_phase_triple(grid, s, cfg["budget"], cfg["k"], rng, mode=cfg["mode"],
                                      C=cfg["C"], gamma=cfg["gamma"])
            curve, model = run.curve, run.model
        else:
            problem = al.PhaseProblem(grid, cfg["target"])
            st = al.run_phase_al(problem, s, cfg["budget"], cfg["k"], rng, C=cfg["C"],
                                 gamma=cfg["gamma"])
            curve, model = st.curve, st.model
        out[s] = curve
        if snapshot_dir is not None and trial == 0:
            save_model(model, Path(snapshot_dir) / f"model_{cfg['target']}_{s}_trial0.json")
    return out


def cmd_al_phase(cfg, args, seed, out):
    snap = out if cfg["snapshot"] else None
    jobs = [(cfg, seed, t, snap) for t in range(cfg["trials"])]
    results = _map(_phase_trial, jobs, args.workers)
    _write_curves(out, f"phase_{cfg['target']}", results, cfg["strategies"])
    return 0


def _ssl_trial(job):
    cfg, seed, trial = job
    grid = ds.gen_phase_grid(cfg["step"])
    rng = trial_rng(seed, trial)
    run = al.run_phase_triple(grid, cfg["strategy"], cfg["budget"], cfg["k"], rng,
                              mode=cfg["mode"], C=cfg["C"], gamma=cfg["gamma"])
    triple = run.problems["triple"]
    rows = []
    for n in cfg["checkpoints"]:
        if n not in run.snapshots:
            continue
        before = triple.accuracy(run.snapshots[n][0])
        after = triple.accuracy(al.self_train_triple(run, n, cfg["C"], cfg["gamma"],
                                                     cfg["threshold"], cfg["max_iter"]))
        rows.append((n, before, after))
    return rows


def cmd_ssl_phase(cfg, args, seed, out):
    jobs = [(cfg, seed, t) for t in range(cfg["trials"])]
    results = _map(_ssl_trial, jobs, args.workers)
    trial_rows = [[t, n, _fmt(a), _fmt(b)] for t, rows in enumerate(results) for n, a, b in rows]
    write_csv(out / "ssl_trials.csv", ["trial", "n_labels", "accuracy_al", "accuracy_ssl"],
              trial_rows)
    agg = []
    for n in cfg["checkpoints"]:
        a = [r[1] for rows in results for r in rows if r[0] == n]
        b = [r[2] for rows in results for r in rows if r[0] == n]
        if a:
            ma, mb = math.fsum(a) / len(a), math.fsum(b) / len(b)
            agg.append([n, len(a), _fmt(ma), _fmt(mb), _fmt(mb - ma)])
    write_csv(out / "ssl_aggregate.csv",
              ["n_labels", "n_trials", "mean_accuracy_al", "mean_accuracy_ssl", "difference"], agg)
    return 0


def cmd_dataset_gen(cfg, args, seed, out):
    if cfg["kind"] == "qutrit":
        grid = ds.gen_case(cfg["case"], cfg["side"])
        ds.save_qutrit_csv(grid, out / f"qutrit_case{cfg['case']}.csv")
    else:
        ds.save_phase_csv(ds.gen_phase_grid(cfg["step"]), out / "phase_grid.csv")
    return 0


def _ctqmc_rows(spec, label_L, sweeps, result):
    rows = []
    for name in ("energy", "energy_per_site", "nn_zz", "psi2", "binder", "c6"):
        e = result.estimates[name]
        rows.append([label_L, spec.J, spec.Gamma, spec.T, sweeps, name, repr(e.mean), repr(e.stderr)])
    for i in range(spec.n_sites):
        for key in (f"m_{i}", f"chi_{i}"):
            e = result.estimates[key]
            rows.append([label_L, spec.J, spec.Gamma, spec.T, sweeps, key, repr(e.mean), repr(e.stderr)])
    rows.append([label_L, spec.J, spec.Gamma, spec.T, sweeps, "tau_int_energy",
                 repr(result.info["tau_int_energy"]), "nan"])
    return rows


CTQMC_HEADER = ["L", "J", "Gamma", "T", "sweeps", "observable", "mean", "stderr"]


def _ctqmc_trial(job):
    from .ctqmc import run_simulation
    cfg, seed, trial = job
    spec = _lattice(cfg["lattice"], cfg["L"], cfg["J"], cfg["Gamma"], cfg["T"])
    res = run_simulation(spec, cfg["sweeps"], cfg["thermalization"], trial_rng(seed, trial),
                         metropolis=cfg["metropolis"])
    label = spec.L if spec.L is not None else "triangle"
    return _ctqmc_rows(spec, label, cfg["sweeps"], res)


def cmd_ctqmc_run(cfg, args, seed, out):
    jobs = [(cfg, seed, t) for t in range(cfg["trials"])]
    results = _map(_ctqmc_trial, jobs, args.workers)
    rows = [[t] + r for t, rs in enumerate(results) for r in rs]
    write_csv(out / "ctqmc.csv", ["trial"] + CTQMC_HEADER, rows)
    return 0


def _validate_job(job):
    from .ctqmc import ed_oracle, run_simulation
    kind, L, (J, G, T), sweeps, therm, seed = job
    spec = _lattice(kind, L, J, G, T)
    res = run_simulation(spec, sweeps, therm, np.random.default_rng(seed))
    exact = ed_oracle(spec)
    label = spec.L if spec.L is not None else "triangle"
    rows = []
    for name in ("energy", "nn_zz"):
        e = res.estimates[name]
        z = (e.mean - exact[name]) / e.stderr if e.stderr > 0 else math.inf
        rows.append([label, J, G, T, sweeps, name, repr(e.mean), repr(e.stderr),
                     repr(exact[name]), f"{z:.3f}"])
    return rows


def cmd_ctqmc_validate(cfg, args, seed, out):
    jobs = []
    for n, (kind, point) in enumerate((k, p) for k in cfg["lattices"] for p in cfg["points"]):
        jobs.append((kind, cfg["L"], tuple(point), cfg["sweeps"], cfg["thermalization"], seed ^ n))
    results = _map(_validate_job, jobs, args.workers)
    rows = [r for rs in results for r in rs]
    write_csv(out / "ctqmc_validate.csv", CTQMC_HEADER + ["exact", "z"], rows)
    ok = all(abs(float(r[-1])) <= cfg["sigmas"] for r in rows)
    for r in rows:
        status = "ok" if abs(float(r[-1])) <= cfg["sigmas"] else "FAIL"
        print(f"{status:4s} L={r[0]} J={r[1]} Gamma={r[2]} T={r[3]} {r[5]}: "
              f"{float(r[6]):.5f} +- {float(r[7]):.5f} vs exact {float(r[8]):.5f} (z={r[9]})")
    return 0 if ok else 1


def cmd_reconstruct_demo(cfg, args, seed, out):
    from .quantum import random_pure_state
    rng = np.random.default_rng(seed)
    rows = []
    for s in range(cfg["states"]):
        rho = random_pure_state(3, rng)
        for ta in _as_list(cfg["theta_a"]):
            tb = cfg["theta_b"] if cfg["theta_b"] is not None else ta
            c = wm.CouplingConfig(theta_a=float(ta), theta_b=float(tb), shots=cfg["shots"])
            for j in range(3):
                est = wm.reconstruct_diagonal(rho, j, c, rng)
                _, fid = wm.post_state_and_loss(rho, j, c)
                rows.append([s, f"{ta:.6g}", f"{tb:.6g}", j, repr(float(rho[j, j].real)),
                             repr(float(est)), repr(float(fid))])
    write_csv(out / "reconstruct.csv",
              ["state", "theta_a", "theta_b", "j", "true", "estimate", "fidelity"], rows)
    return 0


def cmd_heatmap(args):
    try:
        model = load_model(args.model)
    except FileNotFoundError:
        print(f"error: model snapshot {args.model} not found", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: cannot read model snapshot {args.model}: {exc}", file=sys.stderr)
        return 2
    grid = ds.gen_phase_grid(args.step)
    X = grid.x
    if isinstance(model, PhaseOvrModel):
        f_para, f_ord = model.decisions(X)
        pred = model.predict_phase(X)
        header = ["gamma_ratio", "t_ratio", "f_para", "f_ord", "phase"]
        rows = [[f"{g:.6g}", f"{t:.6g}", repr(float(a)), repr(float(b)), ds.Phase(int(p)).name]
                for (g, t), a, b, p in zip(X, f_para, f_ord, pred)]
    elif isinstance(model, RbfSvmModel):
        f = model.decision_function(X)
        header = ["gamma_ratio", "t_ratio", "decision", "prediction"]
        rows = [[f"{g:.6g}", f"{t:.6g}", repr(float(v)), 1 if v > 0 else -1]
                for (g, t), v in zip(X, f)]
    else:
        print("error: heatmaps need an SVM or one-vs-rest phase model", file=sys.stderr)
        return 2
    write_csv(args.out, header, rows)
    return 0


COMMANDS = {
    "dataset gen": cmd_dataset_gen,
    "al qutrit": cmd_al_qutrit,
    "al phase": cmd_al_phase,
    "ssl phase": cmd_ssl_phase,
    "ctqmc run": cmd_ctqmc_run,
    "ctqmc validate": cmd_ctqmc_validate,
    "reconstruct demo": cmd_reconstruct_demo,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="alphys", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    actions = {}
    for command in COMMANDS:
        group, action = command.split()
        actions.setdefault(group, []).append(action)
    for group, names in actions.items():
        gp = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for name in names:
            p = gp.add_parser(name)
            p.add_argument("--config", help="JSON experiment config")
            p.add_argument("--seed", type=int, help="base seed (overrides ALPHYS_SEED and config)")
            p.add_argument("--trials", type=int, help="number of trials (overrides config)")
            p.add_argument("--out", default="runs", help="output directory")
            p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    hm = groups.add_parser("heatmap", help="decision values of a saved phase model on the grid")
    hm.add_argument("--model", required=True)
    hm.add_argument("--out", required=True)
    hm.add_argument("--step", type=float, default=0.01)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.group == "heatmap":
        try:
            return cmd_heatmap(args)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
    command = f"{args.group} {args.action}"
    try:
        cfg = load_config(args.config, command)
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("--trials must be >= 1")
            cfg["trials"] = args.trials
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        seed = resolve_seed(args.seed, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[command](cfg, args, seed, out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
