"""generate -> train -> evaluate -> compare, on an output directory.

Layout under ``output_dir``::

    data/manifest.json, data/train-00.pdmd, data/test-00.pdmd, ...
    models/pidmd.pdmdm, models/stacked.pdmdm, models/rkoi.pdmdm,
    models/dmd/test-00.pdmdm, ..., models/train_log.json
    reports/<method>.json, reports/evaluation.csv
    compare/comparison.csv, compare/summary.csv, compare/*.svg
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import json
import logging
import os
from pathlib import Path
import warnings

import numpy as np

from . import baselines, dmd, pidmd
from .config import build_generator_map, build_param_map, config_hash
from .datagen import AdvDiffSpec, AffineSystemSpec, gen_advdiff, gen_affine_trajectories
from .errors import DivergenceDetected, InvalidInput, NumericalFailure
from .io import (
    SnapshotRecord,
    atomic_write_text,
    canonical_json,
    load_model,
    read_snapshots,
    save_model,
    sha256_file,
    write_snapshots,
)
from .metrics import compare_methods, make_report

log = logging.getLogger(__name__)

WORKERS_ENV = "PDMD_WORKERS"
BASELINES = ("stacked", "rkoi")


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise InvalidInput(f"{WORKERS_ENV} must be an integer") from None


def _fmt(v):
    return repr(float(v))


def _label(role, j):
    return f"{role}-{j:02d}"


# -- generate ----------------------------------------------------------------


def generate_trajectories(cfg):
    """Post-transient trajectories for train and test samples, in order."""
    thetas = [s.theta for s in cfg.train] + [s.theta for s in cfg.test]
    T = cfg.trajectory_length
    d = cfg.data
    if d.kind == "advdiff":
        spec = AdvDiffSpec(d.n, d.length, d.speed, d.dt, d.initial_condition, d.ic_mode, d.ic_width, d.stride)
        if cfg.p != 1:
            raise InvalidInput("advdiff data takes a scalar viscosity parameter")
        return gen_advdiff(spec, [th[0] for th in thetas], T, cfg.transient_skip)
    spec = AffineSystemSpec(
        n=d.n, param_map=build_generator_map(cfg), seed=cfg.seed if d.seed is None else d.seed,
        spectral_radius=d.spectral_radius, noise_std=d.noise_std, b_scale=d.b_scale, dt=d.dt,
    )
    data = gen_affine_trajectories(spec, thetas, T + cfg.transient_skip)
    return [s.window(cfg.transient_skip, T) for s in data.trajectories]


def generate_data(cfg):
    """Write one snapshot file per parameter sample plus a manifest."""
    out = Path(cfg.output_dir) / "data"
    trajs = generate_trajectories(cfg)
    roles = [("train", j, s) for j, s in enumerate(cfg.train)] + [("test", j, s) for j, s in enumerate(cfg.test)]
    files = []
    for (role, j, sample), traj in zip(roles, trajs):
        name = _label(role, j)
        label = sample.label or name
        path = out / f"{name}.pdmd"
        write_snapshots(path, SnapshotRecord(traj.states, traj.dt, traj.theta, label))
        files.append({"role": role, "index": j, "label": label, "theta": list(map(float, traj.theta)),
                      "path": path.name, "sha256": sha256_file(path)})
    manifest = {"config_hash": config_hash(cfg), "files": files}
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _manifest(cfg):
    path = Path(cfg.output_dir) / "data" / "manifest.json"
    if not path.exists():
        return None
    m = json.loads(path.read_text())
    return m if m.get("config_hash") == config_hash(cfg) else None


def ensure_data(cfg):
    return _manifest(cfg) or generate_data(cfg)


def load_role(cfg, role):
    manifest = ensure_data(cfg)
    base = Path(cfg.output_dir) / "data"
    out = []
    for ent in manifest["files"]:
        if ent["role"] != role:
            continue
        path = base / ent["path"]
        if not path.exists():
            raise InvalidInput(f"missing snapshot file {path}")
        out.append(read_snapshots(path).to_snapshot_set())
    return out


# -- train -------------------------------------------------------------------


def _svd_kwargs(method):
    return {"pair_rtol": method.pair_rtol} if method.pair_rtol is not None else {}


def fit_method(method, training, pm):
    kw = _svd_kwargs(method)
    if method.id == "pidmd":
        return pidmd.fit_pidmd(training, pm, method.r_tilde, method.r_hat, **kw)
    if method.id == "stacked":
        return baselines.fit_stacked(training, method.rank, pm, method.scheme, **kw)
    if method.id == "rkoi":
        return baselines.fit_rkoi(training, method.rank, pm, method.scheme, **kw)
    raise InvalidInput(f"{method.id} is not trained on the training set")


def train_models(cfg, strict=False):
    """Fit every configured method; exact DMD is fit per test trajectory.

    Returns the training log. With ``strict`` any identifiability or
    rank-deficiency warning aborts with InvalidInput.
    """
    pm = build_param_map(cfg)
    T = cfg.train_snapshots
    training = [s.window(0, T) for s in load_role(cfg, "train")]
    chash = config_hash(cfg)
    mdir = Path(cfg.output_dir) / "models"
    entries = []
    for method in cfg.methods:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if method.id == "dmd":
                paths = []
                for j, s in enumerate(load_role(cfg, "test")):
                    X, Xp = dmd.build_snapshot_pairs(s.window(0, T))
                    model = dmd.fit_dmd(X, Xp, method.rank, s.dt, **_svd_kwargs(method))
                    path = mdir / "dmd" / f"{_label('test', j)}.pdmdm"
                    save_model(path, model, {"config_hash": chash, "theta": list(map(float, s.theta)),
                                             "label": s.label})
                    paths.append(str(path.relative_to(cfg.output_dir)))
                entry = {"method": "dmd", "files": paths}
            else:
                model = fit_method(method, training, pm)
                path = mdir / f"{method.id}.pdmdm"
                save_model(path, model, {"config_hash": chash})
                entry = {"method": method.id, "files": [str(path.relative_to(cfg.output_dir))]}
                if method.id == "pidmd":
                    entry.update(training_residual=model.training_residual, flags=list(model.flags),
                                 rank_tilde=model.rank_tilde, rank_hat=model.rank_hat)
        msgs = [f"{w.category.__name__}: {w.message}" for w in caught]
        for msg in msgs:
            log.warning("%s: %s", method.id, msg)
        if strict and msgs:
            raise InvalidInput(f"{method.id}: warnings promoted to errors: {msgs}")
        entry["warnings"] = msgs
        entries.append(entry)
    train_log = {"config_hash": chash, "methods": entries}
    atomic_write_text(mdir / "train_log.json", json.dumps(train_log, indent=2, sort_keys=True) + "\n")
    return train_log


def ensure_models(cfg):
    path = Path(cfg.output_dir) / "models" / "train_log.json"
    if path.exists():
        tl = json.loads(path.read_text())
        if tl.get("config_hash") == config_hash(cfg):
            return tl
    return train_models(cfg)


# -- predict / evaluate --------------------------------------------------------


def predict_with(model, theta, x0, steps):
    """Dispatch on the model type."""
    if isinstance(model, pidmd.PiDMDModel):
        return pidmd.predict_pidmd(model, theta, x0, steps)
    if isinstance(model, dmd.DMDModel):
        return dmd.predict_dmd(model, x0, steps)
    if isinstance(model, baselines.StackedDMDModel):
        return baselines.predict_stacked(model, theta, x0, steps)
    if isinstance(model, baselines.RKOIModel):
        return baselines.predict_rkoi(model, theta, x0, steps)
    raise InvalidInput(f"cannot predict with {type(model).__name__}")


def evaluate_one(method, model, truth_set, cfg, chash):
    """One (method, test parameter) job; numerical failures become
    divergent reports instead of exceptions."""
    k0, H = cfg.ic_index, cfg.horizon
    truth = truth_set.states[:, k0 : k0 + H + 1]
    x0 = truth[:, 0]
    try:
        pred = predict_with(model, truth_set.theta, x0, H)
        return make_report(method, truth_set.theta, truth, pred, config_hash=chash)
    except DivergenceDetected as exc:
        pred = exc.trajectory if exc.trajectory is not None else np.full_like(truth, np.nan)
        return make_report(method, truth_set.theta, truth, pred, note=f"DivergenceDetected: {exc}",
                           config_hash=chash, force_divergent=True)
    except NumericalFailure as exc:
        return make_report(method, truth_set.theta, truth, np.full_like(truth, np.nan),
                           note=f"{type(exc).__name__}: {exc}", config_hash=chash, force_divergent=True)


def evaluate(cfg):
    """Reports for every configured method at every test parameter, in
    method order then test order. Writes ``reports/``."""
    ensure_models(cfg)
    chash = config_hash(cfg)
    tests = load_role(cfg, "test")
    mdir = Path(cfg.output_dir) / "models"
    jobs = []
    for method in cfg.methods:
        for j, s in enumerate(tests):
            if method.id == "dmd":
                path = mdir / "dmd" / f"{_label('test', j)}.pdmdm"
            else:
                path = mdir / f"{method.id}.pdmdm"
            jobs.append((method.id, path, s))

    def run(job):
        mid, path, s = job
        return evaluate_one(mid, load_model(path).model, s, cfg, chash)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        reports = list(pool.map(run, jobs))

    rdir = Path(cfg.output_dir) / "reports"
    for method in cfg.methods:
        rs = [r.to_dict() for r in reports if r.method == method.id]
        atomic_write_text(rdir / f"{method.id}.json", canonical_json(rs) + "\n")
    atomic_write_text(rdir / "evaluation.csv", evaluation_csv(reports))
    return reports


def evaluation_csv(reports):
    p = len(reports[0].theta) if reports else 0
    head = ["method"] + [f"theta_{i}" for i in range(p)] + ["time_averaged_error", "divergent", "note"]
    lines = [",".join(head)]
    for r in reports:
        note = r.note.replace(",", ";").replace("\n", " ")
        lines.append(",".join([r.method, *map(_fmt, r.theta), _fmt(r.mean), str(int(r.divergent)), note]))
    return "\n".join(lines) + "\n"


def summary_csv(rows):
    lines = ["method,count,divergent,min,q1,median,q3,max"]
    for r in rows:
        lines.append(",".join([r.method, str(r.count), str(r.divergent),
                               *map(_fmt, (r.min, r.q1, r.median, r.q3, r.max))]))
    return "\n".join(lines) + "\n"


def comparison_csv(reports):
    """Wide table: one row per test parameter, one column per method."""
    methods = list(dict.fromkeys(r.method for r in reports))
    thetas = list(dict.fromkeys(r.theta for r in reports))
    table = {(r.method, r.theta): r for r in reports}
    p = len(thetas[0]) if thetas else 0
    lines = [",".join([f"theta_{i}" for i in range(p)] + methods)]
    for th in thetas:
        lines.append(",".join([*map(_fmt, th)] + [_fmt(table[(m, th)].mean) for m in methods]))
    return "\n".join(lines) + "\n"


def compare(cfgs, out_dir=None):
    """Evaluate all configs, check they share the test set and horizon, and
    write the comparison tables and plots. Returns ``(reports, rows)``."""
    from .plots import boxplot_svg, series_svg

    cfgs = list(cfgs)
    ref = cfgs[0]
    key = (sorted(tuple(s.theta) for s in ref.test), ref.horizon)
    for c in cfgs[1:]:
        if (sorted(tuple(s.theta) for s in c.test), c.horizon) != key:
            raise InvalidInput(f"config {c.name!r} uses a different test set or horizon")
    reports = []
    seen = set()
    for c in cfgs:
        for r in evaluate(c):
            if r.method in seen:
                raise InvalidInput(f"method {r.method!r} appears in more than one config")
            reports.append(r)
        seen.update(m.id for m in c.methods)
    rows = compare_methods(reports)
    out = Path(out_dir or ref.output_dir) / "compare"
    atomic_write_text(out / "comparison.csv", comparison_csv(reports))
    atomic_write_text(out / "summary.csv", summary_csv(rows))
    atomic_write_text(out / "boxplot.svg", boxplot_svg(reports, rows))
    atomic_write_text(out / "series.svg", series_svg(reports, ref.data.dt * getattr(ref.data, "stride", 1)))
    return reports, rows


def baseline_diverged(reports):
    return any(r.divergent and r.method in BASELINES for r in reports)
