"""Command-line driver: ``visnet <subcommand> [options]``.

Stages run in order synth -> network -> persistence -> features -> train.
Each stage records a manifest (hash of its parameters and input files, plus
hashes of the files it wrote) under ``<out_dir>/.cache``; a rerun whose
manifest still matches is skipped.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, corrnet, ingest, oracles, persistence, pipeline, svgplot, tdafeat
from .config import PipelineConfig, load_config
from .errors import ConfigError, DataError, InsufficientDataError, NumericalError, VisnetError
from .model import cv
from .model.svm import decision_function, platt_calibrate

log = logging.getLogger("visnet")

STAGES = ("synth", "network", "persistence", "features", "train")


@dataclass
class Context:
    config: PipelineConfig
    force: bool = False
    reproducible: bool = False
    emit_intermediates: bool = False

    @property
    def out(self) -> Path:
        return Path(self.config.out_dir)

    @property
    def data_dir(self) -> Path:
        return Path(self.config.input_dir) if self.config.input_dir else self.out / "data"

    def stamp(self):
        if self.reproducible:
            return None
        return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


# caching --------------------------------------------------------------------

def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stage_key(params: dict, inputs: list, root: Path) -> str:
    h = hashlib.sha256(json.dumps(params, sort_keys=True, default=str).encode())
    for p in sorted(inputs):
        rel = p.relative_to(root) if p.is_relative_to(root) else p
        h.update(str(rel).encode() + b"\0" + _sha(p).encode() + b"\0")
    return h.hexdigest()


def _manifest_path(ctx: Context, stage: str) -> Path:
    return ctx.out / ".cache" / f"{stage}.json"


def _cached(ctx: Context, stage: str, key: str) -> bool:
    mpath = _manifest_path(ctx, stage)
    if ctx.force or not mpath.is_file():
        return False
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return False
    if manifest.get("key") != key:
        return False
    for rel, digest in manifest.get("outputs", {}).items():
        p = ctx.out / rel
        if not p.is_file() or _sha(p) != digest:
            log.info("%s: %s changed or missing, recomputing", stage, rel)
            return False
    return True


def _clear_previous(ctx: Context, stage: str) -> None:
    mpath = _manifest_path(ctx, stage)
    if not mpath.is_file():
        return
    try:
        outputs = json.loads(mpath.read_text(encoding="utf-8")).get("outputs", {})
    except json.JSONDecodeError:
        return
    for rel in outputs:
        (ctx.out / rel).unlink(missing_ok=True)


def _write_manifest(ctx: Context, stage: str, key: str, outputs: list) -> None:
    mpath = _manifest_path(ctx, stage)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    rels = sorted(str(p.relative_to(ctx.out)) for p in outputs)
    manifest = {"stage": stage, "key": key, "outputs": {r: _sha(ctx.out / r) for r in rels}}
    mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def run_stage(ctx: Context, stage: str, params: dict, inputs: list, compute) -> bool:
    """Run ``compute()`` unless the cached outputs are still valid.

    Returns True when the stage actually ran.
    """
    key = _stage_key({"stage": stage, "version": __version__, **params}, inputs, ctx.out)
    if _cached(ctx, stage, key):
        log.info("%s: up to date", stage)
        return False
    _clear_previous(ctx, stage)
    outputs = compute()
    _write_manifest(ctx, stage, key, outputs)
    log.info("%s: wrote %d file(s)", stage, len(outputs))
    return True


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _dump_json(path: Path, obj) -> Path:
    return _write_text(path, json.dumps(obj, indent=1, sort_keys=False) + "\n")


def _map(ctx: Context, fn, items):
    if ctx.config.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(ctx.config.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# synth ----------------------------------------------------------------------

def _subject_ids(n: int) -> list:
    return [f"sub-{s + 1:02d}" for s in range(n)]


def stage_synth(ctx: Context) -> bool:
    c = ctx.config
    params = {k: getattr(c, k) for k in
              ("seed", "subjects", "sessions", "classes", "channels", "timepoints", "precision_seed")}

    def compute():
        spec = ingest.default_synthetic_spec(c.channels, c.timepoints, c.precision_seed, c.classes)
        written = []
        for s, sub in enumerate(_subject_ids(c.subjects)):
            seed = c.seed * ingest.SEED_STRIDE + s
            for sid, tag, series in ingest.synth_class_dataset(spec, c.sessions, seed):
                stem = ctx.data_dir / sub / f"{sid}_cls-{tag}"
                stem.parent.mkdir(parents=True, exist_ok=True)
                csv_path, lab_path = stem.with_suffix(".csv"), stem.with_suffix(".labels")
                ingest.write_time_series(series, csv_path, lab_path)
                written += [csv_path, lab_path]
        return written

    return run_stage(ctx, "synth", params, [], compute)


# network --------------------------------------------------------------------

def _data_units(ctx: Context) -> list:
    """(subject, csv path, labels path) for every input CSV."""
    root = ctx.data_dir
    if not root.is_dir():
        raise DataError(f"input directory {root} does not exist; run `visnet synth` or set input_dir")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    groups = [(d.name, d) for d in subdirs] or [(root.name, root)]
    units = []
    for sub, d in groups:
        for csv_path in sorted(d.glob("*.csv")):
            lab = csv_path.with_suffix(".labels")
            if not lab.is_file():
                raise DataError(f"{csv_path}: missing class labels file {lab.name}")
            units.append((sub, csv_path, lab))
    if not units:
        raise DataError(f"no CSV files under {root}")
    return units


def _network_unit(args):
    sub, csv_path, lab_path, rel_tol, drop = args
    series = ingest.load_time_series(csv_path, lab_path)
    out = []
    for tag, part in ingest.split_by_class(series).items():
        res = pipeline.series_to_network(part, rel_tol, drop)
        out.append((sub, f"{csv_path.stem}__{tag}", res))
    return out


def _network_dir(ctx: Context) -> Path:
    return ctx.out / "networks"


def stage_network(ctx: Context) -> bool:
    c = ctx.config
    units = _data_units(ctx)
    inputs = [p for _, csv_path, lab in units for p in (csv_path, lab)]
    params = {"rel_tol": c.rel_tol, "drop_degenerate": c.drop_degenerate,
              "emit_intermediates": ctx.emit_intermediates}

    def compute():
        written = []
        jobs = [(sub, p, lab, c.rel_tol, c.drop_degenerate) for sub, p, lab in units]
        for results in _map(ctx, _network_unit, jobs):
            for sub, nid, res in results:
                if res.dropped:
                    log.warning("%s/%s: dropped zero-variance channel(s) %s", sub, nid, res.dropped)
                if not res.network.edges:
                    log.warning("%s/%s: no both-positive edges", sub, nid)
                path = _network_dir(ctx) / sub / f"{nid}.json"
                written.append(_dump_json(path, res.network.to_json()))
                if ctx.emit_intermediates:
                    base = ctx.out / "intermediates" / sub
                    written.append(_dump_json(base / f"{nid}.marginal.json", res.marginal.to_json()))
                    written.append(_dump_json(base / f"{nid}.partial.json", res.partial.to_json()))
        return written

    return run_stage(ctx, "network", params, inputs, compute)


# persistence ----------------------------------------------------------------

def _network_files(ctx: Context) -> list:
    files = sorted(_network_dir(ctx).glob("*/*.json"))
    if not files:
        raise DataError(f"no networks under {_network_dir(ctx)}; run `visnet network` first")
    return files


def _persistence_unit(args):
    path, isolated, bound = args
    try:
        net = corrnet.VisualNetwork.load(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed network JSON ({exc})") from None
    try:
        return persistence.compute_diagrams(persistence.build_filtration(net, isolated), bound)
    except VisnetError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def stage_persistence(ctx: Context) -> bool:
    c = ctx.config
    files = _network_files(ctx)
    params = {"isolated_value": c.isolated_value, "oracle_max_vertices": c.oracle_max_vertices,
              "keep_diagonal": c.keep_diagonal, "reproducible": ctx.reproducible}

    def compute():
        written = []
        diagrams = _map(ctx, _persistence_unit, [(p, c.isolated_value, c.oracle_max_vertices) for p in files])
        for path, dg in zip(files, diagrams):
            base = ctx.out / "diagrams" / path.parent.name / path.stem
            doc = dg.to_json(c.keep_diagonal)
            shown = persistence.PersistenceDiagram.from_json(doc)
            written.append(_dump_json(base.with_suffix(".json"), doc))
            written.append(_write_text(base.with_suffix(".svg"),
                                       svgplot.diagram_svg(shown, f"{path.parent.name} {path.stem}", ctx.stamp())))
        return written

    return run_stage(ctx, "persistence", params, files, compute)


# features -------------------------------------------------------------------

def _features_path(ctx: Context) -> Path:
    return ctx.out / "features.csv"


def _feature_unit(args):
    path, seed, k, keep_diag, cap = args
    return pipeline.diagram_to_features(persistence.load_diagram(path), seed, k, keep_diag, cap)


def stage_features(ctx: Context) -> bool:
    c = ctx.config
    files = sorted((ctx.out / "diagrams").glob("*/*.json"))
    if not files:
        raise DataError(f"no diagrams under {ctx.out / 'diagrams'}; run `visnet persistence` first")
    params = {"seed": c.seed, "k": c.k, "keep_diagonal": c.keep_diagonal,
              "cap_essential": c.cap_essential}

    def compute():
        vecs = _map(ctx, _feature_unit, [(p, c.seed, c.k, c.keep_diagonal, c.cap_essential) for p in files])
        rows = []
        for path, vec in zip(files, vecs):
            nid = f"{path.parent.name}/{path.stem}"
            tag = path.stem.rsplit("__", 1)[-1]
            if not np.any(vec):
                log.warning("%s: both diagrams empty after filtering; feature row is all zeros", nid)
            rows.append((nid, tag, vec))
        _features_path(ctx).parent.mkdir(parents=True, exist_ok=True)
        tdafeat.write_features_csv(rows, _features_path(ctx))
        return [_features_path(ctx)]

    return run_stage(ctx, "features", params, files, compute)


# train ----------------------------------------------------------------------

def _cells(c: PipelineConfig) -> list:
    """(cell name, description, trainer config, protocol)."""
    cells = [
        ("raw_poly_10fold", "raw 12-D + SVM-poly", c.trainer("raw", "poly"), "kfold"),
        ("latent_poly_loocv", "latent 4-D + SVM-poly", c.trainer("latent", "poly"), "loocv"),
    ]
    for k in c.pca_components:
        cells.append((f"pca{k}_rbf_loocv", f"PCA {k}-D + SVM-rbf", c.trainer("pca", "rbf", k), "loocv"))
    return cells


def _mean_std(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std())}


def _summarize_cell(reports: dict, pos: str, neg: str) -> dict:
    summary = {"accuracy": _mean_std([r.accuracy for r in reports.values()])}
    for tag, key in ((pos, "+1"), (neg, "-1")):
        summary[tag] = {m: _mean_std([r.per_class[key][m] for r in reports.values()])
                        for m in ("precision", "recall", "f1")}
    return summary


def _decision_plot(ctx: Context, X, y, pos, neg, title) -> str:
    c = ctx.config
    fitted = cv.fit_pipeline(X, y, c.trainer("pca", "rbf", 2))
    Z = fitted.features(X)
    cal = platt_calibrate(fitted.svm, Z, y)
    span = np.ptp(Z, axis=0)
    span = np.where(span > 0, span, 1.0)
    lo, hi = Z.min(0) - 0.1 * span, Z.max(0) + 0.1 * span
    xs, ys = np.linspace(lo[0], hi[0], 40), np.linspace(lo[1], hi[1], 40)
    gx, gy = np.meshgrid(xs, ys)
    prob = cal(decision_function(fitted.svm, np.column_stack([gx.ravel(), gy.ravel()]))).reshape(gx.shape)
    return svgplot.decision_region_svg(xs, ys, prob, Z, y, title, (pos, neg), ctx.stamp())


def _tags_in_order(tags) -> list:
    seen = []
    for t in tags:
        if t not in seen:
            seen.append(t)
    return seen


def train_report(ctx: Context, ids, tags, X) -> tuple:
    """Run every (subject, task, cell) and return (report, scree rows, plots)."""
    c = ctx.config
    subjects = _tags_in_order(i.split("/", 1)[0] for i in ids)
    classes = _tags_in_order(tags)
    if len(classes) < 2:
        raise InsufficientDataError(f"features cover {len(classes)} class(es); need at least 2")
    ids, tags = np.asarray(ids), np.asarray(tags)
    subj = np.array([i.split("/", 1)[0] for i in ids])
    selectors = [("components", k) for k in sorted(set(c.scree_components) | set(c.pca_components))]
    selectors += [("variance", v) for v in c.pca_variance]

    tasks, scree, plots = [], [], {}
    for pos, neg in itertools.combinations(classes, 2):
        task = f"{pos}_vs_{neg}"
        per_cell = {name: {} for name, *_ in _cells(c)}
        counts = {}
        for sub in subjects:
            mask = (subj == sub) & np.isin(tags, [pos, neg])
            Xs, ys = X[mask], np.where(tags[mask] == pos, 1.0, -1.0)
            counts[sub] = int(mask.sum())
            where = f"{sub} {task}"
            try:
                sweep = cv.sweep_folds(Xs, ys, [[i] for i in range(len(ys))],
                                       c.trainer("pca", "rbf"), selectors) if len(ys) >= 3 else None
                for name, _, trainer, protocol in _cells(c):
                    cell_where = f"{where} {name}"
                    if len(ys) < 3:
                        raise InsufficientDataError(f"{cell_where}: {len(ys)} instance(s), need at least 3")
                    if name.startswith("pca"):
                        per_cell[name][sub] = sweep[("components", trainer.pca_components)]
                    elif protocol == "kfold":
                        per_cell[name][sub] = cv.kfold_cv(Xs, ys, c.kfold, c.seed, trainer)
                    else:
                        per_cell[name][sub] = cv.loocv(Xs, ys, trainer)
            except InsufficientDataError as exc:
                msg = str(exc)
                raise InsufficientDataError(msg if msg.startswith(where) else f"{where}: {msg}") from None
            for kind, value in selectors:
                rep = sweep[(kind, value)]
                scree.append((sub, task, f"{'k' if kind == 'components' else 'v'}={value}",
                              float(np.mean(rep.n_components)), rep.cumulative_variance, rep.accuracy))
            rel = f"plots/decision_{sub}_{task}.svg"
            plots[rel] = _decision_plot(ctx, Xs, ys, pos, neg, f"{sub} {pos} vs {neg}: PCA-2 + rbf")
        cells = []
        for name, desc, trainer, protocol in _cells(c):
            cells.append({
                "cell": name,
                "features": desc,
                "protocol": "10-fold" if protocol == "kfold" else "LOOCV",
                "summary": _summarize_cell(per_cell[name], pos, neg),
                "subjects": {s: r.to_json() for s, r in per_cell[name].items()},
            })
        tasks.append({"task": task, "positive": pos, "negative": neg, "instances": counts, "cells": cells})

    report = {
        "tasks": tasks,
        "subjects": subjects,
        "classes": classes,
        "config": {k: v for k, v in ctx.config.as_dict().items() if k != "out_dir"},
        "artifacts": {"scree": "scree.csv", "decision_regions": sorted(plots)},
    }
    return report, scree, plots


def _scree_csv(rows) -> str:
    lines = ["subject,task,selector,n_components,cumulative_variance,accuracy"]
    for sub, task, sel, k, var, acc in rows:
        lines.append(f"{sub},{task},{sel},{k!r},{var!r},{acc!r}")
    return "\n".join(lines) + "\n"


def stage_train(ctx: Context) -> bool:
    c = ctx.config
    fpath = _features_path(ctx)
    if not fpath.is_file():
        raise DataError(f"{fpath} not found; run `visnet features` first")
    params = {k: v for k, v in c.as_dict().items()
              if k.startswith(("ae_", "svm_", "poly_", "pca_", "scree_")) or k in ("seed", "kfold")}
    params["reproducible"] = ctx.reproducible

    def compute():
        ids, tags, X = tdafeat.read_features_csv(fpath)
        report, scree, plots = train_report(ctx, ids, tags, X)
        written = [_dump_json(ctx.out / "report.json", report),
                   _write_text(ctx.out / "scree.csv", _scree_csv(scree))]
        written += [_write_text(ctx.out / rel, svg) for rel, svg in sorted(plots.items())]
        return written

    return run_stage(ctx, "train", params, [fpath], compute)


# oracle-check ---------------------------------------------------------------

def cmd_oracle_check(args) -> int:
    results = [
        oracles.persistence_suite(args.graphs, args.seed),
        oracles.partial_correlation_suite(args.datasets, args.seed),
    ]
    for r in results:
        print(r.line())
        for item in r.failures[:5]:
            print(f"  failure: {item}")
    if all(r.ok for r in results):
        return 0
    raise NumericalError("oracle equivalence failed")


# entry point ----------------------------------------------------------------

def _stage_list(command: str, ctx: Context) -> list:
    if command == "run-all":
        return [s for s in STAGES if s != "synth" or not ctx.config.input_dir]
    return [command]


_STAGE_FN = {
    "synth": stage_synth,
    "network": stage_network,
    "persistence": stage_persistence,
    "features": stage_features,
    "train": stage_train,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("-o", "--out", help="output directory (same as --set out_dir=...)")
    common.add_argument("--force", action="store_true", help="ignore cached stage outputs")
    common.add_argument("--reproducible", action="store_true",
                        help="omit timestamps so reruns are byte-identical")
    common.add_argument("--emit-intermediates", action="store_true",
                        help="also write marginal and partial correlation matrices")
    common.add_argument("--keep-diagonal", action="store_true",
                        help="keep zero-persistence points for feature extraction")
    common.add_argument("--no-drop-degenerate", action="store_true",
                        help="fail on zero-variance channels instead of dropping them")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="visnet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"visnet {__version__}")
    parser.add_argument("--print-config", action="store_true",
                        help="print every config key with its default and exit")
    sub = parser.add_subparsers(dest="command")
    helps = {
        "synth": "write a synthetic planted-precision dataset",
        "network": "build both-positive correlation networks",
        "persistence": "compute Dg0 / ExDg1 diagrams (JSON + SVG)",
        "features": "extract the 12-D K-means features",
        "train": "cross-validate every task x feature-type cell",
        "run-all": "run every stage, reusing cached results",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    oc = sub.add_parser("oracle-check", parents=[common], help="randomized oracle equivalence suites")
    oc.add_argument("--graphs", type=int, default=100)
    oc.add_argument("--datasets", type=int, default=50)
    oc.add_argument("--seed", type=int, default=0)
    return parser


def _context(args) -> Context:
    overrides = list(args.set)
    if args.out:
        overrides.append(f"out_dir={args.out}")
    if args.keep_diagonal:
        overrides.append("keep_diagonal=true")
    if args.no_drop_degenerate:
        overrides.append("drop_degenerate=false")
    config = load_config(args.config, overrides)
    return Context(config, args.force, args.reproducible, args.emit_intermediates)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        sys.stdout.write(PipelineConfig.describe())
        return 0
    if not args.command:
        parser.print_help()
        return ConfigError.exit_code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    stage = "config"
    try:
        ctx = _context(args)
        if args.command == "oracle-check":
            stage = "oracle-check"
            return cmd_oracle_check(args)
        ctx.out.mkdir(parents=True, exist_ok=True)
        _write_text(ctx.out / "config.resolved.txt",
                    "".join(l for l in ctx.config.to_text().splitlines(True) if not l.startswith("out_dir")))
        for stage in _stage_list(args.command, ctx):
            _STAGE_FN[stage](ctx)
    except VisnetError as exc:
        print(f"visnet {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"visnet {stage}: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
