"""Compare PCA-4 latent + rbf (LOOCV) against raw 12-D + poly (10-fold)
across dataset seeds of the default synthetic design."""

import argparse
import itertools

import numpy as np

from visnet import ingest, pipeline
from visnet.config import PipelineConfig
from visnet.model import cv


def dataset_features(cfg: PipelineConfig, seed: int):
    spec = ingest.default_synthetic_spec(cfg.channels, cfg.timepoints, cfg.precision_seed, cfg.classes)
    tags, rows = [], []
    for _, tag, series in ingest.synth_class_dataset(spec, cfg.sessions, seed):
        net = pipeline.series_to_network(series, cfg.rel_tol).network
        dg = pipeline.network_to_diagrams(net)
        rows.append(pipeline.diagram_to_features(dg, cfg.seed, cfg.k))
        tags.append(tag)
    return np.array(tags), np.array(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0-7", help="range a-b or comma list")
    args = ap.parse_args()
    if "-" in args.seeds:
        lo, hi = map(int, args.seeds.split("-"))
        seeds = range(lo, hi + 1)
    else:
        seeds = [int(s) for s in args.seeds.split(",")]

    cfg = PipelineConfig()
    for seed in seeds:
        tags, X = dataset_features(cfg, seed)
        cols = []
        for a, b in itertools.combinations(sorted(set(tags)), 2):
            mask = np.isin(tags, [a, b])
            y = np.where(tags[mask] == a, 1.0, -1.0)
            pca = cv.loocv(X[mask], y, cfg.trainer("pca", "rbf", 4)).accuracy
            raw = cv.kfold_cv(X[mask], y, cfg.kfold, cfg.seed, cfg.trainer("raw", "poly")).accuracy
            flag = "" if pca >= 0.9 and pca >= raw else " *"
            cols.append(f"{a}{b} {pca:.3f}/{raw:.3f}{flag}")
        print(f"seed {seed}: " + " | ".join(cols), flush=True)


if __name__ == "__main__":
    main()
