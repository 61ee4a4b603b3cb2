"""Flat ``key = value`` pipeline configuration.

Every key has a default and a one-line description (``PipelineConfig.describe``).
Files are read with configparser under an implicit section; ``#`` starts a
comment. Command-line ``--set key=value`` overrides are applied on top.
Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .model.autoencoder import AutoencoderConfig
from .model.cv import TrainerConfig
from .model.svm import KernelSpec


def _opt(default, doc):
    return field(default=default, metadata={"doc": doc})


@dataclass
class PipelineConfig:
    out_dir: str = _opt("out", "output directory; all artifacts live under it")
    input_dir: str = _opt("", "directory of per-(session, class) CSVs; empty means synthesize")
    seed: int = _opt(0, "master seed; every random stream derives from it")

    subjects: int = _opt(1, "synthetic subjects (independent datasets sharing class patterns)")
    sessions: int = _opt(15, "synthetic sessions per class")
    classes: int = _opt(3, "synthetic class count")
    channels: int = _opt(30, "synthetic channel count")
    timepoints: int = _opt(300, "synthetic timepoints per (session, class)")
    precision_seed: int = _opt(0, "seed of the planted precision patterns")

    rel_tol: float = _opt(1e-10, "pseudo-inverse relative singular-value cutoff")
    drop_degenerate: bool = _opt(True, "drop zero-variance channels instead of failing")
    isolated_value: float = _opt(0.0, "filter value of vertices without edges")
    oracle_max_vertices: int = _opt(512, "vertex bound of the persistence reduction")

    keep_diagonal: bool = _opt(False, "keep zero-persistence points for feature extraction")
    cap_essential: bool = _opt(False, "cluster essential dim-0 points with death capped at the max value")
    k: int = _opt(3, "K-means cluster count")

    ae_lr: float = _opt(1e-2, "autoencoder learning rate")
    ae_momentum: float = _opt(0.9, "autoencoder momentum")
    ae_epochs: int = _opt(2000, "autoencoder epoch limit")
    ae_patience: int = _opt(50, "epochs without min_delta improvement before stopping")

    svm_c: float = _opt(1.0, "SVM box constraint C")
    svm_tol: float = _opt(1e-3, "SMO stopping tolerance on the KKT violation")
    poly_degree: int = _opt(3, "polynomial kernel degree")
    poly_coef0: float = _opt(1.0, "polynomial kernel offset")
    kfold: int = _opt(10, "folds for the raw-feature baseline")

    pca_components: tuple = _opt((2, 3, 4), "PCA dimensions reported as separate cells")
    pca_variance: tuple = _opt((), "explained-variance thresholds added to the scree table")
    scree_components: tuple = _opt((1, 2, 3, 4), "PCA dimensions swept for the scree table")
    jobs: int = _opt(1, "worker processes for per-network stages")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.subjects >= 1, "subjects must be >= 1")
        need(self.sessions >= 2, "sessions must be >= 2 (got %d)" % self.sessions)
        need(self.classes >= 2, "classes must be >= 2")
        need(self.channels >= 3, "channels must be >= 3")
        need(self.timepoints >= 2, "timepoints must be >= 2")
        need(self.rel_tol > 0, "rel_tol must be positive")
        need(self.k >= 1, "k must be >= 1")
        need(self.ae_lr > 0 and self.ae_epochs >= 1, "autoencoder lr and epochs must be positive")
        need(0 <= self.ae_momentum < 1, "ae_momentum must lie in [0, 1)")
        need(self.svm_c > 0 and self.svm_tol > 0, "svm_c and svm_tol must be positive")
        need(self.kfold >= 2, "kfold must be >= 2")
        need(self.jobs >= 1, "jobs must be >= 1")
        for k in self.pca_components + self.scree_components:
            need(1 <= k <= 4, f"PCA dimension {k} outside 1..4")
        for v in self.pca_variance:
            need(0 < v <= 1, f"variance threshold {v} outside (0, 1]")

    @classmethod
    def describe(cls) -> str:
        lines = []
        for f in fields(cls):
            lines.append(f"# {f.metadata['doc']}")
            lines.append(f"{f.name} = {_format(f.default)}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def trainer(self, feature_type: str, kernel: str, n_components=None) -> TrainerConfig:
        if kernel == "poly":
            kspec = KernelSpec("poly", degree=self.poly_degree, coef0=self.poly_coef0)
        else:
            kspec = KernelSpec(kernel)
        ae = AutoencoderConfig(lr=self.ae_lr, momentum=self.ae_momentum, epochs=self.ae_epochs,
                               seed=self.seed, patience=self.ae_patience)
        return TrainerConfig(feature_type, kspec, self.svm_c, self.svm_tol, ae, n_components)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse(name: str, kind: str, raw: str, element=None):
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple":
            parts = [p for p in (s.strip() for s in raw.split(",")) if p]
            return tuple(element(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {name!r}: {exc}") from None


_TUPLE_ELEMENT = {"pca_components": int, "scree_components": int, "pca_variance": float}


def apply_overrides(config: PipelineConfig, pairs: dict, source: str = "override") -> PipelineConfig:
    known = {f.name: f for f in fields(PipelineConfig)}
    changes = {}
    for key, raw in pairs.items():
        key = key.strip()
        if key not in known:
            raise ConfigError(f"{source}: unknown config key {key!r}")
        kind = known[key].type
        changes[key] = _parse(key, kind, raw, _TUPLE_ELEMENT.get(key))
    return dataclasses.replace(config, **changes)


def load_config(path=None, overrides=()) -> PipelineConfig:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides."""
    config = PipelineConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                           inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string("[pipeline]\n" + path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        config = apply_overrides(config, dict(parser["pipeline"]), str(path))
    pairs = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        pairs[key] = value
    return apply_overrides(config, pairs, "--set")
