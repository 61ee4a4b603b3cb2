"""Per-unit stage functions shared by the CLI and the experiment scripts."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import corrnet, ingest, persistence, tdafeat

log = logging.getLogger(__name__)


@dataclass
class NetworkResult:
    network: corrnet.VisualNetwork
    marginal: corrnet.CorrelationMatrix
    partial: corrnet.CorrelationMatrix
    dropped: list


def series_to_network(series: ingest.TimeSeriesMatrix, rel_tol: float = corrnet.DEFAULT_REL_TOL,
                      drop_degenerate: bool = True) -> NetworkResult:
    """detrend -> zscore -> marginal/partial correlation -> both-positive network."""
    series = ingest.detrend(series)
    dropped = ingest.degenerate_channels(series)
    if dropped:
        if not drop_degenerate:
            from .errors import DegenerateChannelError

            raise DegenerateChannelError(dropped[0])
        log.warning("dropping %d zero-variance channel(s): %s", len(dropped), ", ".join(dropped))
        series = series.drop_channels(dropped)
    series = ingest.zscore(series)
    marginal = corrnet.marginal_correlation(series)
    partial = corrnet.partial_correlation(series, rel_tol)
    net = corrnet.build_visual_network(marginal, partial, series.channel_ids)
    if not net.edges:
        log.warning("network has no both-positive edges")
    return NetworkResult(net, marginal, partial, dropped)


def network_to_diagrams(net: corrnet.VisualNetwork, isolated_value: float = 0.0,
                        oracle_max_vertices: int = persistence.DEFAULT_ORACLE_MAX_VERTICES):
    fg = persistence.build_filtration(net, isolated_value)
    return persistence.compute_diagrams(fg, oracle_max_vertices)


def diagram_to_features(dg: persistence.PersistenceDiagram, seed: int = 0, K: int = 3,
                        keep_diagonal: bool = False, cap_essential: bool = False) -> np.ndarray:
    cap = None
    if cap_essential:
        finite = [p.death for p in dg.dim0 if not p.essential] + [p.birth for p in dg.dim0]
        cap = max(finite) if finite else 0.0
    return tdafeat.topo_feature_vector(dg, dg, seed, K, keep_diagonal, cap)
