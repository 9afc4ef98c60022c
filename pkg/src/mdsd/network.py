"""Node deployment, link construction, and the Node Density Factor."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Link:
    """A single communication link between two surface nodes."""

    node_a: int
    node_b: int
    endpoint_a: tuple       # (x, y) km
    endpoint_b: tuple       # (x, y) km
    length: float           # km
    frequency: float        # Hz

    def midpoint(self):
        return (
            0.5 * (self.endpoint_a[0] + self.endpoint_b[0]),
            0.5 * (self.endpoint_a[1] + self.endpoint_b[1]),
        )


@dataclass
class Topology:
    area: tuple             # (width km, height km)
    nodes: np.ndarray       # (n, 2) positions
    links: list
    l_max: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        w, h = self.area
        if np.any(self.nodes[:, 0] < 0) or np.any(self.nodes[:, 0] > w):
            raise ValueError("node outside area (x)")
        if np.any(self.nodes[:, 1] < 0) or np.any(self.nodes[:, 1] > h):
            raise ValueError("node outside area (y)")


def deploy_nodes(count: int, area, seed) -> np.ndarray:
    """Uniform i.i.d. node positions over the rectangular area, (count, 2)."""
    if count < 2:
        raise ValueError("need at least 2 nodes")
    w, h = area
    if w <= 0 or h <= 0:
        raise ValueError("area dimensions must be positive")
    rng = np.random.default_rng(seed)
    pts = rng.random((count, 2))
    pts[:, 0] *= w
    pts[:, 1] *= h
    return pts


def build_links(nodes, l_max: float, frequency: float) -> list:
    """All unordered node pairs within ``l_max`` km become links."""
    if l_max <= 0:
        raise ValueError("l_max must be > 0")
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    diff = nodes[:, None, :] - nodes[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    links = []
    for a in range(n):
        for b in range(a + 1, n):
            if dist[a, b] <= l_max:
                links.append(
                    Link(
                        node_a=a,
                        node_b=b,
                        endpoint_a=tuple(nodes[a]),
                        endpoint_b=tuple(nodes[b]),
                        length=float(dist[a, b]),
                        frequency=frequency,
                    )
                )
    if not links:
        warnings.warn("no links formed: network too sparse for l_max", stacklevel=2)
    return links


def build_topology(count: int, area, l_max: float, frequency: float, seed) -> Topology:
    nodes = deploy_nodes(count, area, seed)
    links = build_links(nodes, l_max, frequency)
    return Topology(area=tuple(area), nodes=nodes, links=links, l_max=l_max)


def node_density_factor(topology: Topology) -> float:
    """NDF = N * L_max^2 / A, dimensionless."""
    w, h = topology.area
    a = w * h
    if a <= 0:
        raise ValueError("area must be positive")
    return len(topology.nodes) * topology.l_max**2 / a


def area_for_ndf(n_nodes: int, l_max: float, ndf: float) -> float:
    """Back-solve the coverage area (km^2) that yields a target NDF."""
    if ndf <= 0:
        raise ValueError("ndf must be > 0")
    return n_nodes * l_max**2 / ndf


def topology_to_json(topology: Topology, seed=None) -> str:
    payload = {
        "area": list(topology.area),
        "l_max": topology.l_max,
        "seed": seed,
        "ndf": node_density_factor(topology),
        "nodes": topology.nodes.tolist(),
        "links": [
            {
                "node_a": lk.node_a,
                "node_b": lk.node_b,
                "length": lk.length,
                "frequency": lk.frequency,
            }
            for lk in topology.links
        ],
    }
    return json.dumps(payload, indent=2)


def topology_from_json(text: str) -> Topology:
    payload = json.loads(text)
    nodes = np.asarray(payload["nodes"], dtype=float)
    links = [
        Link(
            node_a=lk["node_a"],
            node_b=lk["node_b"],
            endpoint_a=tuple(nodes[lk["node_a"]]),
            endpoint_b=tuple(nodes[lk["node_b"]]),
            length=float(lk["length"]),
            frequency=float(lk["frequency"]),
        )
        for lk in payload["links"]
    ]
    topo = Topology(
        area=tuple(payload["area"]),
        nodes=nodes,
        links=links,
        l_max=float(payload["l_max"]),
    )
    stored_ndf = payload.get("ndf")
    if stored_ndf is not None and not math.isclose(stored_ndf, node_density_factor(topo), rel_tol=1e-9):
        raise ValueError("stored NDF inconsistent with topology")
    return topo
