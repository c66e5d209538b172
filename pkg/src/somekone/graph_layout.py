"""Force-directed layout and color propagation for the classroom graphs.

Edges act as springs whose strength and rest length follow the edge weight
(strong similarity pulls nodes close), all nodes repel each other, and
velocities are damped semi-implicit Euler steps.  Colors start as distinct
hues and blend along weighted edges so clusters become visually cohesive.

The same engine lays out the user-similarity graph and both co-engagement
graphs; node payload (label, thumbnail) is opaque here.
"""

from __future__ import annotations

import colorsys
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class LayoutParams:
    repulsion: float = 0.05
    stiffness: float = 1.0
    rest_min: float = 0.05          # rest length at weight 1
    rest_max: float = 0.6           # rest length at weight 0
    damping: float = 0.9
    dt: float = 0.05
    v_eps: float = 1e-4             # mean-speed convergence threshold
    max_iters: int = 2000
    d_min: float = 1e-3             # distance floor for the repulsion term


def rest_length(weight: float, params: LayoutParams) -> float:
    """Stronger edges are shorter: L(w) = L_min + (L_0 - L_min) * (1 - w)."""
    return params.rest_min + (params.rest_max - params.rest_min) * (1.0 - weight)


@dataclass
class LayoutState:
    node_ids: tuple[str, ...]
    positions: np.ndarray           # (n, 2)
    velocities: np.ndarray          # (n, 2)
    colors: np.ndarray              # (n, 3) in [0, 1]
    edges: list[tuple[int, int, float]]
    params: LayoutParams
    iterations: int = 0
    converged: bool = False
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def position_of(self, node_id: str) -> np.ndarray:
        return self.positions[self._index[node_id]]

    def distance(self, a: str, b: str) -> float:
        return float(np.linalg.norm(self.position_of(a) - self.position_of(b)))

    def payload(
        self,
        labels: dict[str, str] | None = None,
        top_images: dict[str, str] | None = None,
    ) -> dict:
        labels = labels or {}
        top_images = top_images or {}
        nodes = []
        for i, node_id in enumerate(self.node_ids):
            nodes.append(
                {
                    "id": node_id,
                    "x": float(self.positions[i, 0]),
                    "y": float(self.positions[i, 1]),
                    "color": [float(c) for c in self.colors[i]],
                    "label": labels.get(node_id, node_id),
                    "top_image": top_images.get(node_id),
                }
            )
        edges = [
            {"a": self.node_ids[i], "b": self.node_ids[j], "w": w}
            for i, j, w in self.edges
        ]
        return {"nodes": nodes, "edges": edges, "converged": self.converged}


def _hash_unit(seed: int, node_id: str, salt: str) -> float:
    digest = hashlib.sha256(f"{seed}|{salt}|{node_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def init_layout(
    nodes: list[str] | tuple[str, ...],
    edges: list[tuple[str, str, float]],
    seed: int = 0,
    params: LayoutParams | None = None,
) -> LayoutState:
    """Seed positions deterministically inside the unit square.

    Nodes are ordered lexicographically; initial colors are distinct hues
    around the wheel in that order.
    """
    if not nodes:
        raise UsageError("layout requires a non-empty node set")
    node_ids = tuple(sorted(set(nodes)))
    index = {node_id: i for i, node_id in enumerate(node_ids)}
    n = len(node_ids)
    positions = np.array(
        [
            [_hash_unit(seed, node_id, "x"), _hash_unit(seed, node_id, "y")]
            for node_id in node_ids
        ],
        dtype=np.float64,
    )
    colors = np.array(
        [colorsys.hsv_to_rgb(i / n, 0.75, 0.95) for i in range(n)], dtype=np.float64
    )
    edge_list = []
    for a, b, w in edges:
        if a == b:
            continue
        i, j = index[a], index[b]
        edge_list.append((min(i, j), max(i, j), float(w)))
    edge_list.sort()
    return LayoutState(
        node_ids=node_ids,
        positions=positions,
        velocities=np.zeros((n, 2), dtype=np.float64),
        colors=colors,
        edges=edge_list,
        params=params or LayoutParams(),
        _index=index,
    )


def layout_step(state: LayoutState) -> LayoutState:
    """One damped Euler step: pairwise repulsion plus per-edge springs.

    Coincident nodes get a deterministic separation direction derived from
    their index order, so the step function never divides by zero and stays
    reproducible.
    """
    p = state.params
    n = len(state.node_ids)
    forces = np.zeros((n, 2), dtype=np.float64)
    if n > 1:
        delta = state.positions[:, None, :] - state.positions[None, :, :]
        dist = np.linalg.norm(delta, axis=2)
        near_zero = dist < p.d_min
        np.fill_diagonal(near_zero, False)
        if near_zero.any():
            for i, j in zip(*np.nonzero(near_zero)):
                # direction keyed to the pair so both sides agree (antisymmetric)
                angle = 2.0 * math.pi * ((i * n + j) % 360) / 360.0
                sign = 1.0 if i < j else -1.0
                delta[i, j] = sign * np.array([math.cos(angle), math.sin(angle)]) * p.d_min
        dist = np.maximum(np.linalg.norm(delta, axis=2), p.d_min)
        np.fill_diagonal(dist, 1.0)
        unit = delta / dist[:, :, None]
        magnitude = p.repulsion / dist**2
        np.fill_diagonal(magnitude, 0.0)
        forces += (unit * magnitude[:, :, None]).sum(axis=1)

        for i, j, w in state.edges:
            if w <= 0.0:
                continue
            diff = state.positions[j] - state.positions[i]
            d = float(np.linalg.norm(diff))
            if d < p.d_min:
                continue  # repulsion fallback already separates them
            direction = diff / d
            pull = p.stiffness * w * (d - rest_length(w, p))
            forces[i] += pull * direction
            forces[j] -= pull * direction

    velocities = p.damping * (state.velocities + p.dt * forces)
    positions = state.positions + p.dt * velocities
    return LayoutState(
        node_ids=state.node_ids,
        positions=positions,
        velocities=velocities,
        colors=state.colors,
        edges=state.edges,
        params=p,
        iterations=state.iterations + 1,
        converged=state.converged,
        _index=state._index,
    )


def mean_speed(state: LayoutState) -> float:
    if len(state.node_ids) == 0:
        return 0.0
    return float(np.linalg.norm(state.velocities, axis=1).mean())


def run_layout(state: LayoutState) -> LayoutState:
    """Iterate until mean speed drops below v_eps or the budget runs out.

    Non-convergence is reported through the flag, never an error.
    """
    current = state
    for _ in range(state.params.max_iters):
        current = layout_step(current)
        if mean_speed(current) < state.params.v_eps:
            current.converged = True
            return current
    current.converged = mean_speed(current) < state.params.v_eps
    return current


def propagate_colors(state: LayoutState, iters: int) -> LayoutState:
    """Blend node colors along weighted edges, synchronously, iters times.

    Each pass is a convex combination, so channels stay in [0, 1] and
    isolated nodes keep their color exactly.
    """
    if iters < 0:
        raise UsageError("iters must be >= 0")
    n = len(state.node_ids)
    weights = np.zeros((n, n), dtype=np.float64)
    for i, j, w in state.edges:
        weights[i, j] += w
        weights[j, i] += w
    colors = state.colors.copy()
    denom = 1.0 + weights.sum(axis=1)
    for _ in range(iters):
        colors = (colors + weights @ colors) / denom[:, None]
        colors = np.clip(colors, 0.0, 1.0)
    return LayoutState(
        node_ids=state.node_ids,
        positions=state.positions,
        velocities=state.velocities,
        colors=colors,
        edges=state.edges,
        params=state.params,
        iterations=state.iterations,
        converged=state.converged,
        _index=state._index,
    )
