"""Discrete stand-ins for compact metric measure spaces.

A space is a connected weighted graph: point masses summing to one, edges
carrying a metric length and a perimeter cut-weight.  Builders produce the
geometries the comparison theory is sharp on: weighted model intervals, their
truncations, and spherical suspensions over a circle.  Cut-weights are
calibrated so that the discrete coarea identity is exact and coordinate caps
realize the model perimeter exactly at cell boundaries.
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .model_space import ModelSpace

__all__ = [
    "DiscreteMMS",
    "SampledFunction",
    "build_model_interval",
    "build_truncated_model",
    "build_suspension",
    "model_space_of",
    "measure",
    "perimeter",
    "slope",
    "edge_gradient",
    "dirichlet_energy",
]


class DiscreteMMS:
    """Finite weighted graph with point masses and perimeter cut-weights.

    Immutable after construction (by convention): all operations are pure
    reads, safe to share across threads.
    """

    def __init__(self, masses, edges_i, edges_j, edge_length, edge_cut,
                 coords=None, tag="custom", params=None):
        self.masses = np.asarray(masses, dtype=float)
        self.edges_i = np.asarray(edges_i, dtype=np.int64)
        self.edges_j = np.asarray(edges_j, dtype=np.int64)
        self.edge_length = np.asarray(edge_length, dtype=float)
        self.edge_cut = np.asarray(edge_cut, dtype=float)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.tag = tag
        self.params = dict(params or {})

        n = self.n_points
        if n == 0:
            raise ValueError("space needs at least one point")
        if np.any(self.masses <= 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("point masses must be positive and finite")
        if abs(float(np.sum(self.masses)) - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1, got {np.sum(self.masses)!r}")
        m = len(self.edges_i)
        if not (len(self.edges_j) == len(self.edge_length) == len(self.edge_cut) == m):
            raise ValueError("edge arrays must have equal length")
        if m and (self.edges_i.min() < 0 or max(self.edges_i.max(), self.edges_j.max()) >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(self.edge_length <= 0) or not np.all(np.isfinite(self.edge_length)):
            raise ValueError("edge lengths must be positive and finite")
        if np.any(self.edge_cut < 0):
            raise ValueError("cut weights must be nonnegative")
        if n > 1:
            adj = coo_matrix((np.ones(m), (self.edges_i, self.edges_j)), shape=(n, n))
            ncomp, _ = connected_components(adj, directed=False)
            if ncomp != 1:
                raise ValueError(f"graph must be connected, found {ncomp} components")

    @property
    def n_points(self):
        return len(self.masses)

    @property
    def n_edges(self):
        return len(self.edges_i)

    def subset_mask(self, E):
        """Normalize a point subset (indices or boolean mask) to a boolean mask."""
        E = np.asarray(E)
        if E.dtype == bool:
            if len(E) != self.n_points:
                raise ValueError("boolean mask has wrong length")
            return E
        if E.size and (E.min() < 0 or E.max() >= self.n_points):
            raise ValueError("point index out of range")
        mask = np.zeros(self.n_points, dtype=bool)
        mask[E] = True
        return mask

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {
            "tag": self.tag,
            "params": self.params,
            "masses": self.masses.tolist(),
            "edges": [
                {"i": int(i), "j": int(j), "d": float(d), "sigma": float(s)}
                for i, j, d, s in zip(self.edges_i, self.edges_j,
                                      self.edge_length, self.edge_cut)
            ],
            "coords": None if self.coords is None else self.coords.tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        edges = d.get("edges", [])
        return cls(
            masses=d["masses"],
            edges_i=[e["i"] for e in edges],
            edges_j=[e["j"] for e in edges],
            edge_length=[e["d"] for e in edges],
            edge_cut=[e["sigma"] for e in edges],
            coords=d.get("coords"),
            tag=d.get("tag", "custom"),
            params=d.get("params"),
        )

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))

    def __repr__(self):
        return (f"DiscreteMMS(tag={self.tag!r}, n_points={self.n_points}, "
                f"n_edges={self.n_edges})")


class SampledFunction:
    """Real values attached to the points of a DiscreteMMS."""

    def __init__(self, space: DiscreteMMS, values):
        self.space = space
        self.values = np.asarray(values, dtype=float)
        if len(self.values) != space.n_points:
            raise ValueError("value count must match point count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def to_json(self, **kw):
        return json.dumps(self.values.tolist(), **kw)

    @classmethod
    def from_json(cls, space, s):
        return cls(space, json.loads(s))


# -- builders ---------------------------------------------------------------


def build_model_interval(K, N, n_cells, ms: ModelSpace | None = None) -> DiscreteMMS:
    """Cell-centered discretization of the weighted model interval.

    Cell masses are exact cumulative differences; the cut-weight between
    adjacent cells is the density at the shared boundary, which makes initial
    segments realize the isoperimetric profile exactly.
    """
    if n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells}")
    ms = ms if ms is not None else ModelSpace(K, N)
    if ms.K != K or ms.N != N:
        raise ValueError("model space parameters disagree with (K, N)")
    bounds = np.linspace(0.0, ms.diameter, n_cells + 1)
    masses = np.diff(ms.cumulative(bounds))
    centers = 0.5 * (bounds[:-1] + bounds[1:])
    pitch = ms.diameter / n_cells
    idx = np.arange(n_cells - 1)
    return DiscreteMMS(
        masses=masses,
        edges_i=idx,
        edges_j=idx + 1,
        edge_length=np.full(n_cells - 1, pitch),
        edge_cut=ms.density(bounds[1:-1]),
        coords=centers[:, None],
        tag="model_interval",
        params={"K": K, "N": N, "n_cells": int(n_cells)},
    )


def build_truncated_model(K, N, L, n_cells, ms: ModelSpace | None = None) -> DiscreteMMS:
    """Model interval restricted to [0, L] with the measure renormalized.

    Restriction keeps the one-dimensional curvature condition, so these
    spaces form a family at controlled distance from the full model (diameter
    deficit D - L) for deficit sweeps.
    """
    ms = ms if ms is not None else ModelSpace(K, N)
    if not (0.0 < L <= ms.diameter):
        raise ValueError(f"truncation length must lie in (0, {ms.diameter}], got {L}")
    if n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells}")
    bounds = np.linspace(0.0, L, n_cells + 1)
    total = ms.cumulative(L)
    masses = np.diff(ms.cumulative(bounds)) / total
    masses[-1] += 1.0 - masses.sum()  # absorb rounding so the sum is exactly 1
    centers = 0.5 * (bounds[:-1] + bounds[1:])
    pitch = L / n_cells
    idx = np.arange(n_cells - 1)
    return DiscreteMMS(
        masses=masses,
        edges_i=idx,
        edges_j=idx + 1,
        edge_length=np.full(n_cells - 1, pitch),
        edge_cut=ms.density(bounds[1:-1]) / total,
        coords=centers[:, None],
        tag="truncated_model",
        params={"K": K, "N": N, "L": float(L), "n_cells": int(n_cells)},
    )


def build_suspension(N, fiber_circumference=2 * math.pi, n_t=64, n_theta=32,
                     ms: ModelSpace | None = None) -> DiscreteMMS:
    """Warped-product grid over a circle: [0, pi] x_sin fiber, K = N - 1.

    Meridian cut-weights reproduce the model density at cell boundaries
    exactly (coordinate caps are isoperimetrically exact); parallel
    cut-weights are cell mass over parallel edge length, the calibration that
    reproduces the continuum perimeter of wedges to first order.
    """
    if n_t < 8:
        raise ValueError(f"need n_t >= 8, got {n_t}")
    if n_theta < 3:
        raise ValueError(f"need n_theta >= 3, got {n_theta}")
    ell = float(fiber_circumference)
    if not (0.0 < ell <= 2 * math.pi):
        raise ValueError(f"fiber circumference must lie in (0, 2*pi], got {ell}")
    K = N - 1.0
    ms = ms if ms is not None else ModelSpace(K, N)
    if ms.K != K or ms.N != N:
        raise ValueError("model space parameters disagree with suspension dimension")

    dt = ms.diameter / n_t
    bounds = np.linspace(0.0, ms.diameter, n_t + 1)
    cell_mass = np.diff(ms.cumulative(bounds))
    t_centers = 0.5 * (bounds[:-1] + bounds[1:])
    arc = ell / n_theta

    masses = np.repeat(cell_mass / n_theta, n_theta)
    rows = np.arange(n_t)[:, None] * n_theta
    ks = np.arange(n_theta)[None, :]

    # meridian edges (i,k) -- (i+1,k)
    mer_i = (rows[:-1] + ks).ravel()
    mer_j = (rows[1:] + ks).ravel()
    mer_d = np.full(mer_i.shape, dt)
    mer_s = np.repeat(ms.density(bounds[1:-1]) / n_theta, n_theta)

    # parallel edges (i,k) -- (i,k+1 mod n_theta), warped length sin(t)*arc
    par_i = (rows + ks).ravel()
    par_j = (rows + (ks + 1) % n_theta).ravel()
    plen = np.sin(t_centers) * arc
    par_d = np.repeat(plen, n_theta)
    par_s = np.repeat((cell_mass / n_theta) / plen, n_theta)

    coords = np.column_stack([
        np.repeat(t_centers, n_theta),
        np.tile((np.arange(n_theta) + 0.5) * arc, n_t),
    ])
    return DiscreteMMS(
        masses=masses,
        edges_i=np.concatenate([mer_i, par_i]),
        edges_j=np.concatenate([mer_j, par_j]),
        edge_length=np.concatenate([mer_d, par_d]),
        edge_cut=np.concatenate([mer_s, par_s]),
        coords=coords,
        tag="suspension",
        params={"N": N, "fiber_circumference": ell,
                "n_t": int(n_t), "n_theta": int(n_theta)},
    )


def model_space_of(X: DiscreteMMS, panels: int = 256) -> ModelSpace:
    """The comparison model space recorded in a builder's parameters."""
    p = X.params
    if X.tag == "suspension":
        return ModelSpace(p["N"] - 1.0, p["N"], panels)
    if "K" in p and "N" in p:
        return ModelSpace(p["K"], p["N"], panels)
    raise ValueError(f"space tagged {X.tag!r} does not record (K, N)")


# -- measure-theoretic operations -------------------------------------------


def measure(X: DiscreteMMS, E) -> float:
    """Total mass of a point subset."""
    return float(np.sum(X.masses[X.subset_mask(E)]))


def perimeter(X: DiscreteMMS, E) -> float:
    """Sum of cut-weights over edges with exactly one endpoint in E."""
    mask = X.subset_mask(E)
    cut = mask[X.edges_i] != mask[X.edges_j]
    return float(np.sum(X.edge_cut[cut]))


def edge_gradient(u: SampledFunction) -> np.ndarray:
    """Per-edge difference quotient |u_i - u_j| / d_ij."""
    X = u.space
    return np.abs(u.values[X.edges_i] - u.values[X.edges_j]) / X.edge_length


def slope(u: SampledFunction) -> np.ndarray:
    """Pointwise upper-gradient surrogate: max difference quotient over neighbors."""
    X = u.space
    g = edge_gradient(u)
    out = np.zeros(X.n_points)
    np.maximum.at(out, X.edges_i, g)
    np.maximum.at(out, X.edges_j, g)
    return out


def dirichlet_energy(u: SampledFunction, p: float, scheme: str = "edge") -> float:
    """p-Dirichlet energy of a sampled function.

    The edge scheme weights each edge by its cut-weight,
    sum sigma_e * |du/d|^p * d; with the builders' calibration this is exact
    for radial data on suspensions and reduces to the weighted-interval energy
    in one dimension.  The point scheme integrates the pointwise slope.
    """
    if not (p > 1):
        raise ValueError(f"exponent must exceed 1, got {p}")
    X = u.space
    if scheme == "edge":
        g = edge_gradient(u)
        return float(np.sum(X.edge_cut * g**p * X.edge_length))
    if scheme == "point":
        return float(np.sum(X.masses * slope(u) ** p))
    raise ValueError(f"unknown scheme {scheme!r}")
