"""Experiment commands: reproducible audit runs driven by config mappings.

Every command is a pure function of (config, seed): outputs are CSV tables
with deterministic float formatting plus a JSON manifest echoing the config.
Audit outcomes map to process exit codes in the CLI layer: 0 all pass,
2 audit violation, 3 solver failure, 4 config error.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import __version__
from .eigensolver import SolverFailure, lambda_domain, lambda_model, lambda_shooting, uniqueness_probe
from .functionals import polya_szego_report
from .mms import (
    DiscreteMMS,
    SampledFunction,
    build_model_interval,
    build_suspension,
    build_truncated_model,
    measure,
    model_space_of,
    slope,
)
from .model_space import ModelSpace
from .rearrangement import distribution, rearrange

__all__ = [
    "ConfigError",
    "AuditViolation",
    "random_lipschitz_function",
    "cap_domain",
    "band_domain",
    "random_connected_domain",
    "geodesic_ball_domain",
    "cmd_model_profile",
    "cmd_model_lambda",
    "cmd_rearrange",
    "cmd_ps_check",
    "cmd_gap_check",
    "cmd_rigidity_probe",
    "cmd_almost_rigidity_sweep",
    "COMMANDS",
    "PS_AUDIT_C",
    "GAP_AUDIT_C",
]


class ConfigError(ValueError):
    pass


class AuditViolation(RuntimeError):
    pass


# Frozen audit constants.  PS_AUDIT_C was calibrated on radial profiles
# (cap and full-interval cosines, p in {1.5, 2, 3}, n_t in 64..512), where
# |deficit| * n_t / energy stays below 0.9; the factor-10 margin covers
# generic level-set geometry at the same first order.  GAP_AUDIT_C comes from
# coordinate caps, whose half-cell boundary offset gives deficit * n_t down
# to -4.8.
PS_AUDIT_C = 9.0
GAP_AUDIT_C = 8.0


# -- config plumbing ---------------------------------------------------------


def _require(cfg, key, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config key {key!r} must be {kind}, got {type(val)}")
    return val


def builder_from_config(cfg) -> DiscreteMMS:
    kind = _require(cfg, "kind", str)
    try:
        if kind == "model_interval":
            return build_model_interval(cfg["K"], cfg["N"], int(cfg["n_cells"]))
        if kind == "truncated_model":
            return build_truncated_model(cfg["K"], cfg["N"], float(cfg["L"]),
                                         int(cfg["n_cells"]))
        if kind == "suspension":
            return build_suspension(cfg["N"],
                                    cfg.get("fiber_circumference", 2 * math.pi),
                                    int(cfg.get("n_t", 64)),
                                    int(cfg.get("n_theta", 32)))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad space config: {exc}") from exc
    raise ConfigError(f"unknown space kind {kind!r}")


def _length_graph(X: DiscreteMMS):
    n = X.n_points
    g = coo_matrix((X.edge_length, (X.edges_i, X.edges_j)), shape=(n, n)).tocsr()
    return g + g.T


def _write_csv(path: Path, header, rows):
    def fmt(x):
        if isinstance(x, float):
            return repr(x)
        if isinstance(x, (np.floating,)):
            return repr(float(x))
        if isinstance(x, (np.integer,)):
            return str(int(x))
        return str(x)

    lines = [",".join(header)]
    lines += [",".join(fmt(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(out: Path, command, config, seed, files, summary):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "files": sorted(files),
        "summary": summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- random test functions and domains ---------------------------------------


def random_lipschitz_function(X: DiscreteMMS, rng: np.random.Generator,
                              n_bumps_range=(3, 8), radius_range=(0.35, 1.1),
                              height_range=(0.3, 1.0),
                              gradient_floor: float = 0.05) -> SampledFunction:
    """Sum of random cone bumps, regularized away from flat spots.

    Bumps are hats of the graph metric around random centers.  Wherever the
    function is positive, a multiple of the distance to its own zero set is
    added (nothing is added when the function never vanishes), so the
    discrete gradient is bounded away from zero on the support.
    """
    g = _length_graph(X)
    k = int(rng.integers(n_bumps_range[0], n_bumps_range[1] + 1))
    centers = rng.choice(X.n_points, size=k, replace=False)
    d = dijkstra(g, indices=centers)
    radii = rng.uniform(*radius_range, size=k)
    heights = rng.uniform(*height_range, size=k)
    vals = np.zeros(X.n_points)
    for i in range(k):
        vals += heights[i] * np.maximum(0.0, 1.0 - d[i] / radii[i])

    zero = vals == 0.0
    if zero.any() and (~zero).any():
        d0 = dijkstra(g, indices=np.flatnonzero(zero), min_only=True)
        vals = np.where(zero, 0.0, vals + gradient_floor * d0)

    u = SampledFunction(X, vals)
    # flat interior spots (bump plateaus overlapping) are measure-degenerate;
    # jitter them deterministically if any survive
    s = slope(u)
    bad = (vals > 0) & (s == 0.0)
    if bad.any():
        vals = vals + np.where(bad, 1e-6 * rng.uniform(0.5, 1.0, X.n_points), 0.0)
        u = SampledFunction(X, vals)
    return u


def cap_domain(X: DiscreteMMS, v: float) -> np.ndarray:
    """Coordinate cap {t <= c} with measure closest to v (exact at cell cuts)."""
    t = X.coords[:, 0]
    order = np.argsort(t, kind="stable")
    cum = np.cumsum(X.masses[order])
    k = int(np.argmin(np.abs(cum - v))) + 1
    return order[:k]


def band_domain(X: DiscreteMMS, v: float, t_start: float) -> np.ndarray:
    """Band {t_start < t <= c} with measure closest to v."""
    t = X.coords[:, 0]
    inside = np.flatnonzero(t > t_start)
    order = inside[np.argsort(t[inside], kind="stable")]
    cum = np.cumsum(X.masses[order])
    if cum[-1] < v:
        raise ConfigError(f"band starting at {t_start} cannot reach measure {v}")
    k = int(np.argmin(np.abs(cum - v))) + 1
    return order[:k]


def random_connected_domain(X: DiscreteMMS, v: float,
                            rng: np.random.Generator) -> np.ndarray:
    """Connected set grown by randomized breadth-first accretion to measure v."""
    n = X.n_points
    neigh = [[] for _ in range(n)]
    for a, b in zip(X.edges_i, X.edges_j):
        neigh[a].append(int(b))
        neigh[b].append(int(a))
    start = int(rng.integers(n))
    chosen = np.zeros(n, dtype=bool)
    chosen[start] = True
    frontier = list(neigh[start])
    total = X.masses[start]
    while total < v and frontier:
        pick = int(rng.integers(len(frontier)))
        node = frontier.pop(pick)
        if chosen[node]:
            continue
        chosen[node] = True
        total += X.masses[node]
        frontier.extend(nb for nb in neigh[node] if not chosen[nb])
    return np.flatnonzero(chosen)


def geodesic_ball_domain(X: DiscreteMMS, center: int, v: float) -> np.ndarray:
    """Graph-metric ball around a point, filled to measure v."""
    g = _length_graph(X)
    d = dijkstra(g, indices=center)
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(X.masses[order])
    k = int(np.argmin(np.abs(cum - v))) + 1
    return order[:k]


def nearest_node(X: DiscreteMMS, coords) -> int:
    diff = X.coords - np.asarray(coords, dtype=float)[None, :]
    return int(np.argmin(np.sum(diff**2, axis=1)))


# -- commands -----------------------------------------------------------------


def cmd_model_profile(config: dict, out: Path, seed: int | None = None) -> int:
    K = float(config.get("K", 1.0))
    N = float(config.get("N", 2.0))
    count = int(config.get("v_count", 101))
    if count < 2:
        raise ConfigError("v_count must be at least 2")
    ms = ModelSpace(K, N, int(config.get("panels", 256)))
    v = np.linspace(0.0, 1.0, count)
    r = ms.radius_for_volume(v)
    prof = ms.iso_profile(v)
    rows = [(float(vi), float(ri), float(pi)) for vi, ri, pi in zip(v, r, prof)]
    _write_csv(out / "model_profile.csv", ["v", "r", "profile"], rows)
    sym_gap = float(np.max(np.abs(prof - prof[::-1])))
    _write_manifest(out, "model-profile", config, seed,
                    ["model_profile.csv"],
                    {"K": K, "N": N, "symmetry_gap": sym_gap})
    if sym_gap > 1e-10:
        raise AuditViolation(f"profile symmetry violated: {sym_gap}")
    return 0


def cmd_model_lambda(config: dict, out: Path, seed: int | None = None) -> int:
    Ks = config.get("K", [1.0])
    Ns = config.get("N", [2.0])
    vs = config.get("v", [0.25, 0.5])
    ps = config.get("p", [1.5, 2.0, 3.0])
    n = int(config.get("n", 1024))
    tol = float(config.get("tol", 1e-10))
    max_disc = float(config.get("max_discrepancy", 1e-3))
    Ks = [Ks] if isinstance(Ks, (int, float)) else list(Ks)
    Ns = [Ns] if isinstance(Ns, (int, float)) else list(Ns)
    vs = [vs] if isinstance(vs, (int, float)) else list(vs)
    ps = [ps] if isinstance(ps, (int, float)) else list(ps)

    rows = []
    failures = 0
    worst = 0.0
    for K in sorted(Ks):
        for N in sorted(Ns):
            ms = ModelSpace(float(K), float(N))
            for v in sorted(vs):
                for p in sorted(ps):
                    try:
                        a = lambda_model(K, N, v, p, n=n, tol=tol, ms=ms)
                        b = lambda_shooting(K, N, v, p, tol=1e-7, ms=ms)
                        disc = abs(a.lambda_ - b.lambda_) / b.lambda_
                        worst = max(worst, disc)
                        rows.append((K, N, v, p, a.lambda_, b.lambda_, disc,
                                     a.method, "ok"))
                    except SolverFailure as exc:
                        failures += 1
                        rows.append((K, N, v, p, math.nan, math.nan, math.nan,
                                     "none", f"failed: {exc}"))
    _write_csv(out / "model_lambda.csv",
               ["K", "N", "v", "p", "lambda_variational", "lambda_shooting",
                "discrepancy", "method", "status"], rows)
    _write_manifest(out, "model-lambda", config, seed, ["model_lambda.csv"],
                    {"worst_discrepancy": worst, "solver_failures": failures})
    if failures:
        raise SolverFailure(f"{failures} sweep points failed")
    if worst > max_disc:
        raise AuditViolation(f"cross-method discrepancy {worst} > {max_disc}")
    return 0


def cmd_rearrange(config: dict, out: Path, seed: int | None = None) -> int:
    X = builder_from_config(_require(config, "space", dict))
    ms = model_space_of(X)
    fn = config.get("function", {"kind": "radial_cos"})
    kind = fn.get("kind", "radial_cos")
    if kind == "radial_cos":
        vals = np.maximum(0.0, np.cos(X.coords[:, 0]))
        u = SampledFunction(X, vals)
    elif kind == "bumps":
        if seed is None:
            raise ConfigError("randomized function needs a seed")
        rng = np.random.default_rng(seed)
        u = random_lipschitz_function(X, rng)
    else:
        raise ConfigError(f"unknown function kind {kind!r}")
    J = int(config.get("J", X.params.get("n_cells") or X.params.get("n_t") or 256))
    w = rearrange(u, ms=ms, J=J, grid=config.get("grid", "uniform-x"))
    df = distribution(u)
    _write_csv(out / "rearranged.csv", ["x", "ustar"],
               list(zip(w.grid.tolist(), w.values.tolist())))
    _write_csv(out / "distribution.csv", ["threshold", "mass_above"],
               list(zip(df.thresholds.tolist(), df.masses.tolist())))
    norm_gap = 0.0
    from .rearrangement import lp_norm, lp_norm_df
    for p in (1.0, 2.0, 3.5):
        a = lp_norm(u, p=p)
        b = lp_norm_df(df, p)
        if a > 0:
            norm_gap = max(norm_gap, abs(a - b) / a)
    _write_manifest(out, "rearrange", config, seed,
                    ["rearranged.csv", "distribution.csv"],
                    {"r": w.r, "levels": len(df.thresholds),
                     "norm_roundtrip_gap": norm_gap})
    if norm_gap > 1e-10:
        raise AuditViolation(f"norm preservation violated: {norm_gap}")
    return 0


def cmd_ps_check(config: dict, out: Path, seed: int | None = None) -> int:
    if seed is None:
        raise ConfigError("ps-check needs a seed")
    X = builder_from_config(_require(config, "space", dict))
    ms = model_space_of(X)
    count = int(config.get("count", 100))
    ps = config.get("p", [1.5, 2.0, 3.0])
    ps = [ps] if isinstance(ps, (int, float)) else sorted(ps)
    n_res = int(X.params.get("n_cells") or X.params.get("n_t") or 256)
    tol_c = float(config.get("audit_constant", PS_AUDIT_C))
    rng = np.random.default_rng(seed)

    rows = []
    violations = 0
    for i in range(count):
        u = random_lipschitz_function(X, rng)
        for p in ps:
            rep = polya_szego_report(u, p=p, ms=ms)
            if rep.energy_in <= 0:
                continue
            rel = rep.deficit / rep.energy_in
            bad = rel < -tol_c / n_res
            violations += bad
            rows.append((i, p, rep.energy_in, rep.energy_model, rep.deficit,
                         rel, int(bad)))
    _write_csv(out / "ps_check.csv",
               ["sample", "p", "energy_in", "energy_model", "deficit",
                "relative_deficit", "violation"], rows)
    worst = min((r[5] for r in rows), default=0.0)
    _write_manifest(out, "ps-check", config, seed, ["ps_check.csv"],
                    {"count": count, "violations": int(violations),
                     "worst_relative_deficit": worst,
                     "tolerance": -tol_c / n_res})
    if violations:
        raise AuditViolation(f"{violations} Polya-Szego violations")
    return 0


def cmd_gap_check(config: dict, out: Path, seed: int | None = None) -> int:
    X = builder_from_config(_require(config, "space", dict))
    p = float(config.get("p", 2.0))
    v = float(config.get("v", 0.5))
    n_model = int(config.get("n_model", 2048))
    n_res = int(X.params.get("n_cells") or X.params.get("n_t") or 256)
    tol_c = float(config.get("audit_constant", GAP_AUDIT_C))
    n_random = int(config.get("random_domains", 0))
    if n_random and seed is None:
        raise ConfigError("random domains need a seed")
    rng = np.random.default_rng(seed if seed is not None else 0)
    msc = model_space_of(X)

    domains = [("cap", cap_domain(X, v))]
    if "band_start" in config:
        domains.append(("band", band_domain(X, v, float(config["band_start"]))))
    for i in range(n_random):
        domains.append((f"random_{i}", random_connected_domain(X, v, rng)))

    rows = []
    violations = 0
    failures = 0
    for name, dom in domains:
        vol = measure(X, dom)
        try:
            lam = lambda_domain(X, dom, p=p).lambda_
            ref = lambda_model(msc.K, msc.N, vol, p, n=n_model, ms=msc).lambda_
            deficit = lam - ref
            bad = deficit < -tol_c / n_res * ref
            violations += bad
            rows.append((name, vol, lam, ref, deficit, int(bad), "ok"))
        except SolverFailure as exc:
            failures += 1
            rows.append((name, vol, math.nan, math.nan, math.nan, 0,
                         f"failed: {exc}"))
    rows.sort(key=lambda r: r[0])
    _write_csv(out / "gap_check.csv",
               ["domain", "volume", "lambda_domain", "lambda_model",
                "deficit", "violation", "status"], rows)
    _write_manifest(out, "gap-check", config, seed, ["gap_check.csv"],
                    {"violations": int(violations), "failures": failures,
                     "tolerance_factor": tol_c / n_res})
    if failures:
        raise SolverFailure(f"{failures} domains failed to solve")
    if violations:
        raise AuditViolation(f"{violations} spectral-gap violations")
    return 0


def cmd_rigidity_probe(config: dict, out: Path, seed: int | None = None) -> int:
    if seed is None:
        raise ConfigError("rigidity-probe needs a seed")
    N = float(config.get("N", 2.0))
    p = float(config.get("p", 2.0))
    v = float(config.get("v", 0.5))
    n_list = config.get("n_t", [64, 128, 256])
    n_list = [n_list] if isinstance(n_list, int) else sorted(int(x) for x in n_list)
    n_theta = int(config.get("n_theta", 16))
    shift_angle = float(config.get("shift_angle", 0.3))
    n_starts = int(config.get("uniqueness_starts", 8))
    ms = ModelSpace(N - 1.0, N)

    cap_rows = []
    for n_t in n_list:
        S = build_suspension(N, n_t=n_t, n_theta=n_theta, ms=ms)
        t = S.coords[:, 0]
        # (a) radial cap-profile input: energy deficit under rearrangement
        R = ms.radius_for_volume(v)
        prof = np.maximum(0.0, np.cos(t * (math.pi / 2) / R))
        prof[t >= R] = 0.0
        u = SampledFunction(S, prof)
        rep = polya_szego_report(u, p=p, ms=ms)
        ps_rel = abs(rep.deficit) / rep.energy_in
        # (b) cap-domain eigenfunction vs radial model eigenfunction
        dom = cap_domain(S, v)
        eig = lambda_domain(S, dom, p=p)
        ref = lambda_model(ms.K, ms.N, measure(S, dom), p, n=2048, ms=ms)
        radial = np.interp(t, ref.grid, ref.eigenfunction, right=0.0)
        radial_fn = SampledFunction(S, radial)
        nrm = float(np.sum(S.masses * np.abs(radial) ** p) ** (1 / p))
        dist = float(np.sum(S.masses * np.abs(eig.eigenfunction - radial / nrm) ** p)
                     ** (1 / p))
        gap_deficit = eig.lambda_ - ref.lambda_
        cap_rows.append((n_t, rep.energy_in, rep.deficit, ps_rel, eig.lambda_,
                         ref.lambda_, gap_deficit, dist))

    # shifted cap: the coordinate cap with its bottom moved off the tip by
    # the shift angle, i.e. the band {shift < t <= c} of the same measure.
    # At shift 0 this is the cap itself; for positive shifts it is no longer
    # a metric ball at a tip, so its deficit stays bounded away from zero.
    # (A geodesic ball recentred off the tip would be isometric to the cap
    # by the homogeneity of the round sphere and probes nothing.)
    S = build_suspension(N, n_t=n_list[-1], n_theta=n_theta, ms=ms)
    band = band_domain(S, v, shift_angle) if shift_angle > 0 else cap_domain(S, v)
    lam_band = lambda_domain(S, band, p=p).lambda_
    ref_val = lambda_model(ms.K, ms.N, measure(S, band), p, n=2048, ms=ms).lambda_
    shifted_deficit = lam_band - ref_val

    spread = uniqueness_probe(S, cap_domain(S, v), p=p, n_starts=n_starts,
                              seed=seed)

    _write_csv(out / "rigidity_cap.csv",
               ["n_t", "energy_in", "ps_deficit", "ps_relative",
                "lambda_domain", "lambda_model", "gap_deficit",
                "eigenfunction_distance"], cap_rows)
    _write_csv(out / "rigidity_probes.csv",
               ["probe", "value"],
               [("shifted_cap_deficit", shifted_deficit),
                ("shift_angle", shift_angle),
                ("uniqueness_spread", spread)])
    halving = [a[3] / b[3] for a, b in zip(cap_rows, cap_rows[1:])]
    summary = {
        "ps_relative": [r[3] for r in cap_rows],
        "halving_ratios": halving,
        "eigen_distances": [r[7] for r in cap_rows],
        "shifted_cap_deficit": shifted_deficit,
        "uniqueness_spread": spread,
    }
    _write_manifest(out, "rigidity-probe", config, seed,
                    ["rigidity_cap.csv", "rigidity_probes.csv"], summary)

    for r in cap_rows:
        if r[7] > 5.0 / r[0]:
            raise AuditViolation(
                f"eigenfunction distance {r[7]} exceeds 5/n_t at n_t={r[0]}")
    if shifted_deficit < float(config.get("min_shifted_deficit", 0.05)):
        raise AuditViolation(
            f"shifted-cap deficit {shifted_deficit} below the rigidity floor")
    if p == 2.0 and spread > 1e-4:
        raise AuditViolation(f"uniqueness probe spread {spread} > 1e-4")
    return 0


def cmd_almost_rigidity_sweep(config: dict, out: Path, seed: int | None = None) -> int:
    N = float(config.get("N", 2.0))
    p = float(config.get("p", 2.0))
    v = float(config.get("v", 0.3))
    fractions = config.get("L_fractions", [1.0, 0.9, 0.75, 0.5])
    n_cells = int(config.get("n_cells", 2048))
    n_model = int(config.get("n_model", 4096))
    K = N - 1.0
    ms = ModelSpace(K, N)
    ref = lambda_model(K, N, v, p, n=n_model, ms=ms).lambda_

    rows = []
    for frac in sorted(fractions, reverse=True):
        L = float(frac) * ms.diameter
        X = build_truncated_model(K, N, L, n_cells, ms=ms)
        # initial segment of measure ~v, rounded conservatively: the discrete
        # Dirichlet wall sits at the first excluded cell center, so the
        # domain is chosen to keep that wall inside [0, r_trunc(v)] -- the
        # comparison then cannot go negative by a grid offset
        total = ms.cumulative(L)
        r_v = ms.radius_for_volume(v * total)
        pitch = L / n_cells
        k = max(1, int(math.floor(r_v / pitch - 0.5)))
        dom = np.arange(k)
        vol = measure(X, dom)
        lam = lambda_domain(X, dom, p=p).lambda_
        ref_v = lambda_model(K, N, v, p, n=n_model, ms=ms).lambda_
        delta = lam - ref_v
        rows.append((L, ms.diameter - L, vol, lam, ref_v, delta))
    _write_csv(out / "almost_rigidity.csv",
               ["L", "diameter_deficit", "volume", "lambda_truncated",
                "lambda_model", "delta"], rows)

    deltas = {round(r[0] / ms.diameter, 12): r[5] for r in rows}
    tol_disc = float(config.get("tol_disc", 10.0 / n_cells)) * ref
    summary = {"reference_lambda": ref, "deltas": [r[5] for r in rows],
               "tol_disc": tol_disc}
    _write_manifest(out, "almost-rigidity-sweep", config, seed,
                    ["almost_rigidity.csv"], summary)

    full = deltas.get(1.0)
    if full is not None and abs(full) > tol_disc:
        raise AuditViolation(f"delta at L=D is {full}, beyond {tol_disc}")
    for r in rows:
        if r[5] < -tol_disc:
            raise AuditViolation(f"negative deficit {r[5]} at L={r[0]}")
    return 0


COMMANDS = {
    "model-profile": cmd_model_profile,
    "model-lambda": cmd_model_lambda,
    "rearrange": cmd_rearrange,
    "ps-check": cmd_ps_check,
    "gap-check": cmd_gap_check,
    "rigidity-probe": cmd_rigidity_probe,
    "almost-rigidity-sweep": cmd_almost_rigidity_sweep,
}
