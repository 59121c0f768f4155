"""First Dirichlet eigenvalues of the weighted p-Laplacian.

Three routes, kept deliberately independent:

* ``lambda_model`` -- the comparison eigenvalue on the weighted interval
  [0, r(v)]: exact tridiagonal inverse iteration for p = 2, Rayleigh-quotient
  descent with monotone-rearrangement projection for general p.
* ``lambda_shooting`` -- an ODE oracle for the same quantity: integrate the
  Euler-Lagrange equation (h |u'|^{p-2} u')' + lambda h u^{p-1} = 0 from the
  singular left endpoint and bisect lambda until the first zero lands at r(v).
* ``lambda_domain`` -- the discrete eigenvalue on a DiscreteMMS domain:
  sparse symmetric solve for p = 2, multi-start descent otherwise.

Eigenfunctions are returned nonnegative with unit L^p norm; the Dirichlet
constraint is exact (values pinned to zero).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import eigsh

from .mms import DiscreteMMS
from .model_space import ModelSpace

__all__ = ["EigenResult", "lambda_model", "lambda_shooting", "lambda_domain",
           "uniqueness_probe", "SolverFailure"]


class SolverFailure(RuntimeError):
    """Raised when an eigenvalue solver cannot certify convergence."""


@dataclass
class EigenResult:
    lambda_: float
    eigenfunction: np.ndarray
    iterations: int
    residual: float
    method: str
    grid: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "lambda": self.lambda_,
            "eigenfunction": self.eigenfunction.tolist(),
            "iterations": self.iterations,
            "residual": self.residual,
            "method": self.method,
            "grid": None if self.grid is None else self.grid.tolist(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def eigenfunction_csv(self):
        """Rows of (x, u(x)); point index when no grid is attached."""
        import csv as _csv
        import io
        buf = io.StringIO()
        wr = _csv.writer(buf, lineterminator="\n")
        wr.writerow(["x", "u"])
        xs = self.grid if self.grid is not None else np.arange(len(self.eigenfunction))
        for x, val in zip(xs, self.eigenfunction):
            wr.writerow([repr(float(x)), repr(float(val))])
        return buf.getvalue()


V_MAX = 1.0 - 1e-3  # Dirichlet point must stay clear of the vanishing tip


def _check_model_args(v, p, n):
    if not (0.0 < v < 1.0):
        raise ValueError(f"volume fraction must lie in (0,1), got {v}")
    if v > V_MAX:
        raise ValueError(f"volume fraction beyond {V_MAX}: the Dirichlet point "
                         "degenerates at the vanishing-density tip")
    if not (p > 1.0):
        raise ValueError(f"exponent must exceed 1, got {p}")
    if n < 64:
        raise ValueError(f"need n >= 64 grid cells, got {n}")


def _model_grid(ms: ModelSpace, v: float, n: int):
    """Uniform grid on [0, r(v)] with exact cell masses and edge densities."""
    R = ms.radius_for_volume(v)
    x = np.linspace(0.0, R, n + 1)
    h_mid = ms.density(0.5 * (x[:-1] + x[1:]))
    # lumped masses: node j owns [x_j - dx/2, x_j + dx/2] clipped to [0, R]
    half = np.concatenate(([x[0]], 0.5 * (x[:-1] + x[1:]), [x[-1]]))
    node_mass = np.diff(ms.cumulative(half))
    return R, x, h_mid, node_mass


def _tridiag_forms(ms, v, n):
    R, x, h_mid, node_mass = _model_grid(ms, v, n)
    dx = R / n
    w = h_mid / dx  # edge stiffness for p = 2
    # free nodes 0..n-1 (node n is the Dirichlet point)
    diag = np.empty(n)
    diag[0] = w[0]
    diag[1:] = w[:-1] + w[1:]
    off = -w[:-1]
    mass = node_mass[:n]
    return R, x, dx, diag, off, mass


def _rayleigh_p2(diag, off, mass, u):
    Au = diag * u
    Au[:-1] += off * u[1:]
    Au[1:] += off * u[:-1]
    return float(u @ Au) / float(u @ (mass * u)), Au


def lambda_model(K, N, v, p, n: int = 1024, tol: float = 1e-10,
                 ms: ModelSpace | None = None, seed: int = 0) -> EigenResult:
    """Comparison first Dirichlet eigenvalue on [0, r(v)] in the model space.

    p = 2: generalized symmetric tridiagonal eigenproblem by shifted inverse
    iteration.  p != 2: normalized Rayleigh-quotient descent with Armijo
    backtracking, re-projected onto its own monotone rearrangement every 10
    steps (the projection never increases the quotient; it is skipped if the
    discrete quotient would grow).
    """
    _check_model_args(v, p, n)
    ms = ms if ms is not None else ModelSpace(K, N)
    if ms.K != K or ms.N != N:
        raise ValueError("model space parameters disagree with (K, N)")
    if p == 2.0:
        return _lambda_model_p2(ms, v, n, tol)
    return _lambda_model_descent(ms, v, p, n, tol, seed)


def _lambda_model_p2(ms, v, n, tol) -> EigenResult:
    R, x, dx, diag, off, mass = _tridiag_forms(ms, v, n)
    # shifted inverse iteration on the pencil (A, M), M diagonal
    u = np.sin(np.pi * (x[:n] + 0.5 * dx) / (2 * R))  # smooth positive start
    u /= math.sqrt(float(u @ (mass * u)))
    lam, _ = _rayleigh_p2(diag, off, mass, u)
    shift = 0.0
    iters = 0
    for it in range(200):
        iters = it + 1
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1] = diag - shift * mass
        ab[2, :-1] = off
        try:
            y = solve_banded((1, 1), ab, mass * u)
        except np.linalg.LinAlgError:
            shift *= 0.99
            continue
        y /= math.sqrt(float(y @ (mass * y)))
        lam_new, Ay = _rayleigh_p2(diag, off, mass, y)
        du = float(np.linalg.norm(Ay - lam_new * mass * y)) / float(np.linalg.norm(mass * y))
        converged = abs(lam_new - lam) <= tol * abs(lam_new)
        u, lam = y, lam_new
        if converged and it >= 1:
            break
        # Rayleigh shift once the iterate has settled, for cubic convergence
        shift = lam_new if it >= 2 else 0.0
    else:
        raise SolverFailure(f"inverse iteration did not converge (lambda ~ {lam})")

    u = np.abs(u)
    full = np.concatenate((u, [0.0]))
    norm = _grid_lp_norm(full, mass, 2.0)
    full /= norm
    lam_q, Au = _rayleigh_p2(diag, off, mass, full[:n])
    resid = float(np.linalg.norm(Au - lam_q * mass * full[:n]))
    return EigenResult(
        lambda_=lam,
        eigenfunction=full,
        iterations=iters,
        residual=max(resid, abs(lam_q - lam)),
        method="exact_p2",
        grid=x,
        diagnostics={"n": n, "R": R, "shift_final": shift},
    )


def _grid_lp_norm(full_u, mass, p):
    return float(np.sum(mass * np.abs(full_u[: len(mass)]) ** p) ** (1.0 / p))


def _model_p_energy(full_u, h_mid, dx, p):
    g = np.abs(np.diff(full_u)) / dx
    return float(np.sum(h_mid * g**p * dx))


def _model_p_energy_grad(full_u, h_mid, dx, p):
    d = np.diff(full_u)
    flux = h_mid * p * np.abs(d) ** (p - 1) * np.sign(d) / dx ** (p - 1)
    grad = np.zeros(len(full_u))
    grad[:-1] -= flux
    grad[1:] += flux
    return grad


def _monotone_sort_projection(vals, node_mass):
    """Rearrange grid values non-increasingly along the grid by mass.

    Values are sorted descending with their node masses; the projected value
    at node j is the sorted value whose mass interval contains node j's mass
    midpoint.  A cheap stand-in for the full rearrangement machinery on a
    fixed weighted grid; callers keep it only when the quotient improves.
    """
    order = np.argsort(-vals, kind="stable")
    sv = vals[order]
    cum = np.concatenate(([0.0], np.cumsum(node_mass[order])))
    mid = np.concatenate(([0.0], np.cumsum(node_mass)))[:-1] + 0.5 * node_mass
    pos = np.clip(np.searchsorted(cum, mid, side="right") - 1, 0, len(sv) - 1)
    return sv[pos]


def _armijo_descent(u0, quotient, gradient, normalize, project, tol,
                    precondition=None, max_iter=30000, window=25):
    """Normalized Rayleigh descent with Armijo backtracking.

    ``precondition`` maps the Rayleigh gradient to the search direction (a
    Sobolev-gradient solve; identity when None) -- the raw gradient is badly
    scaled wherever node masses are tiny.  ``project`` (may be None) is tried
    every 10 accepted steps and kept only if it does not increase the
    quotient.  Converged when the relative quotient decrease over the
    trailing window stays below tol.
    """
    u = normalize(u0)
    q = quotient(u)
    history = [q]
    step = 1.0
    accepted = 0
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        grad = gradient(u, q)
        direction = grad if precondition is None else precondition(grad)
        slope = float(grad @ direction)
        if slope <= 0.0:
            direction = grad
            slope = float(grad @ grad)
            if slope == 0.0:
                return u, q, iters, True
        step = min(step * 2.0, 1e8)
        improved = False
        for _ in range(60):
            trial = u - step * direction
            q_t = quotient(trial)
            if np.isfinite(q_t) and q_t <= q - 1e-4 * step * slope:
                improved = True
                break
            step *= 0.5
        if not improved:
            # stationary to line-search resolution
            return u, q, iters, True
        u = normalize(trial)
        q = quotient(u)
        accepted += 1
        if project is not None and accepted % 10 == 0:
            cand = normalize(project(np.abs(u)))
            q_c = quotient(cand)
            if q_c <= q:
                u, q = cand, q_c
        history.append(q)
        if len(history) > window:
            past = history[-window - 1]
            if past - q <= tol * q:
                return u, q, iters, True
    return u, q, iters, False


def _lambda_model_descent(ms, v, p, n, tol, seed) -> EigenResult:
    R, x, h_mid, node_mass = _model_grid(ms, v, n)
    dx = R / n
    mass = node_mass[:n]
    rng = np.random.default_rng(seed)

    def quotient(full):
        den = float(np.sum(mass * np.abs(full[:n]) ** p))
        if den <= 0:
            return np.inf
        return _model_p_energy(full, h_mid, dx, p) / den

    def gradient(full, q):
        den = float(np.sum(mass * np.abs(full[:n]) ** p))
        grad_num = _model_p_energy_grad(full, h_mid, dx, p)
        grad_den = p * mass * np.abs(full[:n]) ** (p - 1) * np.sign(full[:n])
        grad = np.zeros(n + 1)
        grad[:n] = (grad_num[:n] - q * grad_den) / den
        return grad

    def normalize(full):
        out = full.copy()
        out[n] = 0.0
        nrm = _grid_lp_norm(out, mass, p)
        if nrm <= 0:
            raise SolverFailure("iterate collapsed to zero")
        return out / nrm

    def project(full):
        out = np.empty_like(full)
        out[:n] = _monotone_sort_projection(full[:n], mass)
        out[n] = 0.0
        return out

    # Sobolev preconditioner: banded solve against the p=2 form plus mass
    w = h_mid / dx
    diag = np.empty(n)
    diag[0] = w[0]
    diag[1:] = w[:-1] + w[1:]
    off = -w[:-1]
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag + mass
    ab[2, :-1] = off

    def precondition(g):
        z = np.zeros(n + 1)
        z[:n] = solve_banded((1, 1), ab, g[:n])
        return z

    u0 = np.cos(np.pi * x / (2 * R)) + 0.01 * rng.uniform(size=n + 1)
    u0[n] = 0.0
    u, q, iters, ok = _armijo_descent(u0, quotient, gradient, normalize,
                                      project, tol, precondition=precondition)
    if not ok:
        raise SolverFailure(f"descent did not converge (quotient ~ {q})")
    u = normalize(np.abs(u))
    q = quotient(u)
    return EigenResult(
        lambda_=q,
        eigenfunction=u,
        iterations=iters,
        residual=tol * q,
        method="descent",
        grid=x,
        diagnostics={"n": n, "R": R, "p": p},
    )


# -- shooting oracle ---------------------------------------------------------


def _shoot_first_zero(ms: ModelSpace, lam: float, p: float, R: float,
                      delta_frac: float, rtol: float):
    """Integrate from the singular endpoint; return the first zero of u, or
    None if u stays positive on [delta, R]."""
    N = ms.N
    delta = delta_frac * ms.diameter
    q = 1.0 / (p - 1.0)
    # startup from the regular solution: |u'|^{p-2} u' = -lam * t / N + O(t^3)
    u0 = 1.0 - (lam / N) ** q * delta ** (q + 1.0) / (q + 1.0)
    flux0 = -ms.density(delta) * lam * delta / N

    def rhs(t, y):
        u, flux = y
        h = ms.density(min(t, ms.diameter))
        h = max(h, 1e-300)
        du = -((abs(flux) / h) ** q) if flux < 0 else (abs(flux) / h) ** q
        dflux = -lam * h * max(u, 0.0) ** (p - 1.0)
        return (du, dflux)

    def hit_zero(t, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    sol = solve_ivp(rhs, (delta, R), (u0, flux0), method="RK45",
                    rtol=rtol, atol=1e-12, events=hit_zero, dense_output=False)
    if not sol.success:
        raise SolverFailure(f"ODE integration failed at lambda={lam}: {sol.message}")
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return None


def lambda_shooting(K, N, v, p, tol: float = 1e-8,
                    ms: ModelSpace | None = None,
                    delta_frac: float = 1e-6, rtol: float = 1e-10) -> EigenResult:
    """Shooting oracle for the comparison eigenvalue.

    Bisects lambda so that the first zero of the Euler-Lagrange solution
    lands at r(v).  Independent of the variational solvers; used to
    cross-check them.
    """
    if not (0.0 < v < 1.0) or v > V_MAX:
        raise ValueError(f"volume fraction must lie in (0,{V_MAX}], got {v}")
    if not (p > 1.0):
        raise ValueError(f"exponent must exceed 1, got {p}")
    ms = ms if ms is not None else ModelSpace(K, N)
    R = ms.radius_for_volume(v)

    lo, hi = 1e-6, 1e6
    # shrink the bracket: zero beyond R (or none) -> lambda too small
    zero_lo = _shoot_first_zero(ms, lo, p, R, delta_frac, rtol)
    if zero_lo is not None and zero_lo < R:
        raise SolverFailure("lower bracket already oscillates before r(v)")
    # find a hi that brings the zero inside [0, R]
    hi_try = max(4.0, 4.0 / R**p)
    while hi_try <= hi:
        if _shoot_first_zero(ms, hi_try, p, R, delta_frac, rtol) is not None:
            hi = hi_try
            break
        hi_try *= 4.0
    else:
        raise SolverFailure(f"no eigenvalue bracket found in [{lo}, {hi}]")

    iters = 0
    for _ in range(200):
        iters += 1
        mid = 0.5 * (lo + hi)
        z = _shoot_first_zero(ms, mid, p, R, delta_frac, rtol)
        if z is None or z > R:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    lam = 0.5 * (lo + hi)

    # sample the eigenfunction at the converged lambda for the result record
    delta = delta_frac * ms.diameter
    grid = np.linspace(delta, R, 513)
    q = 1.0 / (p - 1.0)
    u0 = 1.0 - (lam / ms.N) ** q * delta ** (q + 1.0) / (q + 1.0)
    flux0 = -ms.density(delta) * lam * delta / ms.N

    def rhs(t, y):
        u, flux = y
        h = max(ms.density(min(t, ms.diameter)), 1e-300)
        du = math.copysign((abs(flux) / h) ** q, flux)
        dflux = -lam * h * max(u, 0.0) ** (p - 1.0)
        return (du, dflux)

    sol = solve_ivp(rhs, (delta, R), (u0, flux0), t_eval=grid,
                    method="RK45", rtol=rtol, atol=1e-12)
    vals = np.maximum(sol.y[0], 0.0) if sol.success else np.full(len(grid), np.nan)
    full_grid = np.concatenate(([0.0], grid))
    vals = np.concatenate(([1.0], vals))
    vals[-1] = 0.0
    cell = np.diff(ms.cumulative(full_grid))
    nrm = float(np.sum(cell * np.abs(vals[:-1]) ** p) ** (1 / p))
    if nrm > 0:
        vals = vals / nrm
    return EigenResult(
        lambda_=lam,
        eigenfunction=vals,
        iterations=iters,
        residual=(hi - lo) / lam,
        method="shooting",
        grid=full_grid,
        diagnostics={"bracket": [lo, hi], "delta": delta, "rtol": rtol,
                     "R": R, "p": p},
    )


# -- discrete domains --------------------------------------------------------


def _graph_p_energy_grad(X, u, p):
    d = u[X.edges_i] - u[X.edges_j]
    w = X.edge_cut / X.edge_length ** (p - 1.0)
    flux = w * p * np.abs(d) ** (p - 1.0) * np.sign(d)
    grad = np.zeros(len(u))
    np.add.at(grad, X.edges_i, flux)
    np.subtract.at(grad, X.edges_j, flux)
    return grad


def _graph_p_energy(X, u, p):
    d = np.abs(u[X.edges_i] - u[X.edges_j])
    w = X.edge_cut / X.edge_length ** (p - 1.0)
    return float(np.sum(w * d**p))


def lambda_domain(X: DiscreteMMS, omega, p: float = 2.0, tol: float = 1e-10,
                  n_starts: int = 4, seed: int = 0) -> EigenResult:
    """First Dirichlet eigenvalue on a discrete domain.

    Functions vanish outside omega.  p = 2 uses a sparse symmetric
    shift-invert eigensolve (exact); other p run ``n_starts`` independent
    Rayleigh descents and keep the best.  The eigenfunction comes back
    nonnegative with unit L^p norm, embedded on the full point set.
    """
    if not (p > 1.0):
        raise ValueError(f"exponent must exceed 1, got {p}")
    mask = X.subset_mask(omega)
    vol = float(np.sum(X.masses[mask]))
    if not mask.any():
        raise ValueError("domain must be nonempty")
    if mask.all():
        raise ValueError("domain must be a proper subset for a Dirichlet problem")
    idx = np.flatnonzero(mask)
    if p == 2.0:
        return _lambda_domain_p2(X, mask, idx, tol, vol)
    return _lambda_domain_descent(X, mask, idx, p, tol, n_starts, seed, vol)


def _lambda_domain_p2(X, mask, idx, tol, vol) -> EigenResult:
    n = X.n_points
    w = X.edge_cut / X.edge_length
    rows = np.concatenate([X.edges_i, X.edges_j, X.edges_i, X.edges_j])
    cols = np.concatenate([X.edges_j, X.edges_i, X.edges_i, X.edges_j])
    vals = np.concatenate([-w, -w, w, w])
    L = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A = L[idx][:, idx]
    M = diags(X.masses[idx])
    # deterministic positive start: never orthogonal to the ground state,
    # and keeps repeated runs bit-identical (ARPACK would otherwise seed
    # its starting vector randomly)
    v0 = np.sqrt(X.masses[idx])
    try:
        lam, vec = eigsh(A, k=1, M=M, sigma=0.0, which="LM", tol=0, v0=v0)
    except Exception as exc:  # pragma: no cover - depends on ARPACK internals
        raise SolverFailure(f"sparse eigensolve failed: {exc}") from exc
    lam = float(lam[0])
    u = np.abs(vec[:, 0])
    full = np.zeros(n)
    full[idx] = u
    nrm = float(np.sum(X.masses * full**2) ** 0.5)
    full /= nrm
    Au = A @ full[idx]
    resid = float(np.linalg.norm(Au - lam * X.masses[idx] * full[idx]))
    return EigenResult(
        lambda_=lam,
        eigenfunction=full,
        iterations=1,
        residual=resid,
        method="exact_p2",
        grid=None,
        diagnostics={"n_domain": int(len(idx)), "volume": vol},
    )


def _lambda_domain_descent(X, mask, idx, p, tol, n_starts, seed, vol) -> EigenResult:
    rng = np.random.default_rng(seed)
    masses = X.masses

    def quotient(vec):
        den = float(np.sum(masses * np.abs(vec) ** p))
        if den <= 0:
            return np.inf
        return _graph_p_energy(X, vec, p) / den

    def gradient(vec, q):
        den = float(np.sum(masses * np.abs(vec) ** p))
        grad = (_graph_p_energy_grad(X, vec, p)
                - q * p * masses * np.abs(vec) ** (p - 1.0) * np.sign(vec)) / den
        grad[~mask] = 0.0
        return grad

    def normalize(vec):
        out = np.where(mask, vec, 0.0)
        nrm = float(np.sum(masses * np.abs(out) ** p) ** (1 / p))
        if nrm <= 0:
            raise SolverFailure("iterate collapsed to zero")
        return out / nrm

    # Sobolev preconditioner: factor the domain-restricted p=2 form once
    from scipy.sparse.linalg import factorized
    n = X.n_points
    w = X.edge_cut / X.edge_length
    rows = np.concatenate([X.edges_i, X.edges_j, X.edges_i, X.edges_j])
    cols = np.concatenate([X.edges_j, X.edges_i, X.edges_i, X.edges_j])
    vals = np.concatenate([-w, -w, w, w])
    L = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A = (L[idx][:, idx] + diags(masses[idx])).tocsc()
    solve = factorized(A)

    def precondition(g):
        z = np.zeros(n)
        z[idx] = solve(g[idx])
        return z

    best = None
    failures = []
    total_iters = 0
    for start in range(n_starts):
        u0 = np.zeros(X.n_points)
        u0[idx] = rng.uniform(0.2, 1.0, len(idx))
        try:
            u, q, iters, ok = _armijo_descent(u0, quotient, gradient,
                                              normalize, None, tol,
                                              precondition=precondition)
        except SolverFailure as exc:
            failures.append(str(exc))
            continue
        total_iters += iters
        if not ok:
            failures.append(f"start {start}: no convergence (q ~ {q})")
            continue
        u = normalize(np.abs(u))
        q = quotient(u)
        if best is None or q < best[0]:
            best = (q, u)
    if best is None:
        raise SolverFailure(f"all {n_starts} descent starts failed: {failures}")
    q, u = best
    return EigenResult(
        lambda_=q,
        eigenfunction=u,
        iterations=total_iters,
        residual=tol * q,
        method="descent",
        grid=None,
        diagnostics={"n_domain": int(len(idx)), "volume": vol,
                     "n_starts": n_starts, "failed_starts": len(failures),
                     "p": p},
    )


def uniqueness_probe(X: DiscreteMMS, omega, p: float, n_starts: int = 8,
                     seed: int = 0) -> float:
    """Evidence for uniqueness of the first eigenfunction.

    Runs independent random-start descents and returns the largest pairwise
    L^p distance after normalization (signs are already fixed by
    nonnegativity).  Small values indicate a unique minimizer; the value is
    reported, not asserted.
    """
    mask = X.subset_mask(omega)
    results = []
    for s in range(n_starts):
        try:
            # always the descent route, even for p = 2: independent random
            # starts are the point, not the deterministic sparse solve
            res = _lambda_domain_descent(X, mask, np.flatnonzero(mask), p,
                                         1e-11, 1, seed * 1000 + s,
                                         float(np.sum(X.masses[mask])))
            results.append(res.eigenfunction)
        except SolverFailure:
            continue
    if len(results) < 2:
        return 0.0
    worst = 0.0
    for a in range(len(results)):
        for b in range(a + 1, len(results)):
            diff = results[a] - results[b]
            dist = float(np.sum(X.masses * np.abs(diff) ** p) ** (1 / p))
            worst = max(worst, dist)
    return worst
