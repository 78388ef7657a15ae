"""Young differential equations driven by rough Gaussian paths.

Explicit left-point Euler stepping for dX = b(X)dt + sigma(X)dB with an fBM
driver (guaranteed regime: hurst > 1/2), Holder-seminorm diagnostics,
Gaussian mollification of coefficients, a built-in diffusion whose gradient
is exactly delta-Holder at the origin, the three delta-thresholds governing
uniqueness, and a joint refinement/mollification probe that looks for the
branching a non-unique equation would produce.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import (CapabilityError, ConfigurationError, DomainError,
                     NumericalError, RegimeWarning)
from .fbm import FbmConfig, FbmPath, sample_fbm
from .numerics import _hermite_rule, split_seed
from .sewing import Partition

__all__ = [
    "CoefficientPair",
    "SolutionPath",
    "young_euler_solve",
    "holder_seminorm",
    "mollify_coefficient",
    "builtin_holder_sigma",
    "constant_pair",
    "geometric_pair",
    "holder_pair",
    "bounded_drift",
    "verify_norm_bounds",
    "Thresholds",
    "delta_thresholds",
    "ProbeReport",
    "uniqueness_probe",
]


@dataclass(frozen=True)
class CoefficientPair:
    """Drift and diffusion of a Young equation, with declared smoothness.

    ``drift`` maps states to states; ``diffusion`` maps states to d x d
    matrices.  Both must accept arrays with arbitrary leading batch axes
    when ``vectorized`` is set (the built-ins are).  ``drift_bound`` and
    ``diffusion_bound`` are declared upper bounds for sup|f| + sup|grad f|;
    they are claims, checkable by :func:`verify_norm_bounds`.
    ``grad_holder_delta`` records the Holder exponent of the diffusion's
    gradient when known.
    """
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    dim: int = 1
    name: str = ""
    drift_bound: float | None = None
    diffusion_bound: float | None = None
    grad_holder_delta: float | None = None
    diffusion_jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    vectorized: bool = False

    def __post_init__(self) -> None:
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise ConfigurationError(f"dim must be a positive integer, got {self.dim!r}")


def verify_norm_bounds(pair: CoefficientPair, radius: float = 3.0,
                       n_points: int = 256, seed: int = 0,
                       h: float = 1e-5) -> dict[str, bool]:
    """Probabilistic check that declared C^1 bounds hold on a compact box.

    Samples points uniformly in [-radius, radius]^d, estimates
    sup|f| + sup|grad f| by central differences, and compares against the
    declared bound.  Bounds declared as None are skipped (reported True).
    """
    rng = split_seed(seed, 0).generator()
    pts = rng.uniform(-radius, radius, size=(n_points, pair.dim))
    out: dict[str, bool] = {}
    for tag, fn, bound in (("drift", pair.drift, pair.drift_bound),
                           ("diffusion", pair.diffusion, pair.diffusion_bound)):
        if bound is None:
            out[tag] = True
            continue
        sup_f = 0.0
        sup_g = 0.0
        for x in pts:
            fx = np.asarray(fn(x), dtype=float)
            sup_f = max(sup_f, float(np.max(np.abs(fx))))
            for k in range(pair.dim):
                e = np.zeros(pair.dim)
                e[k] = h
                grad = (np.asarray(fn(x + e), dtype=float)
                        - np.asarray(fn(x - e), dtype=float)) / (2.0 * h)
                sup_g = max(sup_g, float(np.max(np.abs(grad))))
        out[tag] = sup_f + sup_g <= bound * (1.0 + 1e-6)
    return out


@dataclass(frozen=True)
class SolutionPath:
    """Discrete solution of a Young equation on a partition grid."""
    times: np.ndarray
    values: np.ndarray
    dim: int
    solver: str
    step_count: int
    driver: FbmPath

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def _as_state(x0, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if x.shape != (dim,):
        raise DomainError(f"initial state must have shape ({dim},), got {x.shape}")
    return x


def young_euler_solve(coeffs: CoefficientPair, x0, driver: FbmPath,
                      partition: Partition, method: str = "euler") -> SolutionPath:
    """Explicit left-point stepping X_{k+1} = X_k + b(X_k)dt + sigma(X_k)dB.

    The scheme is exact for constant diffusion with zero drift.  Drivers at
    or below hurst 1/2 are outside the guaranteed regime and warn.  The
    ``milstein`` method adds the second-order correction
    (1/2) sigma'(X) sigma(X) (dB)^2 (one-dimensional only, requires
    ``diffusion_jacobian``); it is a rate-study tool, not the contract
    solver.
    """
    if coeffs.dim != driver.dim:
        raise DomainError(
            f"coefficient dimension {coeffs.dim} does not match driver dimension {driver.dim}")
    if method not in ("euler", "milstein"):
        raise ConfigurationError(f"unknown solver method {method!r}")
    if method == "milstein":
        if coeffs.dim != 1:
            raise CapabilityError("milstein correction is one-dimensional")
        if coeffs.diffusion_jacobian is None:
            raise CapabilityError("milstein correction needs diffusion_jacobian")
    if driver.hurst <= 0.5:
        warnings.warn("young_euler_solve outside its guaranteed regime for "
                      f"hurst={driver.hurst}", RegimeWarning, stacklevel=2)
    idx = driver.indices_of(partition.breakpoints)
    bvals = driver.values[idx]
    if driver.dim == 1:
        bvals = bvals[:, None]
    dt = np.diff(partition.breakpoints)
    db = np.diff(bvals, axis=0)
    x = _as_state(x0, coeffs.dim)
    out = np.empty((partition.n_intervals + 1, coeffs.dim))
    out[0] = x
    for k in range(partition.n_intervals):
        xk = x
        bx = np.atleast_1d(np.asarray(coeffs.drift(xk), dtype=float))
        sx = np.asarray(coeffs.diffusion(xk), dtype=float).reshape(coeffs.dim, coeffs.dim)
        x = xk + bx * dt[k] + sx @ db[k]
        if method == "milstein":
            jac = float(np.asarray(coeffs.diffusion_jacobian(xk), dtype=float).reshape(()))
            x = x + 0.5 * jac * float(sx.reshape(())) * db[k] ** 2
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite state at step {k}", step=k)
        out[k + 1] = x
    values = out[:, 0] if coeffs.dim == 1 else out
    return SolutionPath(times=partition.breakpoints.copy(), values=values,
                        dim=coeffs.dim, solver=method,
                        step_count=partition.n_intervals, driver=driver)


def _batched_euler(coeffs: CoefficientPair, x0: np.ndarray, dt: np.ndarray,
                   db: np.ndarray) -> np.ndarray:
    """Euler stepping with a batch of states sharing the step grid.

    x0: (R, d); dt: (N,); db: (N, R, d).  Returns (N+1, R, d).  Requires a
    vectorized coefficient pair; arithmetic per replica matches the public
    solver's ordering.
    """
    n_steps = dt.size
    traj = np.empty((n_steps + 1,) + x0.shape)
    traj[0] = x0
    x = x0
    for k in range(n_steps):
        bx = np.asarray(coeffs.drift(x), dtype=float)
        sx = np.asarray(coeffs.diffusion(x), dtype=float)
        x = x + bx * dt[k] + np.einsum("...ij,...j->...i", sx, db[k])
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite state at step {k}", step=k)
        traj[k + 1] = x
    return traj


def holder_seminorm(path, alpha: float, method: str = "auto") -> float:
    """Discrete alpha-Holder seminorm max |X_t - X_s| / (t-s)^alpha.

    ``method='exact'`` scans all grid pairs (blocked O(n^2)); ``'dyadic'``
    restricts to power-of-two index strides, an O(n log n) lower bound that
    is within a constant factor of the exact value; ``'auto'`` uses the
    exact scan up to 4096 intervals and the dyadic restriction beyond.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    times = np.asarray(path.times, dtype=float)
    values = np.asarray(path.values, dtype=float)
    n = times.size - 1
    if n < 1:
        raise DomainError("path must hold at least two points")
    if values.ndim == 1:
        values = values[:, None]
    if method == "auto":
        method = "exact" if n <= 4096 else "dyadic"
    best = 0.0
    if method == "exact":
        block = 256
        for start in range(0, n, block):
            stop = min(start + block, n)
            dv = values[None, stop:, :] - values[start:stop, None, :]
            dist = np.sqrt(np.sum(dv * dv, axis=-1))
            gap = times[None, stop:] - times[start:stop, None]
            # pairs (i, j) with start <= i < stop <= j are covered by the
            # rectangle; within-block pairs (i < j < stop) need the triangle
            ratio = dist / gap ** alpha
            best = max(best, float(np.max(ratio)) if ratio.size else 0.0)
            dvb = values[None, start + 1:stop, :] - values[start:stop - 1, None, :]
            gapb = times[None, start + 1:stop] - times[start:stop - 1, None]
            mask = gapb > 0.0
            if np.any(mask):
                distb = np.sqrt(np.sum(dvb * dvb, axis=-1))
                best = max(best, float(np.max(distb[mask] / gapb[mask] ** alpha)))
    elif method == "dyadic":
        stride = 1
        while stride <= n:
            dv = values[stride:] - values[:-stride]
            dist = np.sqrt(np.sum(dv * dv, axis=-1))
            gap = times[stride:] - times[:-stride]
            best = max(best, float(np.max(dist / gap ** alpha)))
            stride *= 2
    else:
        raise ConfigurationError(f"unknown seminorm method {method!r}")
    return best


def mollify_coefficient(fn: Callable[[np.ndarray], np.ndarray], scale: float,
                        dim: int = 1, order: int = 32) -> Callable[[np.ndarray], np.ndarray]:
    """Gaussian smoothing x -> E[fn(x + scale Z)], Z standard normal in R^d.

    Evaluated by tensorized Gauss--Hermite quadrature with a fixed summation
    order, so results do not depend on how calls are batched.  Exact for
    affine maps; supports scalar-, vector- and matrix-valued fn.  Dimensions
    above 2 are not supported.
    """
    if not scale > 0.0:
        raise DomainError(f"scale must be positive, got {scale!r}")
    if dim == 1:
        nodes1, w = _hermite_rule(order)
        offsets = nodes1[:, None]
    elif dim == 2:
        nodes1, w1 = _hermite_rule(order)
        xx, yy = np.meshgrid(nodes1, nodes1, indexing="ij")
        offsets = np.column_stack([xx.ravel(), yy.ravel()])
        w = np.outer(w1, w1).ravel()
    else:
        raise CapabilityError("mollification supports dim <= 2")
    q = offsets.shape[0]

    def smooth(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = x[..., None, :] + scale * offsets
        vals = np.asarray(fn(pts), dtype=float)
        base = pts.shape[:-1]
        if vals.shape == base + (dim, dim):
            return np.sum(w[:, None, None] * vals, axis=-3)
        if vals.shape == base + (dim,):
            return np.sum(w[:, None] * vals, axis=-2)
        if vals.shape == base:
            return np.sum(w * vals, axis=-1)
        raise CapabilityError(
            f"cannot infer output kind from shape {vals.shape} at {base}")

    return smooth


def _radial_bump(x: np.ndarray, radius: float) -> np.ndarray:
    """Smooth cutoff: 1 at the origin, support |x| < radius."""
    r2 = np.sum(x * x, axis=-1) / (radius * radius)
    capped = np.minimum(r2, 1.0)
    with np.errstate(divide="ignore"):
        expo = 1.0 - 1.0 / (1.0 - capped)
    return np.where(r2 < 1.0, np.exp(expo), 0.0)


def builtin_holder_sigma(delta: float, dim: int = 1, kappa: float = 0.5,
                         radius: float = 2.0) -> Callable[[np.ndarray], np.ndarray]:
    """Diagonal diffusion whose gradient is exactly delta-Holder at 0.

    sigma(x) = I * (1 + kappa * psi(x) * sign(x_1) |x_1|^(1+delta)) with a
    smooth radial cutoff psi of the given support radius; sigma(0) = I, and
    the scalar factor stays in (1 - kappa', 1 + kappa') so the matrix is
    symmetric positive definite for kappa small enough.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    eye = np.eye(dim)

    def sigma(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x1 = x[..., 0]
        factor = 1.0 + kappa * _radial_bump(x, radius) * np.sign(x1) * np.abs(x1) ** (1.0 + delta)
        return factor[..., None, None] * eye

    return sigma


def _zero_drift(dim: int) -> Callable[[np.ndarray], np.ndarray]:
    def drift(x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))
    return drift


def bounded_drift(strength: float = 0.5, dim: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """Componentwise -strength * tanh(x): smooth, bounded, bounded gradient."""
    def drift(x: np.ndarray) -> np.ndarray:
        return -strength * np.tanh(np.asarray(x, dtype=float))
    return drift


def constant_pair(matrix, dim: int = 1) -> CoefficientPair:
    """Zero drift with a constant diffusion matrix (solver is exact here)."""
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    if mat.shape != (dim, dim):
        raise DomainError(f"matrix must be {dim}x{dim}, got {mat.shape}")
    mat.flags.writeable = False

    def sigma(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(mat, x.shape[:-1] + (dim, dim))

    bound = float(np.max(np.abs(mat)))
    return CoefficientPair(drift=_zero_drift(dim), diffusion=sigma, dim=dim,
                           name="constant", drift_bound=0.0,
                           diffusion_bound=bound, grad_holder_delta=None,
                           vectorized=True)


def geometric_pair() -> CoefficientPair:
    """d=1, zero drift, sigma(x) = x; closed form x0 exp(B_t - B_0)."""
    def sigma(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., 0][..., None, None] * np.eye(1)

    def jac(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1] + (1, 1, 1))

    return CoefficientPair(drift=_zero_drift(1), diffusion=sigma, dim=1,
                           name="geometric", diffusion_jacobian=jac,
                           vectorized=True)


def holder_pair(delta: float, dim: int = 1, kappa: float = 0.5,
                radius: float = 2.0, drift_strength: float = 0.0) -> CoefficientPair:
    """Built-in test equation: optional bounded drift + the delta-Holder sigma."""
    drift = (_zero_drift(dim) if drift_strength == 0.0
             else bounded_drift(drift_strength, dim))
    sigma = builtin_holder_sigma(delta, dim=dim, kappa=kappa, radius=radius)
    return CoefficientPair(
        drift=drift, diffusion=sigma, dim=dim,
        name=f"holder(delta={delta:g},drift={drift_strength:g})",
        drift_bound=2.0 * drift_strength if drift_strength else 0.0,
        diffusion_bound=1.0 + kappa * (radius ** (1.0 + delta)) * 4.0,
        grad_holder_delta=delta, vectorized=True)


class Thresholds(NamedTuple):
    strong: float
    weak: float
    young: float


def delta_thresholds(hurst: float) -> Thresholds:
    """The three gradient-Holder thresholds for uniqueness, by strength.

    strong = (1-H)(2-H)/(H(3-H)); weak = (1-H)(2-H)/(1+H-H^2);
    young = (1-H)/H (the classical pathwise requirement).  For every
    H in (1/2, 1): strong < weak < young, so uniqueness is available below
    the classical threshold.
    """
    H = hurst
    if not 0.5 < H < 1.0:
        raise DomainError(f"hurst must lie in (1/2, 1), got {hurst!r}")
    num = (1.0 - H) * (2.0 - H)
    return Thresholds(strong=num / (H * (3.0 - H)),
                      weak=num / (1.0 + H - H * H),
                      young=(1.0 - H) / H)


@dataclass(frozen=True)
class ProbeReport:
    """Output of :func:`uniqueness_probe`.

    ``pair_table`` rows are (replica, level_a, scale_a, level_b, scale_b,
    sup_distance) over all cell pairs.  ``diag_distances[k]`` is the
    max-over-replicas sup-distance between the k-th diagonal cell and the
    finest diagonal cell; ``fitted_decay`` is the fitted per-index decay
    rate of those distances (positive = shrinking), ``extrapolated_final``
    its prediction at the last comparison, and ``plateau_free`` whether the
    observed final distance stays within 10x that prediction with a
    negative-slope fit (None when there are too few diagonal cells to fit).
    """
    hurst: float
    delta: float
    coefficient_name: str
    x0: float
    levels: tuple[int, ...]
    scales: tuple[float, ...]
    replicas: int
    thresholds: Thresholds
    pair_table: np.ndarray
    diag_levels: tuple[int, ...]
    diag_scales: tuple[float, ...]
    diag_distances: np.ndarray
    fitted_decay: float
    extrapolated_final: float
    max_final_distance: float
    plateau_free: bool | None


def _sup_distance(traj_a: np.ndarray, traj_b: np.ndarray,
                  level_a: int, level_b: int) -> np.ndarray:
    """Per-replica sup distance of two trajectories on their common grid."""
    if level_a <= level_b:
        coarse, fine, gap = traj_a, traj_b, level_b - level_a
    else:
        coarse, fine, gap = traj_b, traj_a, level_a - level_b
    fine = fine[:: 2 ** gap]
    diff = coarse - fine
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    return np.max(dist, axis=0)


def uniqueness_probe(hurst: float, delta: float, *, x0: float = 0.1,
                     mesh_levels: tuple[int, ...] = (8, 9, 10, 11, 12),
                     scales: tuple[float, ...] = (2 ** -4, 2 ** -5, 2 ** -6, 2 ** -7, 2 ** -8),
                     replicas: int = 20, seed: int = 0, horizon: float = 1.0,
                     coeffs: CoefficientPair | None = None,
                     quad_order: int = 32,
                     threads: int | None = None) -> ProbeReport:
    """Joint refinement/mollification probe for pathwise uniqueness.

    For each replica (one driving path), solves the equation on every
    (dyadic mesh level, mollification scale) cell — the diffusion smoothed
    at that scale — and reports all pairwise sup-distances between cell
    solutions of the same replica.  If the equation selected a single
    solution, distances along the diagonal toward the finest cell must decay
    without a plateau; branching (non-uniqueness) would show up as distances
    that stop shrinking.
    """
    levels = tuple(int(l) for l in mesh_levels)
    scales = tuple(float(s) for s in scales)
    if len(levels) < 2 or len(scales) < 2:
        raise ConfigurationError("probe needs at least two mesh levels and two scales")
    if sorted(set(levels)) != list(levels):
        raise ConfigurationError(f"mesh levels must be strictly increasing, got {levels!r}")
    if any(s <= 0.0 for s in scales) or sorted(set(scales), reverse=True) != list(scales):
        raise ConfigurationError(f"scales must be positive and strictly decreasing, got {scales!r}")
    if not (isinstance(replicas, int) and replicas >= 1):
        raise ConfigurationError(f"replicas must be a positive integer, got {replicas!r}")
    if coeffs is None:
        coeffs = holder_pair(delta, dim=1)
    if not coeffs.vectorized:
        raise CapabilityError("uniqueness_probe needs a vectorized coefficient pair")
    dim = coeffs.dim

    finest = levels[-1]
    grid_n = 2 ** finest
    drivers = []
    for r in range(replicas):
        cfg = FbmConfig(hurst=hurst, horizon=horizon, grid_n=grid_n,
                        seed=split_seed(seed, r), dim=dim)
        drivers.append(sample_fbm(cfg, method="circulant"))
    stack = np.stack(
        [d.values[:, None] if dim == 1 else d.values for d in drivers], axis=1)
    times = drivers[0].times
    x0_state = np.full((replicas, dim), float(x0))

    smooth_sigma = {s: mollify_coefficient(coeffs.diffusion, s, dim=dim,
                                           order=quad_order)
                    for s in scales}
    cells = [(lev, sc) for lev in levels for sc in scales]

    def solve_cell(cell: tuple[int, float]) -> np.ndarray:
        lev, sc = cell
        stride = 2 ** (finest - lev)
        sub = stack[::stride]
        dtv = np.diff(times[::stride])
        dbv = np.diff(sub, axis=0)
        pair = replace(coeffs, diffusion=smooth_sigma[sc])
        return _batched_euler(pair, x0_state, dtv, dbv)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajs = dict(zip(cells, pool.map(solve_cell, cells)))
    else:
        trajs = {cell: solve_cell(cell) for cell in cells}

    rows = []
    for i, cell_a in enumerate(cells):
        for cell_b in cells[i + 1:]:
            dists = _sup_distance(trajs[cell_a], trajs[cell_b],
                                  cell_a[0], cell_b[0])
            for r in range(replicas):
                rows.append((float(r), float(cell_a[0]), cell_a[1],
                             float(cell_b[0]), cell_b[1], float(dists[r])))
    pair_table = np.array(rows, dtype=float)

    n_diag = min(len(levels), len(scales))
    lev_pick = [round(k * (len(levels) - 1) / (n_diag - 1)) for k in range(n_diag)]
    sc_pick = [round(k * (len(scales) - 1) / (n_diag - 1)) for k in range(n_diag)]
    diag = [(levels[a], scales[b]) for a, b in zip(lev_pick, sc_pick)]
    fin = diag[-1]
    diag_d = np.array([float(np.max(_sup_distance(trajs[c], trajs[fin],
                                                  c[0], fin[0])))
                       for c in diag[:-1]])

    fitted = float("nan")
    extrapolated = float("nan")
    plateau_free: bool | None = None
    n_fit = n_diag - 2
    if n_fit >= 2 and np.all(diag_d[:n_fit] > 0.0):
        slope, intercept = np.polyfit(np.arange(n_fit), np.log(diag_d[:n_fit]), 1)
        fitted = -float(slope)
        extrapolated = float(np.exp(intercept + slope * (n_diag - 2)))
        plateau_free = bool(slope < 0.0 and diag_d[-1] < 10.0 * extrapolated)

    return ProbeReport(
        hurst=hurst, delta=float(delta), coefficient_name=coeffs.name,
        x0=float(x0), levels=levels, scales=scales, replicas=replicas,
        thresholds=delta_thresholds(hurst), pair_table=pair_table,
        diag_levels=tuple(c[0] for c in diag),
        diag_scales=tuple(c[1] for c in diag),
        diag_distances=diag_d, fitted_decay=fitted,
        extrapolated_final=extrapolated,
        max_final_distance=float(diag_d[-1]),
        plateau_free=plateau_free)
