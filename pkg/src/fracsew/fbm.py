"""Fractional Brownian motion: covariance structure, exact samplers, and
conditional increment moments.

The process is normalized so that the variance of an increment over a lag u
is ``c_h(H) * u**(2H)`` where ``c_h`` is the moving-average constant below
(``c_h(1/2) == 1``, so H = 1/2 is standard Brownian motion).  All samplers
draw from the same law; they differ in cost and in what provenance they can
attach to the path:

``cholesky``
    exact covariance via a dense Cholesky factor, O(n^2) memory;
``circulant``
    exact covariance via the minimal mirrored circulant embedding of size
    2(n-1), O(n log n);
``kernel``
    truncated moving-average discretization driven by explicit white-noise
    cells on [-A, T].  Slightly approximate in law (documented O(A^(2H-2))
    truncation tail plus an O((h/(s-v))^(2H)) projection loss near the
    increment singularity) but the only method that carries driving-noise
    provenance, which the conditional-expectation oracles require.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (AlignmentError, ConfigurationError, DomainError,
                     EmbeddingError, NumericalError)
from .numerics import SeedSpec, adaptive_quad, as_seed_spec, beta

__all__ = [
    "c_h",
    "mvn_kernel",
    "fbm_cov",
    "fgn_cov",
    "FbmConfig",
    "DrivingNoise",
    "FbmPath",
    "sample_fbm",
    "kernel_cell_weights",
    "ConditionalMoments",
    "conditional_increment_moments",
    "KernelCorrelation",
    "kernel_correlation",
]


def _check_hurst(hurst: float) -> float:
    if not (0.0 < hurst < 1.0):
        raise DomainError(f"hurst must lie in (0, 1), got {hurst!r}")
    return float(hurst)


def c_h(hurst: float) -> float:
    """Increment-variance constant of the moving-average normalization.

    c_h(H) = ((3/2 - H) / (2H)) * B(2 - 2H, H + 1/2); equals 1 at H = 1/2.
    """
    H = _check_hurst(hurst)
    return (1.5 - H) / (2.0 * H) * beta(2.0 - 2.0 * H, H + 0.5)


def _pow_plus(x: np.ndarray, expo: float) -> np.ndarray:
    """(x)_+^expo with the convention that nonpositive bases give 0.

    For expo == 0 this is the indicator of x > 0, which is the consistent
    zero-exponent reading of the moving-average kernel at H = 1/2.
    """
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    out = np.zeros_like(x)
    if expo == 0.0:
        out[pos] = 1.0
    else:
        out[pos] = x[pos] ** expo
    return out


def mvn_kernel(t, s, hurst: float):
    """Moving-average kernel K(t, s) = (t-s)_+^(H-1/2) - (-s)_+^(H-1/2).

    At H = 1/2 this reduces to the indicator of 0 <= s < t.  Vectorized in
    both arguments.
    """
    H = _check_hurst(hurst)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = _pow_plus(t - s, H - 0.5) - _pow_plus(-s, H - 0.5)
    if out.ndim == 0:
        return float(out)
    return out


def fbm_cov(s, t, hurst: float, var0: float = 0.0):
    """Covariance of path values at times s and t (s, t >= 0).

    var0 + (c_h/2) (t^(2H) + s^(2H) - |t-s|^(2H)).  Vectorized.
    """
    H = _check_hurst(hurst)
    if var0 < 0.0:
        raise DomainError(f"var0 must be nonnegative, got {var0!r}")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0.0) or np.any(t < 0.0):
        raise DomainError("fbm_cov is defined for nonnegative times")
    c = c_h(H)
    out = var0 + 0.5 * c * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
    if out.ndim == 0:
        return float(out)
    return out


def fgn_cov(lag, hurst: float, step: float):
    """Covariance of consecutive-grid increments at integer lag.

    (c_h/2) (|k+1|^(2H) + |k-1|^(2H) - 2|k|^(2H)) * step^(2H).
    """
    H = _check_hurst(hurst)
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    k = np.abs(np.asarray(lag, dtype=float))
    out = 0.5 * c_h(H) * ((k + 1.0) ** (2 * H) + np.abs(k - 1.0) ** (2 * H)
                          - 2.0 * k ** (2 * H)) * step ** (2 * H)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FbmConfig:
    """Parameters of one path draw."""
    hurst: float
    horizon: float = 1.0
    grid_n: int = 1024
    var0: float = 0.0
    seed: int | SeedSpec = 0
    dim: int = 1

    def __post_init__(self) -> None:
        _check_hurst(self.hurst)
        if not self.horizon > 0.0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon!r}")
        if not (isinstance(self.grid_n, int) and self.grid_n >= 1):
            raise ConfigurationError(f"grid_n must be an integer >= 1, got {self.grid_n!r}")
        if self.var0 < 0.0:
            raise ConfigurationError(f"var0 must be nonnegative, got {self.var0!r}")
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise ConfigurationError(f"dim must be an integer >= 1, got {self.dim!r}")
        as_seed_spec(self.seed)

    @property
    def step(self) -> float:
        return self.horizon / self.grid_n

    def times(self) -> np.ndarray:
        # (k * horizon) / grid_n keeps dyadic sub-partitions exactly on-grid
        return (np.arange(self.grid_n + 1) * self.horizon) / self.grid_n


@dataclass(frozen=True)
class DrivingNoise:
    """White-noise provenance of a kernel-discretized path.

    ``boundaries`` are the m+1 cell edges spanning [-truncation, horizon];
    ``normals`` holds one standard normal per cell (shape (m,) for dim 1,
    else (dim, m)).  The raw increment of the driving noise over cell j is
    sqrt(width_j) * normals[j].
    """
    boundaries: np.ndarray
    normals: np.ndarray
    truncation: float


@dataclass(frozen=True)
class FbmPath:
    """A sampled path on a uniform grid, with provenance."""
    hurst: float
    times: np.ndarray
    values: np.ndarray
    var0: float
    method: str
    seed: SeedSpec
    noise: DrivingNoise | None = None

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def grid_n(self) -> int:
        return len(self.times) - 1

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else int(self.values.shape[1])

    @property
    def step(self) -> float:
        return self.horizon / self.grid_n

    def indices_of(self, t) -> np.ndarray:
        """Grid indices of the given times; raises if any is off-grid."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.rint(t * self.grid_n / self.horizon).astype(np.int64)
        ok = (idx >= 0) & (idx <= self.grid_n)
        if not ok.all():
            bad = t[~ok][0]
            raise AlignmentError(f"time {bad!r} outside [0, {self.horizon!r}]")
        err = np.abs(self.times[idx] - t)
        atol = 1e-9 * max(1.0, self.horizon)
        if err.max() > atol:
            bad = t[np.argmax(err)]
            raise AlignmentError(f"time {bad!r} is not on the sampling grid")
        return idx

    def value_at(self, t: float):
        idx = int(self.indices_of(t)[0])
        v = self.values[idx]
        return float(v) if self.values.ndim == 1 else v

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)


# ---------------------------------------------------------------------------
# samplers


@lru_cache(maxsize=8)
def _cholesky_factor(hurst: float, grid_n: int, step: float) -> np.ndarray:
    lag = np.abs(np.arange(grid_n)[:, None] - np.arange(grid_n)[None, :])
    cov = fgn_cov(lag, hurst, step)
    return np.linalg.cholesky(cov)


def _embedding_eigs(row: np.ndarray, context: str = "") -> np.ndarray:
    eigs = np.fft.fft(row).real
    floor = -1e-9 * float(eigs.max())
    if eigs.min() < floor:
        idx = int(np.argmin(eigs))
        raise EmbeddingError(
            f"circulant embedding failed: eigenvalue {eigs[idx]:.6g} at index "
            f"{idx} below tolerance {floor:.3g}{context}",
            index=idx, eigenvalue=float(eigs[idx]))
    return np.clip(eigs, 0.0, None)


@lru_cache(maxsize=8)
def _circulant_sqrt_eigs(hurst: float, grid_n: int, step: float) -> np.ndarray:
    # Minimal mirrored embedding: first row [g0 .. g_{n-1} g_{n-2} .. g1]
    # of size 2(n-1).  Requires grid_n >= 2.
    g = fgn_cov(np.arange(grid_n), hurst, step)
    row = np.concatenate([g, g[-2:0:-1]])
    return np.sqrt(_embedding_eigs(row, f" (H={hurst}, n={grid_n})"))


def _sample_fgn_circulant(rng: np.random.Generator, sqrt_eigs: np.ndarray,
                          grid_n: int) -> np.ndarray:
    m = sqrt_eigs.size
    z = rng.standard_normal((2, m))
    spectral = sqrt_eigs * (z[0] + 1j * z[1])
    return (math.sqrt(m) * np.fft.ifft(spectral)).real[:grid_n]


def _left_tail_boundaries(step: float, truncation: float) -> np.ndarray:
    """Geometrically coarsened cell edges on [-truncation, -step]."""
    if truncation <= step:
        return np.array([-truncation])
    # cell widths grow away from the origin; ratio ~ sqrt(2) per cell
    count = max(1, 2 * int(math.ceil(math.log2(truncation / step))))
    return -np.geomspace(truncation, step, count + 1)


@lru_cache(maxsize=4)
def _kernel_weight_matrix(hurst: float, grid_n: int, horizon: float,
                          truncation: float) -> tuple[np.ndarray, np.ndarray]:
    times = (np.arange(grid_n + 1) * horizon) / grid_n
    step = horizon / grid_n
    boundaries = np.concatenate([
        _left_tail_boundaries(step, truncation), [0.0], times[1:]])
    weights = kernel_cell_weights(hurst, times, boundaries)
    weights.setflags(write=False)
    boundaries.setflags(write=False)
    return boundaries, weights


def kernel_cell_weights(hurst: float, times, boundaries: np.ndarray) -> np.ndarray:
    """Unit-normal weights of the moving-average kernel over noise cells.

    Row k holds, for each cell [a, b), the exact integral of K(times[k], r)
    over the cell divided by sqrt(b - a): the L2 projection of the kernel
    onto piecewise-constant white noise.  The antiderivative is closed-form,
    so no quadrature is involved.
    """
    H = _check_hurst(hurst)
    t = np.atleast_1d(np.asarray(times, dtype=float))[:, None]
    a = np.asarray(boundaries[:-1], dtype=float)[None, :]
    b = np.asarray(boundaries[1:], dtype=float)[None, :]
    e = H + 0.5
    anti = lambda x: _pow_plus(x, e)
    num = (anti(t - a) - anti(t - b)) - (anti(-a) - anti(-b))
    return num / (e * np.sqrt(b - a))


def sample_fbm(config: FbmConfig, method: str = "circulant",
               truncation: float | None = None) -> FbmPath:
    """Draw one path of the process described by ``config``.

    ``method`` is one of ``cholesky``, ``circulant`` or ``kernel`` (see the
    module docstring).  ``truncation`` (kernel method only) is the length A
    of the driving-noise window [-A, horizon]; defaults to 50 * horizon.

    Draw order, fixed for reproducibility: the value-at-0 normals first, then
    per component either the (2, m) circulant block, or the n fGn normals
    (cholesky), or the m cell normals (kernel).
    """
    if method not in ("cholesky", "circulant", "kernel"):
        raise ConfigurationError(f"unknown sampling method {method!r}")
    if truncation is not None and method != "kernel":
        raise ConfigurationError("truncation only applies to the kernel method")
    spec = as_seed_spec(config.seed)
    rng = spec.generator()
    n, d = config.grid_n, config.dim
    times = config.times()
    b0 = math.sqrt(config.var0) * rng.standard_normal(d)
    noise = None

    if method == "kernel":
        trunc = 50.0 * config.horizon if truncation is None else float(truncation)
        if not trunc > 0.0:
            raise ConfigurationError(f"truncation must be positive, got {trunc!r}")
        boundaries, weights = _kernel_weight_matrix(
            config.hurst, n, config.horizon, trunc)
        xi = rng.standard_normal((d, boundaries.size - 1))
        values = b0[None, :] + (weights @ xi.T)
        noise = DrivingNoise(boundaries=boundaries,
                             normals=xi[0] if d == 1 else xi,
                             truncation=trunc)
    else:
        cols = []
        for c in range(d):
            if method == "cholesky":
                z = rng.standard_normal(n)
                fgn = _cholesky_factor(config.hurst, n, config.step) @ z
            elif n == 1:
                z = rng.standard_normal()
                fgn = np.array([math.sqrt(fgn_cov(0, config.hurst, config.step)) * z])
            else:
                sq = _circulant_sqrt_eigs(config.hurst, n, config.step)
                fgn = _sample_fgn_circulant(rng, sq, n)
            cols.append(b0[c] + np.concatenate([[0.0], np.cumsum(fgn)]))
        values = np.stack(cols, axis=1)

    if not np.all(np.isfinite(values)):
        raise NumericalError("sampler produced non-finite values")
    if d == 1:
        values = values[:, 0]
    values.setflags(write=False)
    return FbmPath(hurst=config.hurst, times=times, values=values,
                   var0=config.var0, method=method, seed=spec, noise=noise)


# ---------------------------------------------------------------------------
# conditional structure of one increment given the past


def _kernel_cross_integral(v: float, s: float, t: float, hurst: float,
                           tol: float) -> float:
    """integral over [v, s] of K(s,r) K(t,r) dr for 0 <= v < s <= t."""
    H = hurst
    if t == s:
        return (s - v) ** (2 * H) / (2 * H)
    if H == 0.5:
        return s - v
    fn = lambda r: (s - r) ** (H - 0.5) * (t - r) ** (H - 0.5)
    return adaptive_quad(fn, v, s, tol=tol, singularity="upper").value


@dataclass(frozen=True)
class ConditionalMoments:
    """Second-moment structure of (B_s, B_t - B_s) given the past up to v.

    ``sigma_s_sq`` is the conditional variance of B_s, ``sigma_st_sq`` that
    of the increment, ``rho_st`` their conditional covariance, and
    ``kappa_st_sq = sigma_st_sq - rho_st^2 / sigma_s_sq`` the residual
    increment variance after projecting out B_s (nonnegative).
    """
    sigma_s_sq: float
    sigma_st_sq: float
    rho_st: float
    kappa_st_sq: float

    @property
    def sigma_s(self) -> float:
        return math.sqrt(self.sigma_s_sq)

    @property
    def sigma_st(self) -> float:
        return math.sqrt(self.sigma_st_sq)


def conditional_increment_moments(v: float, s: float, t: float, hurst: float,
                                  tol: float = 1e-11) -> ConditionalMoments:
    """Exact conditional moments over the window that starts at v.

    The conditional variance of B_s is closed-form, (s-v)^(2H) / (2H); the
    cross term comes from adaptive quadrature of the kernel product.
    """
    H = _check_hurst(hurst)
    if not (0.0 <= v < s <= t):
        raise DomainError(f"need 0 <= v < s <= t, got ({v!r}, {s!r}, {t!r})")
    sigma_s_sq = (s - v) ** (2 * H) / (2 * H)
    sigma_t_sq = (t - v) ** (2 * H) / (2 * H)
    cross = _kernel_cross_integral(v, s, t, H, tol)
    rho_st = cross - sigma_s_sq
    sigma_st_sq = sigma_t_sq - 2.0 * cross + sigma_s_sq
    if sigma_st_sq < -1e-10 * sigma_t_sq:
        raise NumericalError(
            f"conditional increment variance came out negative ({sigma_st_sq:g})")
    sigma_st_sq = max(sigma_st_sq, 0.0)
    kappa = sigma_st_sq - rho_st * rho_st / sigma_s_sq
    if kappa < -1e-10 * max(sigma_st_sq, 1e-300):
        raise NumericalError(
            f"residual conditional variance came out negative ({kappa:g})")
    return ConditionalMoments(sigma_s_sq=sigma_s_sq, sigma_st_sq=sigma_st_sq,
                              rho_st=rho_st, kappa_st_sq=max(kappa, 0.0))


@dataclass(frozen=True)
class KernelCorrelation:
    """Kernel product integral, its short-increment expansion, and the gap."""
    value: float
    asymptotic: float
    remainder: float


def kernel_correlation(v: float, s: float, t: float, hurst: float,
                       tol: float = 1e-11) -> KernelCorrelation:
    """Correlation integral of the kernel against its time-shift.

    value      = integral over [v, s] of K(s,r) K(t,r) dr,
    asymptotic = (s-v)^(2H)/(2H) + (s-v)^(2H-1)(t-s)/2 - c_h (t-s)^(2H)/2,
    remainder  = value - asymptotic, of order (s-v)^(2H-2) (t-s)^2 when
    t - s <= s - v (enforced).  H = 1/2 is excluded (the expansion is
    degenerate there: the kernel is an indicator).
    """
    H = _check_hurst(hurst)
    if H == 0.5:
        raise DomainError("kernel_correlation requires hurst != 1/2")
    if not (0.0 <= v < s <= t):
        raise DomainError(f"need 0 <= v < s <= t, got ({v!r}, {s!r}, {t!r})")
    if t - s > s - v:
        raise DomainError(
            f"short-increment regime requires t - s <= s - v, got t-s={t - s!r}, s-v={s - v!r}")
    if t == s:
        value = (s - v) ** (2 * H) / (2 * H)
        return KernelCorrelation(value=value, asymptotic=value, remainder=0.0)
    value = _kernel_cross_integral(v, s, t, H, tol)
    asym = ((s - v) ** (2 * H) / (2 * H)
            + 0.5 * (s - v) ** (2 * H - 1) * (t - s)
            - 0.5 * c_h(H) * (t - s) ** (2 * H))
    return KernelCorrelation(value=value, asymptotic=asym, remainder=value - asym)
