"""Fourier synthesis of wave packets under an arbitrary dispersion relation.

The field is the k-integral ``f(x, t) = int dk g(k) exp(i k x - i omega(k) t)``,
discretized with the midpoint rule on a uniform :class:`KGrid`.  When the
spatial grid is conjugate to the k-grid (``dx = 2 pi / (n dk)``) the sum is
evaluated with one inverse FFT; otherwise a direct O(n_k n_x) sum is used,
which also serves as the correctness reference for the FFT path.

The FFT path yields the periodic image of the packet with period ``2 pi / dk``;
windows are sized so that the image overlap is far below working precision.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dispersion as disp
from . import kernels
from .errors import DegenerateFit, DispersionSingularity, GridCoverage, TailLeak
from .packet import GaussianPacketSpec, gup_width_exact

__all__ = [
    "KGrid",
    "FieldSnapshot",
    "PacketStats",
    "EvolutionSeries",
    "VelocityFit",
    "BroadeningReport",
    "sample_spectrum",
    "synthesize",
    "compute_stats",
    "evolve_series",
    "measure_group_velocity",
    "measure_broadening",
    "fit_velocity",
    "auto_grid",
    "validated_time_window",
    "worker_count",
]

POLE_GUARD_CELLS = 10
TAIL_THRESHOLD = 1e-10


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count, honouring the ``GUPSIM_THREADS`` cap."""
    cap = os.environ.get("GUPSIM_THREADS")
    n = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class KGrid:
    """Uniform k-grid of ``n`` midpoint nodes covering ``[k_min, k_max]``."""

    k_min: float
    k_max: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("KGrid needs n >= 2")
        if not self.k_max > self.k_min:
            raise ValueError("KGrid needs k_max > k_min")

    @property
    def dk(self) -> float:
        return (self.k_max - self.k_min) / self.n

    @property
    def samples(self) -> np.ndarray:
        return self.k_min + (np.arange(self.n) + 0.5) * self.dk

    @property
    def fft_compatible(self) -> bool:
        return _is_pow2(self.n)

    @property
    def period(self) -> float:
        """Spatial period of the midpoint sum, 2 pi / dk."""
        return 2.0 * math.pi / self.dk

    @property
    def dx(self) -> float:
        """Spacing of the conjugate spatial grid."""
        return self.period / self.n

    def conjugate_x(self, x0: float) -> np.ndarray:
        return x0 + np.arange(self.n) * self.dx

    @classmethod
    def fft_modes(cls, n: int, length: float) -> "KGrid":
        """Grid whose nodes are exactly the FFT wave numbers of a periodic box."""
        dk = 2.0 * math.pi / length
        k_min = (-(n // 2) - 0.5) * dk
        return cls(k_min, k_min + n * dk, n)

    def check_pole(self, model, guard_cells: int = POLE_GUARD_CELLS) -> None:
        pole = getattr(model, "pole", None)
        if pole is None:
            return
        k = self.samples
        gap = np.min(np.abs(np.abs(k) - pole))
        if gap < guard_cells * self.dk:
            raise DispersionSingularity(
                f"k-grid comes within {gap:.3g} of the pole k={pole:.6g} "
                f"(guard band {guard_cells} dk = {guard_cells * self.dk:.3g})"
            )


@dataclass
class FieldSnapshot:
    x0: float
    dx: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if not self.dx > 0:
            raise ValueError("FieldSnapshot needs dx > 0")
        if self.values.ndim != 1 or self.values.shape[0] < 2:
            raise ValueError("FieldSnapshot needs a 1-D array of at least 2 samples")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + np.arange(self.n) * self.dx

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def same_grid(self, other: "FieldSnapshot") -> bool:
        return self.n == other.n and self.x0 == other.x0 and self.dx == other.dx


@dataclass(frozen=True)
class PacketStats:
    norm: float
    centroid: float
    rms_width: float


@dataclass
class EvolutionSeries:
    snapshots: list = field(default_factory=list)
    stats: list = field(default_factory=list)

    def __len__(self):
        return len(self.snapshots)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots], dtype=float)

    @property
    def norms(self) -> np.ndarray:
        return np.array([s.norm for s in self.stats])

    @property
    def centroids(self) -> np.ndarray:
        return np.array([s.centroid for s in self.stats])

    @property
    def widths(self) -> np.ndarray:
        return np.array([s.rms_width for s in self.stats])


def sample_spectrum(spec: GaussianPacketSpec, grid: KGrid, n_sigma: float = 6.0):
    """Gaussian amplitudes g(k) at the grid nodes.

    The grid must contain ``k0 +- n_sigma * sigma_k``; truncating the Gaussian
    there drops amplitude below ``exp(-n_sigma^2 / 2)`` of the peak.
    """
    half = n_sigma * spec.sigma_k
    if spec.k0 - half < grid.k_min or spec.k0 + half > grid.k_max:
        raise GridCoverage(
            f"window [{spec.k0 - half:.6g}, {spec.k0 + half:.6g}] not inside "
            f"[{grid.k_min:.6g}, {grid.k_max:.6g}]"
        )
    return spec.amplitude(grid.samples)


def synthesize(g, grid: KGrid, model, t: float, x=None, x0: float | None = None,
               method: str = "auto") -> FieldSnapshot:
    """Field at time ``t`` from spectral amplitudes ``g`` on ``grid``.

    ``model`` is anything with an ``omega(k)`` method (a DispersionModel, or
    the GKG branch adaptor).  Pass ``x`` (uniform, ascending) for an arbitrary
    spatial grid, otherwise the conjugate grid starting at ``x0`` is used
    (default: centred on the origin).  ``method`` is ``"fft"``, ``"direct"``
    or ``"auto"``.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape != (grid.n,):
        raise GridCoverage(f"spectrum has shape {g.shape}, grid has n={grid.n}")
    grid.check_pole(model)
    k = grid.samples
    omega = np.asarray(model.omega(k), dtype=float)
    phased = g * np.exp(-1j * omega * t)

    if x is None:
        if x0 is None:
            x0 = -0.5 * grid.period
        if method == "auto":
            method = "fft" if grid.fft_compatible else "direct"
        xs = grid.conjugate_x(x0)
        dx = grid.dx
    else:
        xs = np.asarray(x, dtype=float)
        if xs.ndim != 1 or xs.shape[0] < 2:
            raise ValueError("x must be a 1-D array with at least 2 points")
        x0 = float(xs[0])
        dx = float(xs[1] - xs[0])
        if method == "fft":
            raise ValueError("the FFT path needs the conjugate spatial grid")
        method = "direct"

    if method == "fft":
        if not grid.fft_compatible:
            raise ValueError("the FFT path needs a power-of-two grid")
        k_first = k[0]
        m = np.arange(grid.n)
        weights = phased * np.exp(1j * m * grid.dk * x0)
        values = (grid.dk * grid.n) * np.exp(1j * k_first * xs) * np.fft.ifft(weights)
    elif method == "direct":
        values = grid.dk * kernels.direct_sum(k, np.ascontiguousarray(phased),
                                              np.ascontiguousarray(xs))
    else:
        raise ValueError(f"unknown method {method!r}")
    return FieldSnapshot(x0=float(x0), dx=float(dx), values=values, t=float(t))


def compute_stats(f: FieldSnapshot, tail_threshold: float = TAIL_THRESHOLD) -> PacketStats:
    """Trapezoid moments of |f|^2: norm, centroid and RMS width."""
    intensity = f.intensity
    peak = float(np.max(intensity))
    if peak <= 0:
        raise ValueError("field is identically zero")
    edge = max(intensity[0], intensity[-1])
    if edge > tail_threshold * peak:
        raise TailLeak(
            f"boundary intensity {edge / peak:.3g} of peak exceeds {tail_threshold:g} "
            f"at t={f.t!r}"
        )
    x = f.x
    norm = float(np.trapezoid(intensity, x))
    centroid = float(np.trapezoid(x * intensity, x) / norm)
    var = float(np.trapezoid((x - centroid) ** 2 * intensity, x) / norm)
    return PacketStats(norm=norm, centroid=centroid, rms_width=math.sqrt(var))


def _group_velocity_span(spec: GaussianPacketSpec, model, n_sigma: float = 3.0):
    k = spec.k0 + np.linspace(-n_sigma, n_sigma, 65) * spec.sigma_k
    w = np.asarray(model.omega(k), dtype=float)
    v = np.gradient(w, k)
    return float(np.min(v)), float(np.max(v))


def auto_grid(spec: GaussianPacketSpec, model, times, n_sigma: float = 10.0,
              length_widths: float = 12.0, min_n: int = 256):
    """Choose a power-of-two KGrid and a window origin for the given times.

    The k-window is ``k0 +- n_sigma * sigma_k``.  The spatial window spans
    ``[v_min t_min - L, v_max t_max + L]`` with ``L = length_widths`` times the
    largest predicted RMS width, and n is the smallest power of two whose
    conjugate period covers it.  Returns ``(grid, x0)``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_lo = min(0.0, float(times.min())) if times.size else 0.0
    t_hi = max(0.0, float(times.max())) if times.size else 0.0
    half = n_sigma * spec.sigma_k
    k_min, k_max = spec.k0 - half, spec.k0 + half

    v_lo, v_hi = _group_velocity_span(spec, model)
    width = math.sqrt(spec.alpha)
    if isinstance(model, disp.DispersionModel):
        t_abs = max(abs(t_lo), abs(t_hi))
        width = max(width, float(gup_width_exact(t_abs, spec, model)))
    # spread of group velocities over the spectrum bounds the broadening too
    width = max(width, 0.5 * (v_hi - v_lo) * max(abs(t_lo), abs(t_hi)))
    L = length_widths * width
    lo = min(v_lo * t_lo, v_hi * t_lo, 0.0) - L
    hi = max(v_hi * t_hi, v_lo * t_hi, 0.0) + L
    span = hi - lo

    n_needed = span * (k_max - k_min) / (2.0 * math.pi)
    n = max(min_n, 1 << max(1, math.ceil(math.log2(max(n_needed, 2.0)))))
    grid = KGrid(k_min, k_max, n)
    grid.check_pole(model)
    x0 = lo - 0.5 * (grid.period - span)
    return grid, x0


def evolve_series(spec: GaussianPacketSpec, model, times, grid: KGrid | None = None,
                  x0: float | None = None, n_sigma: float = 6.0,
                  workers: int | None = None) -> EvolutionSeries:
    """Synthesize and measure the packet at each time in ``times``."""
    times = [float(t) for t in times]
    if not times:
        return EvolutionSeries()
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    if grid is None:
        grid, auto_x0 = auto_grid(spec, model, times)
        x0 = auto_x0 if x0 is None else x0
    g = sample_spectrum(spec, grid, n_sigma=n_sigma)

    def one(t):
        snap = synthesize(g, grid, model, t, x0=x0)
        return snap, compute_stats(snap)

    n_workers = min(worker_count(workers), len(times))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, times))
    else:
        results = [one(t) for t in times]
    return EvolutionSeries(snapshots=[r[0] for r in results], stats=[r[1] for r in results])


@dataclass(frozen=True)
class VelocityFit:
    v_g: float
    intercept: float
    residual: float


def fit_velocity(times, centroids) -> VelocityFit:
    """Least-squares line through (t, centroid); ``residual`` is the RMS misfit."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(centroids, dtype=float)
    if t.shape != y.shape or t.size < 2:
        raise ValueError("need matching times and centroids, at least 2 of each")
    if np.unique(t).size < 2:
        raise DegenerateFit("times are not distinct")
    tm = t.mean()
    dt = t - tm
    slope = float(np.dot(dt, y - y.mean()) / np.dot(dt, dt))
    intercept = float(y.mean() - slope * tm)
    resid = y - (intercept + slope * t)
    return VelocityFit(v_g=slope, intercept=intercept,
                       residual=float(np.sqrt(np.mean(resid**2))))


def measure_group_velocity(series: EvolutionSeries) -> VelocityFit:
    if len(series) < 3:
        raise ValueError("group velocity fit needs at least 3 snapshots")
    return fit_velocity(series.times, series.centroids)


@dataclass(frozen=True)
class BroadeningReport:
    times: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    rel_dev: np.ndarray
    max_dev: float
    mean_dev: float


def measure_broadening(series: EvolutionSeries, prediction) -> BroadeningReport:
    """Compare measured RMS widths with a predicted width curve.

    ``prediction`` is either a sequence aligned with the series times or a
    callable of t.
    """
    t = series.times
    if callable(prediction):
        predicted = np.asarray([prediction(ti) for ti in t], dtype=float)
    else:
        predicted = np.asarray(prediction, dtype=float)
        if predicted.shape != t.shape:
            raise ValueError(
                f"prediction has {predicted.size} entries, series has {t.size} snapshots"
            )
    measured = series.widths
    rel = np.abs(measured - predicted) / np.abs(predicted)
    return BroadeningReport(
        times=t, measured=measured, predicted=predicted, rel_dev=rel,
        max_dev=float(rel.max()) if rel.size else 0.0,
        mean_dev=float(rel.mean()) if rel.size else 0.0,
    )


def validated_time_window(spec: GaussianPacketSpec, model: disp.DispersionModel,
                          n_sigma: float = 3.0, phase_tol: float = 0.01) -> float:
    """Largest t for which the cubic Taylor phase at ``k0 +- n_sigma sigma_k`` stays
    below ``phase_tol`` radians, i.e. where the quadratic expansion is trusted."""
    w3 = abs(disp.omega_third_derivative(spec.k0, model))
    if w3 == 0:
        return math.inf
    return phase_tol / (w3 / 6.0 * (n_sigma * spec.sigma_k) ** 3)
