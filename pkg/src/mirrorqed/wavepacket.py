"""Spatial and spectral profiles of the emitted single-photon wave packet.

Once the emitter has released its excitation, the field holds one photon
distributed over four kinematic components: the part emitted directly to the
left of the emitter, the part reflected off the mirror (which interferes with
the direct part once it passes the emitter), the right-moving part still
between emitter and mirror, and the part transmitted through the mirror.
All amplitudes derive from the same causal round-trip series as the emitter
amplitude, re-parametrized from emission time to position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import BlipComponent, Direction, SystemParams, derived_constants
from .analytic import excitation_probability_exact, round_trip_series

_DECAYED_THRESHOLD = 1e-6


class OutOfDomain(ValueError):
    """Requested position lies outside the support of the wave packet."""


class EmitterNotDecayed(ValueError):
    """Spectrum requested before the emitter has (numerically) reached its ground state."""


@dataclass(frozen=True)
class SpatialProfile:
    """Photon probability density per unit length sampled on a position grid.

    `region_index` is the number of completed round trips n that labels the
    interval -c t + n d <= x < -c t + (n+1) d each sample falls into
    (-1 outside the light cone).
    """

    positions: np.ndarray
    amplitudes: np.ndarray
    density: np.ndarray
    direction: Direction
    region_index: np.ndarray
    time: float


@dataclass(frozen=True)
class Spectrum:
    """Peak-normalized spectral probability density of the emitted photon.

    `amplitudes` holds the unitary DFT output before peak normalization, so
    sum |amplitudes|^2 equals the summed |spatial samples|^2 (Parseval).
    """

    frequencies: np.ndarray
    spectral_density: np.ndarray
    amplitudes: np.ndarray
    t_final: float
    sample_count: int
    spacing: float
    omega_e: float


def _amp_prefactor(params: SystemParams) -> complex:
    # -i g / c with g = sqrt(Gamma c / 2) and c = 1
    return -1j * math.sqrt(params.gamma / 2.0)


def _series(params: SystemParams, u: np.ndarray) -> np.ndarray:
    """Causal series f(u), including the collapsed lattice tau = 0."""
    return round_trip_series(params, u)


def field_components(
    params: SystemParams, x: float, direction: Direction, t: float
) -> list[BlipComponent]:
    """Individual field components overlapping (x, direction) at time t.

    Left of the emitter the direct and reflected parts appear separately so
    their interference can be inspected; elsewhere at most one component
    survives.  Boundary points use the convention Theta(0) = 1, except that
    the mirror position x = d/2 belongs to the transmitted region for
    right-movers and to the reflected region for left-movers (no double
    counting).
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    consts = derived_constants(params)
    omega = consts.omega_complex
    half_d = params.tau / 2.0  # emitter-mirror distance, c = 1
    pre = _amp_prefactor(params)
    components: list[BlipComponent] = []
    if direction is Direction.LEFT:
        u = x + t
        if x <= 0 and u >= 0:  # emitted directly to the left
            amp = pre * np.exp(-1j * omega * u) * _series(params, np.asarray(u))
            components.append(BlipComponent(Direction.LEFT, x, complex(amp)))
        if x <= half_d and u >= params.tau:  # reflected part
            amp = (
                pre
                * params.r_m
                * np.exp(-1j * omega * (u - params.tau))
                * _series(params, np.asarray(u - params.tau))
            )
            components.append(BlipComponent(Direction.LEFT, x, complex(amp)))
    else:
        v = t - x
        if x >= 0 and v >= 0:
            amp = pre * np.exp(-1j * omega * v) * _series(params, np.asarray(v))
            if x >= half_d:
                amp = amp * params.t_m  # transmitted through the mirror
            components.append(BlipComponent(Direction.RIGHT, x, complex(amp)))
    return components


def field_amplitude(params: SystemParams, x, direction: Direction, t: float):
    """Total single-photon amplitude at position(s) x for one direction.

    Vectorized over x; returns 0 outside the light cone and outside each
    component's support.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    x_in = np.asarray(x, dtype=float)
    x_arr = np.atleast_1d(x_in).astype(float)
    consts = derived_constants(params)
    omega = consts.omega_complex
    half_d = params.tau / 2.0
    pre = _amp_prefactor(params)
    amp = np.zeros(x_arr.shape, dtype=complex)
    if direction is Direction.LEFT:
        u = x_arr + t
        direct = (x_arr <= 0) & (u >= 0)
        if direct.any():
            amp[direct] += (
                pre * np.exp(-1j * omega * u[direct]) * _series(params, u[direct])
            )
        reflected = (x_arr <= half_d) & (u >= params.tau)
        if reflected.any():
            shifted = u[reflected] - params.tau
            amp[reflected] += (
                pre
                * params.r_m
                * np.exp(-1j * omega * shifted)
                * _series(params, shifted)
            )
    else:
        v = t - x_arr
        support = (x_arr >= 0) & (v >= 0)
        if support.any():
            base = pre * np.exp(-1j * omega * v[support]) * _series(params, v[support])
            factor = np.where(x_arr[support] >= half_d, params.t_m, 1.0)
            amp[support] = factor * base
    amp = amp.reshape(x_in.shape) if x_in.ndim else amp[0]
    return complex(amp) if x_in.ndim == 0 else amp


def left_amplitude(params: SystemParams, x: float, t: float) -> complex:
    """Amplitude Phi_L(x, t) of the left-moving photon at x < 0.

    Equals -i (g/c) exp(-i Omega (x/c + t)) phi_L(x, t) where phi_L collects
    the direct and reflected round-trip sums on the interval the point falls
    into.

    Raises:
        OutOfDomain: If x >= 0 or x < -c t.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if x >= 0:
        raise OutOfDomain(f"left amplitude is defined for x < 0, got x = {x}")
    if x < -t:
        raise OutOfDomain(f"x = {x} lies outside the light cone x >= -c t = {-t}")
    return complex(field_amplitude(params, x, Direction.LEFT, t))


def photon_density(params: SystemParams, x, direction: Direction, t: float):
    """Probability density per unit length for a photon at (x, direction, t).

    Covers all regions: interfering direct plus reflected left-movers for
    x < 0, reflected-only left-movers between emitter and mirror, right-movers
    before the mirror, and the transmitted tail (amplitude carrying t_m)
    behind it.  Zero outside the light cone.
    """
    amp = field_amplitude(params, x, direction, t)
    density = np.abs(np.asarray(amp)) ** 2
    return float(density[()]) if np.asarray(x).ndim == 0 else density


def spatial_profile(
    params: SystemParams,
    t: float,
    positions=None,
    direction: Direction = Direction.LEFT,
) -> SpatialProfile:
    """Sample the wave packet on a position grid (default: left of the emitter)."""
    if positions is None:
        positions = np.linspace(-t, 0.0, 4001, endpoint=False)
    positions = np.asarray(positions, dtype=float)
    amplitudes = field_amplitude(params, positions, direction, t)
    if params.tau > 0:
        region = np.floor((positions + t) / params.tau).astype(int)
    else:
        region = np.zeros(positions.shape, dtype=int)
    region = np.where(positions + t < 0, -1, region)
    return SpatialProfile(
        positions=positions,
        amplitudes=amplitudes,
        density=np.abs(amplitudes) ** 2,
        direction=direction,
        region_index=region,
        time=t,
    )


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------


def spectrum(
    params: SystemParams,
    t_final: float = 40.0,
    sample_count: int = 2**14,
    allow_undecayed: bool = False,
) -> Spectrum:
    """Spectral probability density of the photon emitted to the left.

    Phi_L(x, t_final) is sampled uniformly on x in [-c t_final, 0), read as a
    function of the time variable x/c, and Fourier transformed; the squared
    magnitudes on the conjugate frequency grid give the spectrum, normalized
    to unit peak.  No window is applied: by the decay precondition the signal
    is negligible at the window edge.

    Raises:
        EmitterNotDecayed: If P_e(t_final) > 1e-6, unless `allow_undecayed`
            is set (trapping regimes never decay; their spectrum covers only
            the emitted part of the excitation).
    """
    if sample_count < 2 or sample_count & (sample_count - 1):
        raise ValueError(f"sample_count must be a power of two, got {sample_count}")
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    residual = excitation_probability_exact(params, t_final)
    if residual > _DECAYED_THRESHOLD and not allow_undecayed:
        raise EmitterNotDecayed(
            f"P_e(t_final) = {residual:.3g} > {_DECAYED_THRESHOLD}; enlarge t_final "
            "or pass allow_undecayed for trapping regimes"
        )
    spacing = t_final / sample_count  # in the time variable x/c
    x_grid = -t_final + spacing * np.arange(sample_count)
    samples = field_amplitude(params, x_grid, Direction.LEFT, t_final)
    # exp(+i omega x/c) convention so the line sits at +omega_e; the constant
    # phase exp(-i omega t_final) drops out of the magnitudes
    amplitudes = np.fft.fftshift(np.fft.ifft(samples)) * math.sqrt(sample_count)
    frequencies = 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(sample_count, d=spacing))
    density = np.abs(amplitudes) ** 2
    peak = density.max()
    if peak > 0:
        density = density / peak
    return Spectrum(
        frequencies=frequencies,
        spectral_density=density,
        amplitudes=amplitudes,
        t_final=t_final,
        sample_count=sample_count,
        spacing=spacing,
        omega_e=params.omega_e,
    )


# ---------------------------------------------------------------------------
# Norm bookkeeping
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _gauss_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _smooth_breaks(params: SystemParams, t: float, direction: Direction) -> np.ndarray:
    """Breakpoints between which the density is smooth (lattice kinks, fronts)."""
    half_d = params.tau / 2.0
    points = set()
    if direction is Direction.LEFT:
        lo, hi = -t, half_d
        points.update((lo, 0.0, hi))
        if params.tau > 0:
            k = 1
            while k * params.tau - t < hi:
                points.add(k * params.tau - t)  # kinks of u = x + t on the lattice
                k += 1
    else:
        lo, hi = 0.0, t
        points.update((lo, hi))
        if half_d < t:
            points.add(half_d)
        if params.tau > 0:
            k = 1
            while t - k * params.tau > lo:
                points.add(t - k * params.tau)  # kinks of v = t - x on the lattice
                k += 1
    return np.array(sorted(p for p in points if lo <= p <= hi))


def _integrate_density(
    params: SystemParams, t: float, direction: Direction, order: int, max_len: float
) -> float:
    breaks = _smooth_breaks(params, t, direction)
    if len(breaks) < 2:
        return 0.0
    nodes, weights = _gauss_nodes(order)
    all_nodes = []
    all_weights = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / max_len)))
        edges = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            all_nodes.append(mid + half * nodes)
            all_weights.append(half * weights)
    xs = np.concatenate(all_nodes)
    ws = np.concatenate(all_weights)
    dens = photon_density(params, xs, direction, t)
    return float(np.dot(ws, dens))


def total_photon_norm(
    params: SystemParams, t: float, order: int = 32, max_len: float = 0.5
) -> float:
    """P_e(t) plus the photon probability integrated over both directions.

    Unitarity demands this equals 1 at every time.  The integrals use
    fixed-order Gauss-Legendre panels between the smoothness breakpoints of
    the density (round-trip lattice kinks, the fronts, and the mirror).
    """
    total = excitation_probability_exact(params, t)
    for direction in (Direction.LEFT, Direction.RIGHT):
        total += _integrate_density(params, t, direction, order, max_len)
    return total
