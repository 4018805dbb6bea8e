"""Alternating design of delay, phase-shifter, and digital settings.

The optimizer cycles conditionally optimal updates: each delay line is
refreshed by a grid line-search (or by a closed-form weighted least-squares
fit on unwrapped target phases), the attached phase-shifters follow in closed
form, the delay vector is pushed back to the center of its feasible window
with the digital phases compensating, and finally the digital phases are
re-aligned per subcarrier.  Magnitudes of the digital weights are set once up
front: the optimal power split simply copies the per-subcarrier target norms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .array_model import SubcarrierGrid, SystemConfig
from .beam_targets import BeamTarget

__all__ = [
    "TtdUpdate",
    "DesignOptions",
    "JptaBeamformer",
    "wrap_angle",
    "digital_power_allocation",
    "ttd_objective",
    "ttd_update_line_search",
    "phase_unwrap",
    "ttd_update_wls",
    "ps_update",
    "digital_phase_update",
    "center_delays",
    "shift_nonnegative",
    "quantize_delays",
    "design_jpta",
]

_TIE_TOL = 1e-12  # grid values closer than this count as tied; smallest tau wins


class TtdUpdate(str, Enum):
    LINE_SEARCH = "line_search"
    WLS = "wls"


@dataclass(frozen=True)
class DesignOptions:
    """Knobs of the alternating optimizer.

    ``line_search_grid`` points span the centered search window
    ``[-kappa/(2W), kappa/(2W)]``; the best grid point is polished by parabolic
    interpolation through its neighbors.  ``discrete_delays`` (seconds, sorted,
    inside ``[0, kappa/W]``) snaps the finished delays to hardware-realizable
    values.  ``init_phase_seed`` switches the digital-phase start from all
    zeros to a seeded uniform draw.
    """

    ttd_update: TtdUpdate = TtdUpdate.LINE_SEARCH
    max_iter: int = 10
    line_search_grid: int = 4096
    discrete_delays: tuple[float, ...] | None = None
    enforce_nonnegative_delays: bool = True
    convergence_epsilon: float | None = None
    init_phase_seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ttd_update", TtdUpdate(self.ttd_update))
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.line_search_grid < 3:
            raise ValueError("line_search_grid must be at least 3")
        if self.discrete_delays is not None:
            values = tuple(float(v) for v in self.discrete_delays)
            if not values:
                raise ValueError("discrete delay set must not be empty")
            if any(b < a for a, b in zip(values, values[1:])):
                raise ValueError("discrete delay set must be sorted ascending")
            object.__setattr__(self, "discrete_delays", values)


@dataclass(frozen=True, eq=False)
class JptaBeamformer:
    """One analog solution: N delays [s], M phase-shifts [rad], K digital weights."""

    delays: np.ndarray
    phases: np.ndarray
    alpha: np.ndarray

    def __post_init__(self) -> None:
        delays = np.asarray(self.delays, dtype=np.float64).copy()
        phases = np.asarray(self.phases, dtype=np.float64).copy()
        alpha = np.asarray(self.alpha, dtype=np.complex128).copy()
        for arr in (delays, phases, alpha):
            arr.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "alpha", alpha)

    @property
    def alpha_magnitudes(self) -> np.ndarray:
        return np.abs(self.alpha)

    @property
    def alpha_phases(self) -> np.ndarray:
        return np.angle(self.alpha)


def wrap_angle(x: np.ndarray | float) -> np.ndarray | float:
    """Wrap angles into [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, 2.0 * np.pi) - np.pi


def digital_power_allocation(target: BeamTarget) -> np.ndarray:
    """Optimal digital magnitudes: |alpha_k| equals the target norm, per subcarrier."""
    return target.norms.copy()


def _group_columns(config: SystemConfig, n: int) -> np.ndarray:
    if not 1 <= n <= config.num_ttds:
        raise ValueError(f"delay line number {n} out of range 1..{config.num_ttds}")
    return np.asarray(config.ttd_groups[n - 1], dtype=np.intp) - 1


def _alignment_coeffs(target: BeamTarget, alpha_phases: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """(K, |group|) coefficients  w_k e^{j ang_k} conj(bbar_{k,m})  of the delay objective."""
    rot = target.weights * np.exp(1j * np.asarray(alpha_phases, dtype=np.float64))
    return rot[:, None] * np.conj(target.unit_vectors[:, cols])


def _ttd_objective_on_grid(coeffs: np.ndarray, phase_table: np.ndarray) -> np.ndarray:
    # coeffs: (K, Mn); phase_table: (K, G) holding e^{-j 2 pi f tau_g}
    return np.abs(coeffs.T @ phase_table).sum(axis=0)


def ttd_objective(
    config: SystemConfig,
    grid: SubcarrierGrid,
    n: int,
    tau: float,
    target: BeamTarget,
    alpha_phases: np.ndarray,
) -> float:
    """Per-delay-line alignment objective at delay ``tau``.

    Sums, over the antennas of line ``n``, the magnitude of the weighted
    subcarrier series rotated by the candidate delay.  Periodic in ``tau``
    with period K/W.
    """
    cols = _group_columns(config, n)
    coeffs = _alignment_coeffs(target, alpha_phases, cols)
    table = np.exp(-2j * np.pi * grid.frequencies * float(tau))[:, None]
    return float(np.abs(coeffs.T @ table).sum())


def ttd_update_line_search(
    config: SystemConfig,
    grid: SubcarrierGrid,
    n: int,
    target: BeamTarget,
    alpha_phases: np.ndarray,
    options: DesignOptions = DesignOptions(),
) -> float:
    """Grid argmax of the delay objective, polished by parabolic interpolation.

    Ties within 1e-12 resolve to the smallest delay; the refined point is only
    kept when it actually improves on the best grid value, so the result never
    trails any grid point.
    """
    cols = _group_columns(config, n)
    coeffs = _alignment_coeffs(target, alpha_phases, cols)
    half = config.delay_range / (2.0 * config.bandwidth)
    taus = np.linspace(-half, half, options.line_search_grid)
    table = np.exp(-2j * np.pi * np.outer(grid.frequencies, taus))
    values = _ttd_objective_on_grid(coeffs, table)
    return _refine_grid_peak(coeffs, grid.frequencies, taus, values)


def _refine_grid_peak(
    coeffs: np.ndarray,
    freqs: np.ndarray,
    taus: np.ndarray,
    values: np.ndarray,
) -> float:
    best = int(np.argmax(values >= values.max() - _TIE_TOL))
    tau = float(taus[best])
    if 0 < best < taus.size - 1:
        x1, x2, x3 = taus[best - 1 : best + 2]
        y1, y2, y3 = values[best - 1 : best + 2]
        denom = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1)
        if abs(denom) > 0.0:
            vertex = x2 - 0.5 * ((x2 - x1) ** 2 * (y2 - y3) - (x2 - x3) ** 2 * (y2 - y1)) / denom
            vertex = min(max(vertex, float(x1)), float(x3))
            table = np.exp(-2j * np.pi * freqs * vertex)[:, None]
            if float(np.abs(coeffs.T @ table).sum()) > values[best]:
                tau = float(vertex)
    return tau


def phase_unwrap(seq: np.ndarray) -> np.ndarray:
    """Remove 2*pi jumps from a phase sequence over ascending subcarriers.

    Each element is shifted by an integer multiple of 2*pi so adjacent
    differences stay within [-pi, pi]; the first element is untouched.
    """
    x = np.asarray(seq, dtype=np.float64)
    if x.size == 0:
        raise ValueError("phase sequence must be nonempty")
    if x.size == 1:
        return x.copy()
    steps = np.round((x[:-1] - x[1:]) / (2.0 * np.pi))
    turns = np.concatenate(([0.0], np.cumsum(steps)))
    return x + 2.0 * np.pi * turns


def ttd_update_wls(
    config: SystemConfig,
    grid: SubcarrierGrid,
    n: int,
    target: BeamTarget,
    alpha_phases: np.ndarray,
) -> float:
    """Closed-form delay from a weighted least-squares fit of unwrapped phases.

    For each antenna of the line, the phase shifter is eliminated as the
    weighted mean of ``2 pi f_k tau + c_{m,k}`` with
    ``c_{m,k} = unwrap(angle(bbar_{k,m}) - ang_k)``; substituting back leaves a
    scalar quadratic whose minimizer is returned after wrapping into the
    period ``[-K/(2W), K/(2W))`` and clamping to ``[-kappa/(2W), kappa/(2W)]``.
    """
    cols = _group_columns(config, n)
    active = target.weights > 0.0
    if not np.any(active):
        raise ValueError(f"all subcarrier weights vanish; delay line {n} is unconstrained")
    f = grid.frequencies[active]
    w = target.weights[active]
    ang = np.asarray(alpha_phases, dtype=np.float64)[active]
    block = target.unit_vectors[np.ix_(np.flatnonzero(active), cols)]
    num = 0.0
    den = 0.0
    weight_seen = 0.0
    for j in range(block.shape[1]):
        v = w * np.abs(block[:, j])
        sv = float(v.sum())
        weight_seen += sv
        if sv == 0.0:
            continue
        c = phase_unwrap(np.angle(block[:, j]) - ang)
        f_bar = float((v * f).sum()) / sv
        c_bar = float((v * c).sum()) / sv
        df = f - f_bar
        num += float((v * df * (c - c_bar)).sum())
        den += float((v * df * df).sum())
    if weight_seen == 0.0:
        raise ValueError(f"all fit weights vanish for delay line {n}")
    tau = 0.0 if den == 0.0 else -num / (2.0 * np.pi * den)
    period = config.num_subcarriers / config.bandwidth
    tau = math.fmod(tau + period / 2.0, period)
    if tau < 0.0:
        tau += period
    tau -= period / 2.0
    half = config.delay_range / (2.0 * config.bandwidth)
    return float(min(max(tau, -half), half))


def _ps_update_block(
    freqs: np.ndarray,
    target: BeamTarget,
    cols: np.ndarray,
    alpha_phases: np.ndarray,
    tau: float,
) -> np.ndarray:
    rot = target.weights * np.exp(1j * (2.0 * np.pi * freqs * float(tau) - np.asarray(alpha_phases)))
    s = rot @ target.unit_vectors[:, cols]
    if np.any(np.abs(s) == 0.0):
        warnings.warn("degenerate target: phase-shifter sum vanished; defaulting to 0", stacklevel=3)
    return np.asarray(wrap_angle(np.angle(s)), dtype=np.float64)


def ps_update(
    config: SystemConfig,
    grid: SubcarrierGrid,
    m: int,
    tau: float,
    target: BeamTarget,
    alpha_phases: np.ndarray,
) -> float:
    """Closed-form phase for antenna ``m`` (1-based) given its line's delay."""
    if not 1 <= m <= config.num_antennas:
        raise ValueError(f"antenna number {m} out of range 1..{config.num_antennas}")
    col = np.asarray([m - 1], dtype=np.intp)
    return float(_ps_update_block(grid.frequencies, target, col, alpha_phases, tau)[0])


def _digital_alignment(
    freqs: np.ndarray,
    unit_vectors: np.ndarray,
    phases: np.ndarray,
    tau_per_antenna: np.ndarray,
) -> np.ndarray:
    """Per-subcarrier sum  sum_m bbar_{k,m} e^{-j phi_m} e^{j 2 pi f_k tau_{n(m)}}."""
    factor = np.exp(1j * (2.0 * np.pi * np.outer(freqs, tau_per_antenna) - phases[None, :]))
    return np.einsum("km,km->k", unit_vectors, factor)


def digital_phase_update(
    config: SystemConfig,
    grid: SubcarrierGrid,
    k: int,
    delays: np.ndarray,
    phases: np.ndarray,
    target: BeamTarget,
) -> float:
    """Digital phase aligning subcarrier ``k`` with its realized analog beam."""
    pos = grid.position(k)
    tau_map = np.asarray(delays, dtype=np.float64)[config.ttd_index_per_antenna()]
    u = _digital_alignment(
        grid.frequencies[pos : pos + 1],
        target.unit_vectors[pos : pos + 1],
        np.asarray(phases, dtype=np.float64),
        tau_map,
    )
    if abs(u[0]) == 0.0:
        warnings.warn("degenerate target: digital alignment sum vanished; defaulting to 0", stacklevel=2)
    return float(np.angle(u[0]))


def center_delays(config: SystemConfig, delays: np.ndarray) -> tuple[np.ndarray, float]:
    """Shift delays toward the middle of the feasible window.

    Returns the shifted delays and the removed offset; the caller must rotate
    every digital phase by ``-2 pi f_k * offset`` to keep the realized beams
    unchanged.
    """
    tau = np.asarray(delays, dtype=np.float64)
    half = config.delay_range / (2.0 * config.bandwidth)
    offset = max(min(float(tau.mean()), half + float(tau.min())), float(tau.max()) - half)
    return tau - offset, offset


def shift_nonnegative(
    config: SystemConfig,
    grid: SubcarrierGrid,
    bf: JptaBeamformer,
) -> JptaBeamformer:
    """Make every delay nonnegative without changing the realized beams."""
    t_min = float(bf.delays.min())
    alpha = bf.alpha * np.exp(-2j * np.pi * grid.frequencies * t_min)
    return JptaBeamformer(delays=bf.delays - t_min, phases=bf.phases, alpha=alpha)


def quantize_delays(
    config: SystemConfig,
    grid: SubcarrierGrid,
    bf: JptaBeamformer,
    target: BeamTarget,
    discrete_set: np.ndarray,
) -> JptaBeamformer:
    """Snap each delay to the nearest value of a sorted discrete set.

    Equidistant candidates resolve to the smaller value.  The phase-shifters
    are re-optimized once against the snapped delays; digital weights are kept.
    """
    values = np.asarray(discrete_set, dtype=np.float64)
    if values.size == 0:
        raise ValueError("discrete delay set must not be empty")
    if np.any(np.diff(values) < 0.0):
        raise ValueError("discrete delay set must be sorted ascending")
    if values[0] < 0.0 or values[-1] > config.max_delay:
        raise ValueError("discrete delay set must lie within [0, kappa/W]")
    snapped = np.empty_like(bf.delays)
    for i, tau in enumerate(bf.delays):
        pos = int(np.searchsorted(values, tau))
        lo = max(pos - 1, 0)
        hi = min(pos, values.size - 1)
        snapped[i] = values[lo] if abs(tau - values[lo]) <= abs(values[hi] - tau) else values[hi]
    ang = bf.alpha_phases
    phases = np.empty_like(bf.phases)
    for n, cols in enumerate(config.group_indices()):
        phases[cols] = _ps_update_block(grid.frequencies, target, cols, ang, float(snapped[n]))
    return JptaBeamformer(delays=snapped, phases=phases, alpha=bf.alpha)


def design_jpta(
    config: SystemConfig,
    grid: SubcarrierGrid,
    target: BeamTarget,
    options: DesignOptions = DesignOptions(),
) -> tuple[JptaBeamformer, np.ndarray]:
    """Run the alternating optimizer and return the beamformer plus its trace.

    The trace holds the weighted alignment objective after every completed
    iteration; with the line-search update it is non-decreasing up to grid
    resolution.  An optional early stop triggers once the improvement falls
    below ``options.convergence_epsilon``.
    """
    kn = grid.num_subcarriers
    if target.vectors.shape != (kn, config.num_antennas):
        raise ValueError(
            f"target shape {target.vectors.shape} does not match "
            f"(K, M) = {(kn, config.num_antennas)}"
        )
    if options.discrete_delays is not None:
        if options.discrete_delays[0] < 0.0 or options.discrete_delays[-1] > config.max_delay:
            raise ValueError("discrete delay set must lie within [0, kappa/W]")

    freqs = grid.frequencies
    groups = config.group_indices()
    tau_of_antenna = config.ttd_index_per_antenna()
    root_m = math.sqrt(config.num_antennas)

    magnitudes = digital_power_allocation(target)
    if options.init_phase_seed is None:
        ang = np.zeros(kn)
    else:
        ang = np.random.default_rng(options.init_phase_seed).uniform(-np.pi, np.pi, kn)

    tau = np.zeros(config.num_ttds)
    phi = np.zeros(config.num_antennas)

    use_line_search = options.ttd_update is TtdUpdate.LINE_SEARCH
    if use_line_search:
        half = config.delay_range / (2.0 * config.bandwidth)
        taus_grid = np.linspace(-half, half, options.line_search_grid)
        phase_table = np.exp(-2j * np.pi * np.outer(freqs, taus_grid))

    trace: list[float] = []
    previous = None
    for _ in range(options.max_iter):
        for n, cols in enumerate(groups):
            if use_line_search:
                coeffs = _alignment_coeffs(target, ang, cols)
                values = _ttd_objective_on_grid(coeffs, phase_table)
                tau[n] = _refine_grid_peak(coeffs, freqs, taus_grid, values)
            else:
                tau[n] = ttd_update_wls(config, grid, n + 1, target, ang)
            phi[cols] = _ps_update_block(freqs, target, cols, ang, float(tau[n]))
        tau, offset = center_delays(config, tau)
        ang = ang - 2.0 * np.pi * freqs * offset
        u = _digital_alignment(freqs, target.unit_vectors, phi, tau[tau_of_antenna])
        ang = np.angle(u)
        objective = float(np.sum(target.weights * np.abs(u)) / root_m)
        trace.append(objective)
        if (
            options.convergence_epsilon is not None
            and previous is not None
            and objective - previous < options.convergence_epsilon
        ):
            break
        previous = objective

    bf = JptaBeamformer(
        delays=tau,
        phases=np.asarray(wrap_angle(phi), dtype=np.float64),
        alpha=magnitudes * np.exp(1j * ang),
    )
    if options.enforce_nonnegative_delays:
        bf = shift_nonnegative(config, grid, bf)
    if options.discrete_delays is not None:
        bf = quantize_delays(config, grid, bf, target, np.asarray(options.discrete_delays))
    return bf, np.asarray(trace)
