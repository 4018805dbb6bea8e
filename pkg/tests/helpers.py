"""Independent oracles shared by the test modules.

Everything here recomputes objectives from their definitions with plain loops
or exhaustive grids, deliberately avoiding the library's vectorized paths.
"""

from __future__ import annotations

import math

import numpy as np

from jpta.array_model import SystemConfig, SubcarrierGrid
from jpta.beam_targets import BeamTarget, behavior1_target, behavior2_target, multi_angle_target


def make_config(**kw) -> SystemConfig:
    defaults = dict(
        num_antennas=4,
        num_ttds=2,
        carrier_freq=100e9,
        bandwidth=10e9,
        num_subcarriers=16,
        delay_range=8.0,
    )
    defaults.update(kw)
    return SystemConfig(**defaults)


def effective_beam_direct(
    config: SystemConfig, grid: SubcarrierGrid, delays, phases, pos: int
) -> np.ndarray:
    """Element-by-element analog beam at grid row ``pos``."""
    f = grid.frequencies[pos]
    w = np.empty(config.num_antennas, dtype=complex)
    for n, group in enumerate(config.ttd_groups):
        for m in group:
            w[m - 1] = np.exp(1j * phases[m - 1]) * np.exp(-2j * np.pi * f * delays[n])
    return w / math.sqrt(config.num_antennas)


def alignment_objective_direct(
    config: SystemConfig,
    grid: SubcarrierGrid,
    target: BeamTarget,
    delays,
    phases,
    alpha_phases,
) -> float:
    """Weighted real-part alignment, summed subcarrier by subcarrier."""
    total = 0.0
    for pos in range(grid.num_subcarriers):
        w = effective_beam_direct(config, grid, delays, phases, pos)
        inner = np.vdot(target.unit_vectors[pos], w)
        total += target.weights[pos] * np.real(np.exp(1j * alpha_phases[pos]) * inner)
    return float(total)


def group_objective_direct(
    config: SystemConfig,
    grid: SubcarrierGrid,
    target: BeamTarget,
    n: int,
    tau: float,
    phases_of_group,
    alpha_phases,
) -> float:
    """Per-delay-line alignment term with explicit phases (probing helper)."""
    group = config.ttd_groups[n - 1]
    total = 0.0
    for pos in range(grid.num_subcarriers):
        f = grid.frequencies[pos]
        for j, m in enumerate(group):
            term = (
                np.exp(1j * alpha_phases[pos])
                * np.conj(target.unit_vectors[pos, m - 1])
                * np.exp(1j * phases_of_group[j])
                * np.exp(-2j * np.pi * f * tau)
            )
            total += target.weights[pos] * np.real(term)
    return float(total)


def brute_force_best(
    config: SystemConfig,
    grid: SubcarrierGrid,
    target: BeamTarget,
    n_tau: int = 2001,
    n_phi: int = 721,
) -> float:
    """Dense grid maximum of the alignment objective for two-antenna arrays.

    Attains exactly the same value set as the full (tau_1, tau_2, phi_1, phi_2)
    grid with ``n_tau`` points per delay and ``n_phi`` per phase: the objective
    (with optimally aligned digital phases) is invariant to a common delay and
    a common phase, so only tau_2 - tau_1 (a uniform grid of 2*n_tau - 1
    differences) and phi_2 - phi_1 (the same wrapped n_phi set) matter.
    """
    assert config.num_antennas == 2
    f = grid.frequencies
    w = target.weights
    x1 = np.conj(target.unit_vectors[:, 0])
    x2 = np.conj(target.unit_vectors[:, 1])
    dphi = np.exp(1j * np.linspace(-np.pi, np.pi, n_phi))
    if config.num_ttds == 1:
        z = x1[:, None] + x2[:, None] * dphi[None, :]
        return float((w[:, None] * np.abs(z)).sum(axis=0).max() / math.sqrt(2.0))
    half = config.delay_range / (2.0 * config.bandwidth)
    deltas = np.linspace(-2.0 * half, 2.0 * half, 2 * n_tau - 1)
    best = 0.0
    for d in deltas:
        ramp = np.exp(-2j * np.pi * f * d)
        z = x1[:, None] + (x2 * ramp)[:, None] * dphi[None, :]
        best = max(best, float((w[:, None] * np.abs(z)).sum(axis=0).max()))
    return best / math.sqrt(2.0)


def random_steered_target(config: SystemConfig, grid: SubcarrierGrid, rng: np.random.Generator) -> BeamTarget:
    """Random in-domain target: swept, split, or three-band steering."""
    kind = rng.integers(0, 3)
    if kind == 0:
        theta0 = float(rng.uniform(-1.0, 1.0))
        width = float(rng.uniform(0.0, min(np.pi / 2.0 - abs(theta0), 1.0) * 2.0))
        return behavior1_target(config, grid, theta0, width)
    if kind == 1:
        return behavior2_target(
            config,
            grid,
            float(rng.uniform(-np.pi / 2, np.pi / 2)),
            float(rng.uniform(-np.pi / 2, np.pi / 2)),
        )
    lo = int(grid.indices[0])
    hi = int(grid.indices[-1])
    edges = sorted(rng.choice(np.arange(lo + 1, hi + 1), size=2, replace=False))
    angles = list(rng.uniform(-np.pi / 2, np.pi / 2, size=3))
    return multi_angle_target(config, grid, [int(e) for e in edges], angles)


def random_gaussian_target(config: SystemConfig, grid: SubcarrierGrid, rng: np.random.Generator) -> BeamTarget:
    shape = (grid.num_subcarriers, config.num_antennas)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    v *= math.sqrt(config.total_power / np.sum(np.abs(v) ** 2))
    return BeamTarget(vectors=v, weights=np.ones(shape[0]), power_budget=config.total_power)
