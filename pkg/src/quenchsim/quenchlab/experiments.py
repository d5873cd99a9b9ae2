"""Experiment execution: single runs, the three protocol modes, and sweeps."""

from __future__ import annotations

import itertools
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..analysis import (
    ObservableRecord,
    SpectrumReport,
    anharmonicity_expectation,
    fidelity,
    half_chain_entropy,
    pauli_expectation,
    sector_spectrum,
    site_populations,
)
from ..fockspace import build_basis, build_product_state, embed_state, parse_product_state
from ..operators import (
    AnharmonicityProfile,
    CouplingProfile,
    DriveSpec,
    TransverseProfile,
    build_hopping,
    build_onsite_anharmonicity,
    build_transverse,
)
from ..propagator import Protocol, Segment, evolve_static, reverse_of, run_protocol
from .config import ConfigError, ExperimentConfig
from .records import default_output_dir, write_records, write_spectrum

__all__ = ["run_experiment", "SweepSpec", "run_sweep", "write_output"]


def _profiles(config: ExperimentConfig):
    if config.sites > 1:
        coupling = CouplingProfile.from_mhz(config.coupling_mhz)
    else:
        coupling = CouplingProfile(())
    anh = AnharmonicityProfile.from_mhz(config.anharmonicity_mhz)
    trans = TransverseProfile.from_mhz(config.transverse_mhz)
    return coupling, anh, trans


def _drive_specs(config: ExperimentConfig):
    """(forward drive, backward drive) or (None, None) when undriven."""
    if config.drive_kind == "none" and config.drive_pattern_mhz is None:
        return None, None
    nu = config.drive_frequency_mhz
    if config.drive_pattern_mhz is not None:
        fwd = DriveSpec.from_mhz(config.drive_pattern_mhz, nu)
        bwd = None
        if config.drive_backward_mhz is not None and config.drive_forward_mhz:
            ratio = config.drive_backward_mhz / config.drive_forward_mhz
            bwd = DriveSpec.from_mhz(
                [e * ratio for e in config.drive_pattern_mhz], nu
            )
    else:
        fwd = DriveSpec.staggered_odd(config.sites, config.drive_forward_mhz, nu)
        bwd = None
        if config.drive_backward_mhz is not None:
            bwd = DriveSpec.staggered_odd(config.sites, config.drive_backward_mhz, nu)
    return fwd, bwd


def _number_eigenstate(config: ExperimentConfig) -> int | None:
    """Total occupation if the initial state has a sharp particle number."""
    if config.initial_tokens is not None:
        if all(c.isdigit() for c in config.initial_tokens):
            return sum(int(c) for c in config.initial_tokens)
        return None
    total = 0
    for amp0, amp1 in config.initial_amplitudes:
        live = [lvl for lvl, a in enumerate((amp0, amp1)) if a != 0]
        if len(live) != 1:
            return None
        total += live[0]
    return total


def _pick_sector(config: ExperimentConfig) -> int | None:
    omega_on = any(v != 0 for v in config.transverse_mhz)
    if config.sector == "full":
        return None
    if config.sector == "auto":
        if omega_on:
            return None
        return _number_eigenstate(config)
    if omega_on:
        raise ConfigError("a transverse field needs the full basis", key="sector")
    n = _number_eigenstate(config)
    if n is not None and n != config.sector:
        raise ConfigError(
            f"initial state has N={n}, sector asks for {config.sector}", key="sector"
        )
    return int(config.sector)


def _initial_state(config: ExperimentConfig, basis):
    if config.initial_tokens is not None:
        return parse_product_state(config.initial_tokens, basis)
    sites = [{0: a0, 1: a1} for a0, a1 in config.initial_amplitudes]
    return build_product_state(sites, basis)


def _observer(config: ExperimentConfig, psi0=None):
    want = set(config.observables)
    cut = config.sites // 2

    def observe(t, psi, cross=None):
        rec = ObservableRecord(time_ns=t)
        if "fidelity" in want:
            if cross is not None:
                rec.fidelity = cross
            elif psi0 is not None:
                rec.fidelity = fidelity(psi0, psi)
        if "populations" in want:
            rec.populations = site_populations(psi)
        if "pauli" in want:
            rec.pauli_x = np.array(
                [pauli_expectation(psi, j, "x") for j in range(config.sites)]
            )
            rec.pauli_z = np.array(
                [pauli_expectation(psi, j, "z") for j in range(config.sites)]
            )
        if "entropy" in want and config.sites > 1:
            rec.entropy = half_chain_entropy(psi, cut)
        if "anharmonicity" in want:
            rec.anharmonicity = anharmonicity_expectation(psi)
        return rec

    return observe


def _segment(config, duration, coupling, anh, trans, drive):
    return Segment(
        duration_ns=duration,
        coupling=coupling,
        anharmonicity=anh,
        transverse=None if trans.is_zero() else trans,
        drive=drive,
    )


def run_experiment(config: ExperimentConfig):
    """Execute one config and return its records.

    Trajectory modes return a list of ObservableRecord; spectrum mode
    returns a SpectrumReport.
    """
    coupling, anh, trans = _profiles(config)
    if config.mode == "spectrum":
        return sector_spectrum(
            config.sites, config.spectrum_particles, config.levels, coupling, anh
        )

    sector = _pick_sector(config)
    basis = build_basis(config.sites, config.levels, sector=sector)
    psi0 = _initial_state(config, basis)
    drive_f, drive_b = _drive_specs(config)

    if config.mode == "time-reversal":
        seg_f = _segment(config, config.forward_ns, coupling, anh, trans, drive_f)
        if drive_f is not None:
            if drive_b is None:
                raise ConfigError(
                    "driven time reversal needs drive_backward_mhz",
                    key="drive_backward_mhz",
                )
            seg_b = reverse_of(seg_f, drive_override=drive_b)
        else:
            seg_b = reverse_of(seg_f)
        protocol = Protocol(
            (seg_f, seg_b),
            sample_dt_ns=None if config.stroboscopic else config.dt_ns,
            stroboscopic=config.stroboscopic,
            record_states=config.record_states,
            drive_substep_ns=config.drive_substep_ns,
        )
        observe = _observer(config, psi0=psi0)
        traj = run_protocol(protocol, psi0, observer=observe)
        return traj.records

    if config.mode == "single-run":
        seg = _segment(config, config.duration_ns, coupling, anh, trans, drive_f)
        protocol = Protocol(
            (seg,),
            sample_dt_ns=None if config.stroboscopic else config.dt_ns,
            stroboscopic=config.stroboscopic,
            record_states=config.record_states,
            drive_substep_ns=config.drive_substep_ns,
        )
        observe = _observer(config, psi0=psi0)
        traj = run_protocol(protocol, psi0, observer=observe)
        return traj.records

    # one-direction-compare: the same initial state evolved under the
    # two-level hopping model and under the K-level model with on-site
    # interaction, cross fidelity taken through basis embedding.
    basis2 = build_basis(config.sites, 2, sector=sector)
    psi2 = _initial_state(config, basis2)
    psiK = psi0
    H2 = build_hopping(basis2, coupling)
    HK = build_hopping(basis, coupling) + build_onsite_anharmonicity(basis, anh)
    if not trans.is_zero():
        H2 = H2 + build_transverse(basis2, trans)
        HK = HK + build_transverse(basis, trans)
    observe = _observer(config)
    times = np.arange(0.0, config.duration_ns + 1e-9, config.dt_ns)
    if times[-1] < config.duration_ns - 1e-9:
        times = np.append(times, config.duration_ns)
    records = []
    for i, t in enumerate(times):
        if i:
            dt = float(t - times[i - 1])
            psi2 = evolve_static(H2, psi2, dt)
            psiK = evolve_static(HK, psiK, dt)
        cross = fidelity(embed_state(psi2, basis), psiK)
        records.append(observe(float(t), psiK, cross=cross))
    return records


def write_output(config: ExperimentConfig, result, path=None) -> str:
    """Write a run's result to its configured (or given) destination."""
    if path is None:
        path = config.output_path
    if path is None:
        raise ValueError("no output path configured")
    path = os.fspath(path)
    if not os.path.isabs(path) and os.path.dirname(path) == "":
        path = os.path.join(default_output_dir(), path)
    if isinstance(result, SpectrumReport):
        write_spectrum(result, path, config.output_format)
    else:
        write_records(result, path, config.output_format, sites=config.sites)
    return path


@dataclass
class SweepSpec:
    """Cartesian parameter sweep over config keys.

    ``axes`` maps config keys to value lists (strings, parsed per key by
    the config schema). Points run on a bounded worker pool; failures are
    collected rather than aborting the sweep unless fail_fast is set.
    """

    base: ExperimentConfig
    axes: dict = field(default_factory=dict)
    parallelism: int = 1
    fail_fast: bool = False
    output_dir: str | None = None

    @classmethod
    def from_config(cls, config: ExperimentConfig, extra_axes=None, parallelism=None,
                    output_dir=None) -> "SweepSpec":
        axes = dict(config.sweep_axes)
        if extra_axes:
            axes.update(extra_axes)
        return cls(
            base=config,
            axes=axes,
            parallelism=parallelism or config.parallelism,
            output_dir=output_dir,
        )

    @property
    def size(self) -> int:
        n = 1
        for values in self.axes.values():
            n *= len(values)
        return n


@dataclass
class SweepResult:
    params: dict
    path: str | None
    error: str | None = None


_SAFE = re.compile(r"[^A-Za-z0-9._+-]")


def _point_name(stem: str, params: dict, fmt: str) -> str:
    if not params:
        return f"{stem}.{fmt}"
    tail = "__".join(f"{k}={_SAFE.sub('_', v)}" for k, v in params.items())
    return f"{stem}__{tail}.{fmt}"


def _run_point(base: ExperimentConfig, params: dict, out_path: str) -> str:
    config = base.with_overrides(params)
    result = run_experiment(config)
    if isinstance(result, SpectrumReport):
        write_spectrum(result, out_path, config.output_format)
    else:
        write_records(result, out_path, config.output_format, sites=config.sites)
    return out_path


def run_sweep(spec: SweepSpec) -> list:
    """Run every grid point, writing one output file per point.

    File names embed the axis values, so identical sweeps land on identical
    names. Returns a SweepResult per point in deterministic grid order.
    """
    base = spec.base
    stem = "sweep"
    if base.output_path:
        stem = os.path.splitext(os.path.basename(base.output_path))[0]
    out_dir = spec.output_dir or (
        os.path.dirname(base.output_path) if base.output_path else None
    ) or default_output_dir()
    os.makedirs(out_dir, exist_ok=True)

    keys = list(spec.axes)
    grid = [
        dict(zip(keys, combo))
        for combo in itertools.product(*(spec.axes[k] for k in keys))
    ]
    jobs = [
        (params, os.path.join(out_dir, _point_name(stem, params, base.output_format)))
        for params in grid
    ]
    results: list[SweepResult] = []
    if spec.parallelism <= 1 or len(jobs) <= 1:
        for params, path in jobs:
            try:
                _run_point(base, params, path)
                results.append(SweepResult(params, path))
            except Exception as exc:  # noqa: BLE001 - reported per point
                if spec.fail_fast:
                    raise
                results.append(SweepResult(params, None, error=str(exc)))
    else:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            futures = [pool.submit(_run_point, base, params, path) for params, path in jobs]
            for (params, path), fut in zip(jobs, futures):
                try:
                    fut.result()
                    results.append(SweepResult(params, path))
                except Exception as exc:  # noqa: BLE001
                    if spec.fail_fast:
                        raise
                    results.append(SweepResult(params, None, error=str(exc)))
    return results
