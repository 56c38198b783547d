"""Batch front-end: run configs in, machine-readable results out.

Subcommands: fci, ssvqd, savqd, gradcheck, overlap-check. Each run writes a
deterministic summary.json (wall-times live in its separate "timing" section)
plus line-oriented CSV traces. Exit codes: 0 ok, 2 config error, 3 FCIDUMP
parse error, 4 non-convergence, 5 internal invariant violation or failed
check suite.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from . import checks, fci
from .drivers import (
    ActiveSpaceModel,
    DeflationConfig,
    OptimizerConfig,
    SAWeights,
    StateSolution,
    check_deflation_validity,
    solve_savqd,
    solve_ssvqd,
    weighted_sum_report,
)
from .hamio import FcidumpError, MolecularIntegrals, load_fcidump
from .orbopt import PartialUnitary, orth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_NONCONVERGED = 4
EXIT_INTERNAL = 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    fcidump: str = ""
    n_active_spin_orbitals: int = 0
    n_states: int = 1
    weights: list[float] | None = None
    betas: float | list[float] = 15.0
    eta: float = 1e-3
    inner_cap: int = 100
    theta_method: str = "nelder-mead"
    theta_budget: int = 2000
    ansatz_reps: int = 2
    outer_tol: float = 1e-4
    max_outer: int = 60
    orbital_inner_tol: float = 1e-7
    max_orbital_cycles: int = 200
    per_state_init: list | None = None   # per state: list of 1-based columns or "random"
    seed: int = 0
    include_core_energy: bool = False
    compute_fci_reference: bool = True
    fci_roots: int = 0
    fci_tol: float = 1e-8
    overlap_report_tol: float = 1e-8     # flag final pairwise overlaps above this
    output_dir: str = ""

    @staticmethod
    def from_yaml(path: str | Path) -> "RunConfig":
        raw = yaml.safe_load(Path(path).read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("config must be a flat key-value mapping")
        known = {f for f in RunConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return RunConfig(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _sector(ints: MolecularIntegrals) -> tuple[int, int]:
    n_alpha = (ints.n_electrons + ints.ms2) // 2
    n_beta = ints.n_electrons - n_alpha
    if n_alpha < 0 or n_beta < 0 or n_alpha - n_beta != ints.ms2:
        raise ConfigError(f"inconsistent NELEC={ints.n_electrons}, MS2={ints.ms2}")
    return n_alpha, n_beta


def _state_inits(config: RunConfig, ints: MolecularIntegrals,
                 rng: np.random.Generator) -> list[PartialUnitary]:
    m = ints.m_spatial
    n = config.n_active_spin_orbitals // 2
    entries = config.per_state_init
    if entries is None:
        entries = [list(range(1, n + 1))] * config.n_states
    if len(entries) != config.n_states:
        raise ConfigError("per_state_init must list one entry per state")
    inits = []
    for entry in entries:
        if entry == "random":
            inits.append(PartialUnitary(orth(rng.standard_normal((m, n)))))
            continue
        cols = [int(c) for c in entry]
        if len(cols) != n or len(set(cols)) != n:
            raise ConfigError(f"init {entry} must name {n} distinct spatial columns")
        if any(c < 1 or c > m for c in cols):
            raise ConfigError(f"init {entry} has columns outside 1..{m}")
        inits.append(PartialUnitary.from_columns(m, [c - 1 for c in cols]))
    return inits


def _optimizer_config(config: RunConfig) -> OptimizerConfig:
    return OptimizerConfig(
        eta=config.eta, inner_cap=config.inner_cap,
        theta_method=config.theta_method, theta_budget=config.theta_budget,
        outer_tol=config.outer_tol, max_outer=config.max_outer,
        orbital_inner_tol=config.orbital_inner_tol,
        max_orbital_cycles=config.max_orbital_cycles,
        ansatz_reps=config.ansatz_reps)


def _validate(config: RunConfig, ints: MolecularIntegrals) -> None:
    n = config.n_active_spin_orbitals
    if n <= 0 or n % 2:
        raise ConfigError("n_active_spin_orbitals must be even and positive")
    if n > 2 * ints.m_spatial:
        raise ConfigError(f"active space {n} exceeds {2 * ints.m_spatial} spin-orbitals")
    if config.n_states < 1:
        raise ConfigError("n_states must be at least 1")
    if config.weights is not None and len(config.weights) != config.n_states:
        raise ConfigError("weights must have one entry per state")


def _weights(config: RunConfig) -> SAWeights:
    if config.weights is None:
        return SAWeights.descending(config.n_states)
    return SAWeights(np.asarray(config.weights, dtype=float))


def _fci_reference(ints: MolecularIntegrals, config: RunConfig, k: int):
    n_alpha, n_beta = _sector(ints)
    basis = fci.build_basis(2 * ints.m_spatial, n_alpha, n_beta)
    return fci.lowest_eigenpairs(ints, basis, k, tol=config.fci_tol), basis


def _write_summary(out_dir: Path, payload: dict, timing: dict) -> None:
    payload = dict(payload)
    payload["timing"] = timing
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.json", "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def _state_rows(sol: StateSolution, e_core: float, fci_elec: np.ndarray | None):
    rows = []
    for rec in sol.trace:
        row = {
            "iteration": rec.iteration,
            "energy_after_theta": rec.energy_after_theta,
            "energy_electronic": rec.energy,
            "energy_total": rec.energy + e_core,
            "abs_delta_e": rec.abs_delta_e,
            "objective": rec.objective,
            "theta_evals": rec.theta_evals,
            "orbital_cycles": rec.orbital_cycles,
        }
        if fci_elec is not None and sol.index - 1 < len(fci_elec):
            row["abs_err_vs_fci"] = abs(rec.energy - fci_elec[sol.index - 1])
        for j, o in enumerate(rec.overlaps_sq):
            row[f"overlap_sq_{j + 1}"] = o
        rows.append(row)
    return rows


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _solution_payload(sol: StateSolution, e_core: float,
                      fci_elec: np.ndarray | None) -> dict:
    entry = {
        "state": sol.index,
        "energy_electronic": sol.energy,
        "energy_total": sol.energy + e_core,
        "converged": sol.converged,
        "two_step_iterations": len(sol.trace),
        "overlaps_sq_vs_lower": list(sol.overlaps_sq),
        "orbital_block": sol.u.b.tolist(),
        "theta": np.asarray(sol.theta).tolist(),
    }
    if fci_elec is not None and sol.index - 1 < len(fci_elec):
        ref = fci_elec[sol.index - 1]
        entry["fci_electronic"] = float(ref)
        entry["relative_error_vs_fci"] = float((sol.energy - ref) / abs(ref))
    return entry


def run_fci(config: RunConfig, out_dir: Path) -> int:
    ints = load_fcidump(config.fcidump)
    k = config.fci_roots or config.n_states
    t0 = time.perf_counter()
    result, basis = _fci_reference(ints, config, k)
    elapsed = time.perf_counter() - t0
    rows = [{
        "root": i + 1,
        "energy_electronic": float(result.electronic_energies[i]),
        "energy_total": float(result.energies[i]),
        "residual_norm": float(result.residual_norms[i]),
    } for i in range(k)]
    _ensure(out_dir)
    _write_csv(out_dir / "fci_states.csv", rows)
    payload = {
        "subcommand": "fci",
        "config": asdict(config),
        "n_determinants": basis.size,
        "e_core": ints.e_core,
        "roots": rows,
    }
    _write_summary(out_dir, payload, {"fci_seconds": elapsed})
    for row in rows:
        print(f"root {row['root']}: electronic {row['energy_electronic']:.6f} "
              f"total {row['energy_total']:.6f}")
    return EXIT_OK


def _ensure(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_ssvqd(config: RunConfig, out_dir: Path) -> int:
    ints = load_fcidump(config.fcidump)
    _validate(config, ints)
    rng = np.random.default_rng(config.seed)
    n_alpha, n_beta = _sector(ints)
    model = ActiveSpaceModel(ints, config.n_active_spin_orbitals, n_alpha, n_beta,
                             ansatz_reps=config.ansatz_reps)
    deflation = DeflationConfig(config.betas)
    opt = _optimizer_config(config)
    inits = _state_inits(config, ints, rng)
    weights = _weights(config)

    timing: dict[str, float] = {}
    fci_elec = None
    if config.compute_fci_reference:
        t0 = time.perf_counter()
        ref, _ = _fci_reference(ints, config, config.n_states)
        timing["fci_seconds"] = time.perf_counter() - t0
        fci_elec = ref.electronic_energies

    t0 = time.perf_counter()
    solutions = solve_ssvqd(config.n_states, inits, deflation, opt, model)
    timing["solve_seconds"] = time.perf_counter() - t0

    _ensure(out_dir)
    for sol in solutions:
        _write_csv(out_dir / f"ssvqd_state_{sol.index}.csv",
                   _state_rows(sol, ints.e_core, fci_elec))
    energies = [s.energy for s in solutions]
    overlap_warnings = [
        f"state {s.index} vs state {j + 1}: |overlap|^2 = {o:.3e}"
        for s in solutions for j, o in enumerate(s.overlaps_sq)
        if o > config.overlap_report_tol]
    payload = {
        "subcommand": "ssvqd",
        "config": asdict(config),
        "e_core": ints.e_core,
        "states": [_solution_payload(s, ints.e_core, fci_elec) for s in solutions],
        "weighted_sum_electronic": weighted_sum_report(energies, weights),
        "weighted_sum_total": weighted_sum_report(
            [e + ints.e_core for e in energies], weights),
        "deflation_warnings": check_deflation_validity(solutions, deflation),
        "overlap_warnings": overlap_warnings,
    }
    if fci_elec is not None:
        payload["fci_electronic"] = fci_elec.tolist()
        payload["weighted_sum_fci_electronic"] = weighted_sum_report(
            fci_elec[:config.n_states], weights)
    _write_summary(out_dir, payload, timing)

    for s in solutions:
        print(f"state {s.index}: E_elec={s.energy:.6f} converged={s.converged} "
              f"iters={len(s.trace)}")
    if not all(s.converged for s in solutions):
        return EXIT_NONCONVERGED
    if not all(s.u.is_orthonormal() for s in solutions):
        return EXIT_INTERNAL
    return EXIT_OK


def run_savqd(config: RunConfig, out_dir: Path) -> int:
    ints = load_fcidump(config.fcidump)
    _validate(config, ints)
    rng = np.random.default_rng(config.seed)
    n_alpha, n_beta = _sector(ints)
    model = ActiveSpaceModel(ints, config.n_active_spin_orbitals, n_alpha, n_beta,
                             ansatz_reps=config.ansatz_reps)
    deflation = DeflationConfig(config.betas)
    opt = _optimizer_config(config)
    weights = _weights(config)
    init = _state_inits(config, ints, rng)[0]

    timing: dict[str, float] = {}
    fci_elec = None
    if config.compute_fci_reference:
        t0 = time.perf_counter()
        ref, _ = _fci_reference(ints, config, config.n_states)
        timing["fci_seconds"] = time.perf_counter() - t0
        fci_elec = ref.electronic_energies

    t0 = time.perf_counter()
    solution = solve_savqd(config.n_states, init, weights, deflation, opt, model)
    timing["solve_seconds"] = time.perf_counter() - t0

    _ensure(out_dir)
    rows = [{
        "iteration": rec.iteration,
        **{f"energy_electronic_{i + 1}": e for i, e in enumerate(rec.energies)},
        "weighted_sum": rec.weighted_sum,
        "abs_delta": rec.abs_delta,
        "theta_evals": rec.theta_evals,
        "orbital_steps": rec.orbital_steps,
    } for rec in solution.trace]
    _write_csv(out_dir / "savqd_trace.csv", rows)
    payload = {
        "subcommand": "savqd",
        "config": asdict(config),
        "e_core": ints.e_core,
        "states": [_solution_payload(s, ints.e_core, fci_elec) for s in solution.states],
        "shared_orbital_block": solution.u.b.tolist(),
        "weighted_sum_electronic": solution.weighted_sum,
        "converged": solution.converged,
    }
    if fci_elec is not None:
        payload["fci_electronic"] = fci_elec.tolist()
        payload["weighted_sum_fci_electronic"] = weighted_sum_report(
            fci_elec[:config.n_states], weights)
    _write_summary(out_dir, payload, timing)

    for s in solution.states:
        print(f"state {s.index}: E_elec={s.energy:.6f}")
    print(f"weighted sum: {solution.weighted_sum:.6f} converged={solution.converged}")
    return EXIT_OK if solution.converged else EXIT_NONCONVERGED


def run_checks(which: str, seed: int, out_dir: Path | None) -> int:
    if which == "gradcheck":
        results = checks.run_gradient_checks(seed)
    else:
        results = checks.run_overlap_checks(seed)
    for res in results:
        print(res.line())
    if out_dir is not None:
        _ensure(out_dir)
        payload = {
            "subcommand": which,
            "seed": seed,
            "checks": [asdict(r) for r in results],
        }
        _write_summary(out_dir, payload, {})
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oovqd",
        description="orbital-optimized excited-state solvers on exact statevectors")
    parser.add_argument("subcommand",
                        choices=["fci", "ssvqd", "savqd", "gradcheck", "overlap-check"])
    parser.add_argument("--config", type=str, default=None, help="YAML run config")
    parser.add_argument("--output", type=str, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    args = parser.parse_args(argv)

    try:
        if args.subcommand in ("gradcheck", "overlap-check"):
            seed = args.seed if args.seed is not None else 0
            out = Path(args.output) if args.output else None
            return run_checks(args.subcommand, seed, out)

        if args.config is None:
            print("--config is required for this subcommand", file=sys.stderr)
            return EXIT_CONFIG
        config = RunConfig.from_yaml(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.output is not None:
            config.output_dir = args.output
        if not config.output_dir:
            config.output_dir = f"runs/{args.subcommand}"
        if not config.fcidump:
            raise ConfigError("config must set fcidump")
        out_dir = Path(config.output_dir)

        if args.subcommand == "fci":
            return run_fci(config, out_dir)
        if args.subcommand == "ssvqd":
            return run_ssvqd(config, out_dir)
        return run_savqd(config, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FcidumpError as exc:
        print(f"FCIDUMP error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except fci.EigensolverError as exc:
        print(f"eigensolver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
