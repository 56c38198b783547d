"""Solver orchestration: deflated objectives, the alternating two-step
state-specific solver, and the state-averaged baseline.

Per state k the objective is F_k = E(theta, u) + sum_j beta_j O_jk where the
overlap penalty runs over the already-solved lower states. Circuit angles are
optimized derivative-free at fixed u; the orbital block descends along exact
analytic gradients with the overlap contribution frozen for stretches of L
steps. Energies everywhere in this module are electronic (no core constant).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import fci
from .ansatz import AnsatzCircuit, apply_ansatz, build_uccsd
from .fockspace import (
    FockVector,
    apply_exterior_transform,
    hf_reference,
    sector_indices,
)
from .hamio import MolecularIntegrals
from .orbopt import (
    OrthRankError,
    PartialUnitary,
    RDMPair,
    measure_rdms,
    overlap,
    overlap_gradient,
    rotated_energy,
    rotated_energy_gradient,
    rotated_integrals,
    projected_gd_step,
)


@dataclass
class DeflationConfig:
    """Penalty weights for the overlap terms against lower states."""

    betas: float | list[float] = 15.0

    def beta(self, j: int) -> float:
        if np.isscalar(self.betas):
            value = float(self.betas)
        else:
            value = float(self.betas[j])
        if value <= 0:
            raise ValueError("deflation weights must be positive")
        return value


@dataclass
class OptimizerConfig:
    eta: float = 1e-3                    # orbital step size
    inner_cap: int = 100                 # L: steps per frozen-overlap stretch
    theta_method: str = "slsqp"          # or "nelder-mead" | "exact"
    theta_budget: int = 2000             # objective evaluations per theta phase
    outer_tol: float = 1e-4              # |dE| across two-step iterations
    max_outer: int = 60
    orbital_inner_tol: float = 1e-7      # objective change per overlap refresh
    max_orbital_cycles: int = 200
    warm_start: bool = True
    flip_penalty_gradient: bool = False  # descend along grad E - sum beta grad O
    ansatz_reps: int = 2

    def __post_init__(self):
        if self.eta <= 0 or self.inner_cap < 1 or self.outer_tol <= 0:
            raise ValueError("eta > 0, inner_cap >= 1 and outer_tol > 0 required")


@dataclass
class SAWeights:
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 1 or len(self.w) == 0 or np.any(self.w <= 0):
            raise ValueError("state-average weights must be positive")

    @staticmethod
    def descending(k: int) -> "SAWeights":
        return SAWeights(np.arange(k, 0, -1, dtype=float))


@dataclass
class TwoStepRecord:
    iteration: int
    energy_after_theta: float
    energy: float
    abs_delta_e: float
    objective: float
    overlaps_sq: tuple[float, ...]
    theta_evals: int
    orbital_cycles: int


@dataclass
class StateSolution:
    index: int
    theta: np.ndarray
    u: PartialUnitary
    psi: FockVector
    energy: float
    trace: list[TwoStepRecord]
    converged: bool
    overlaps_sq: tuple[float, ...] = ()


class ActiveSpaceModel:
    """Shared context: active sector basis, ansatz circuit, HF reference."""

    def __init__(self, ints: MolecularIntegrals, n_active_spin: int,
                 n_alpha: int, n_beta: int, ansatz_reps: int = 2):
        if n_active_spin % 2:
            raise ValueError("active spin-orbital count must be even")
        if n_active_spin > 2 * ints.m_spatial:
            raise ValueError("active space larger than the orbital space")
        self.ints = ints
        self.n_active_spin = n_active_spin
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.n_active_spatial = n_active_spin // 2
        self.sector = sector_indices(n_active_spin, n_alpha, n_beta)
        self.active_basis = fci.build_basis(n_active_spin, n_alpha, n_beta)
        self.circuit: AnsatzCircuit = build_uccsd(n_active_spin, n_alpha, n_beta, ansatz_reps)
        self.ref = hf_reference(n_active_spin, n_alpha, n_beta)

    def hamiltonian_matrix(self, u: PartialUnitary) -> np.ndarray:
        """Dense sector matrix of the rotated-basis electronic Hamiltonian."""
        act = rotated_integrals(u, self.ints)
        dim = self.active_basis.size
        cols = [fci.hamiltonian_matvec(act, self.active_basis, np.eye(dim)[:, i])
                for i in range(dim)]
        hmat = np.column_stack(cols)
        return 0.5 * (hmat + hmat.T)

    def prepare(self, theta: np.ndarray) -> FockVector:
        return apply_ansatz(self.circuit, theta, self.ref)

    def sector_amps(self, psi: FockVector) -> np.ndarray:
        return psi.amps[self.sector]

    def deflation_vectors(self, u: PartialUnitary, lower: list[StateSolution]) -> np.ndarray:
        """Rows g_j with <Psi_j|U(u_j^T u)|psi> = g_j . sector_amps(psi)."""
        if not lower:
            return np.zeros((0, len(self.sector)))
        rows = []
        for sol in lower:
            prod = sol.u.b.T @ u.b
            spin = np.kron(np.eye(2), prod)
            # <Psi_j| U(m) |psi> = (U(m^T) Psi_j) . psi for real amplitudes
            g = apply_exterior_transform(spin.T, sol.psi)
            rows.append(g.amps[self.sector])
        return np.stack(rows)


def vqd_objective(theta: np.ndarray, u: PartialUnitary, lower: list[StateSolution],
                  deflation: DeflationConfig, model: ActiveSpaceModel,
                  hmat: np.ndarray | None = None,
                  gvecs: np.ndarray | None = None) -> float:
    """F_k(theta, u) = E + sum_j beta_j |<Psi_j|U(u_j^T u)|Psi(theta)>|^2."""
    if hmat is None:
        hmat = model.hamiltonian_matrix(u)
    if gvecs is None:
        gvecs = model.deflation_vectors(u, lower)
    p = model.sector_amps(model.prepare(theta))
    value = float(p @ hmat @ p)
    for j in range(len(lower)):
        value += deflation.beta(j) * float(gvecs[j] @ p) ** 2
    return value


@dataclass
class ThetaResult:
    theta: np.ndarray
    psi: FockVector
    objective: float
    energy: float
    n_evals: int


def _dfo_minimize(fun, x0: np.ndarray, budget: int, method: str,
                  restart_tol: float = 1e-9) -> tuple[np.ndarray, float, int]:
    """Deterministic derivative-free minimization with incumbent restarts.

    Restarts from the best point until a converged run stops improving by
    more than restart_tol or the evaluation budget runs out. SLSQP sees the
    objective only through evaluations (finite-difference jacobian), which is
    dramatically more reliable than a simplex in the ~50-parameter phases.
    """
    best_x = np.asarray(x0, dtype=float)
    best_f = fun(best_x)
    used = 1
    n = len(best_x)
    while used < budget:
        remaining = budget - used
        if method == "nelder-mead":
            res = scipy.optimize.minimize(
                fun, best_x, method="Nelder-Mead",
                options={"maxfev": remaining, "xatol": 1e-9, "fatol": 1e-11,
                         "adaptive": True})
        elif method == "slsqp":
            maxiter = max(3, remaining // (n + 2))
            res = scipy.optimize.minimize(
                fun, best_x, method="SLSQP",
                options={"maxiter": maxiter, "ftol": 1e-11})
        else:
            raise ValueError(f"unknown theta optimizer {method!r}")
        used += max(res.nfev, 1)
        improved = res.fun < best_f - restart_tol
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x), float(res.fun)
        if not improved:
            break
    return best_x, best_f, used


def _quarter_turn_starts(circuit: AnsatzCircuit) -> list[np.ndarray]:
    """One candidate per unique excitation: that factor opened to pi/2.

    These land on (combinations of) excited determinants, giving the deflated
    search deterministic entry points outside the reference state's basin.
    """
    starts = []
    for i in range(len(circuit.ops)):
        theta = np.zeros(circuit.n_params)
        theta[i] = np.pi / 2
        starts.append(theta)
    return starts


# a deflated minimum must be orthogonal to the lower states; a larger residual
# penalty marks a spurious basin and triggers the multi-start fallback
PENALTY_FALLBACK_TOL = 1e-4


def _minimize_with_fallback(fun, theta0, budget, method, circuit,
                            residual_penalty,
                            multistart: bool = False) -> tuple[np.ndarray, float, int]:
    """DFO run with basin insurance for deflated objectives.

    With multistart set (cold starts of excited states), the three
    best-scoring candidates among the zero vector and all quarter-turn
    excitations are each minimized and the lowest basin wins; afterwards a
    residual deflation penalty above tolerance still triggers the same
    multi-start as a rescue."""
    theta, fval, used = _dfo_minimize(fun, theta0, budget, method)

    def try_candidates():
        nonlocal theta, fval, used
        candidates = [np.zeros(circuit.n_params)] + _quarter_turn_starts(circuit)
        for start in sorted(candidates, key=fun)[:3]:
            alt, alt_f, alt_used = _dfo_minimize(fun, start, budget, method)
            used += alt_used
            if alt_f < fval:
                theta, fval = alt, alt_f

    if multistart:
        try_candidates()
    if residual_penalty is not None and residual_penalty(theta) > PENALTY_FALLBACK_TOL:
        try_candidates()
    return theta, fval, used


def optimize_theta(u: PartialUnitary, lower: list[StateSolution],
                   deflation: DeflationConfig, config: OptimizerConfig,
                   model: ActiveSpaceModel, theta0: np.ndarray) -> ThetaResult:
    """Derivative-free phase: minimize the deflated objective over angles at
    fixed orbitals. The "exact" method instead diagonalizes the penalized
    sector operator and returns its ground vector directly.

    If the optimizer lands in a basin whose deflation penalty stays
    significant, the phase restarts from quarter-turn excitation candidates
    and keeps the overall best, so one bad warm start cannot lock the
    alternation into a spurious root.
    """
    hmat = model.hamiltonian_matrix(u)
    gvecs = model.deflation_vectors(u, lower)
    betas = np.array([deflation.beta(j) for j in range(len(lower))])

    if config.theta_method == "exact":
        hpen = hmat.copy()
        for j in range(len(lower)):
            hpen += betas[j] * np.outer(gvecs[j], gvecs[j])
        vals, vecs = np.linalg.eigh(hpen)
        p = vecs[:, 0]
        i = np.argmax(np.abs(p))
        if p[i] < 0:
            p = -p
        amps = np.zeros(1 << model.n_active_spin)
        amps[model.sector] = p
        psi = FockVector(model.n_active_spin, amps)
        energy = float(p @ hmat @ p)
        return ThetaResult(np.asarray(theta0, dtype=float), psi, float(vals[0]), energy, 1)

    def penalty(p):
        if not len(lower):
            return 0.0
        return float(betas @ (gvecs @ p) ** 2)

    def fun(theta):
        p = model.sector_amps(model.prepare(theta))
        return float(p @ hmat @ p) + penalty(p)

    residual = None
    if len(lower):
        residual = lambda theta: penalty(model.sector_amps(model.prepare(theta)))
    cold = bool(len(lower)) and not np.any(np.asarray(theta0))
    theta, fval, used = _minimize_with_fallback(
        fun, theta0, config.theta_budget, config.theta_method, model.circuit,
        residual, multistart=cold)
    psi = model.prepare(theta)
    p = model.sector_amps(psi)
    return ThetaResult(theta, psi, fval, float(p @ hmat @ p), used)


@dataclass
class OrbitalPhaseInfo:
    cycles: int
    converged: bool
    objective: float
    aborted: bool = False


def optimize_orbitals(psi: FockVector, u: PartialUnitary, lower: list[StateSolution],
                      deflation: DeflationConfig, config: OptimizerConfig,
                      ints: MolecularIntegrals,
                      rdms: RDMPair | None = None) -> tuple[PartialUnitary, OrbitalPhaseInfo]:
    """Gradient phase at frozen angles: RDMs are measured once, overlap
    gradients are refreshed every refresh cycle (up to inner_cap energy-only
    steps in between), and the phase stops when the objective moves less than
    the inner tolerance across one cycle.

    Long frozen stretches can overshoot once deflation terms are active (the
    stale penalty force lets pure energy descent run toward the lower states),
    so a cycle that would raise the objective is retried from its start with
    half the stride; at stride one the step is an exact-gradient descent step
    and the objective cannot increase at a stable step size.
    """
    if rdms is None:
        rdms = measure_rdms(psi)
    betas = np.array([deflation.beta(j) for j in range(len(lower))])
    pen_sign = -1.0 if config.flip_penalty_gradient else 1.0

    def objective(u_cur: PartialUnitary) -> float:
        val = rotated_energy(u_cur, rdms, ints)
        for j, sol in enumerate(lower):
            val += betas[j] * overlap(sol.u, u_cur, sol.psi, psi) ** 2
        return val

    def run_stretch(u_cur: PartialUnitary, frozen: np.ndarray, steps: int) -> PartialUnitary:
        for _ in range(steps):
            grad = rotated_energy_gradient(u_cur, rdms, ints) + pen_sign * frozen
            u_cur = projected_gd_step(u_cur, grad, config.eta)
        return u_cur

    f_prev = objective(u)
    cycles = 0
    for cycles in range(1, config.max_orbital_cycles + 1):
        frozen = np.zeros_like(u.b)
        for j, sol in enumerate(lower):
            frozen += betas[j] * overlap_gradient(sol.u, u, sol.psi, psi)
        try:
            stride = config.inner_cap
            while True:
                u_trial = run_stretch(u, frozen, stride)
                f_new = objective(u_trial)
                if f_new <= f_prev + 1e-12 or stride == 1:
                    break
                stride //= 2
        except OrthRankError as exc:
            warnings.warn(f"orbital phase aborted: {exc}")
            return u, OrbitalPhaseInfo(cycles, False, objective(u), aborted=True)
        if f_new > f_prev + 1e-12:
            # even a single fresh-gradient step increases the objective:
            # the current point is as good as this phase can certify
            return u, OrbitalPhaseInfo(cycles, True, f_prev)
        u = u_trial
        if abs(f_new - f_prev) < config.orbital_inner_tol:
            return u, OrbitalPhaseInfo(cycles, True, f_new)
        f_prev = f_new
    return u, OrbitalPhaseInfo(cycles, False, f_prev)


def _pair_overlaps_sq(solution_u: PartialUnitary, psi: FockVector,
                      lower: list[StateSolution]) -> tuple[float, ...]:
    return tuple(
        overlap(sol.u, solution_u, sol.psi, psi) ** 2 for sol in lower)


def solve_state_ssvqd(k: int, lower: list[StateSolution], u_init: PartialUnitary,
                      theta_init: np.ndarray, deflation: DeflationConfig,
                      config: OptimizerConfig, model: ActiveSpaceModel) -> StateSolution:
    """Alternate theta and orbital phases until the energy settles.

    k is 1-based; lower holds the k-1 already-solved states. The reported
    energy pairs the latest angles with the latest orbitals.
    """
    if len(lower) != k - 1:
        raise ValueError(f"state {k} needs exactly {k - 1} lower solutions")
    u = u_init
    theta = np.asarray(theta_init, dtype=float)
    psi = model.prepare(theta)
    rdms = measure_rdms(psi)
    e_prev = rotated_energy(u, rdms, model.ints)
    trace: list[TwoStepRecord] = []
    converged = False

    for it in range(1, config.max_outer + 1):
        theta0 = theta if config.warm_start else np.zeros_like(theta)
        tres = optimize_theta(u, lower, deflation, config, model, theta0)
        theta, psi = tres.theta, tres.psi
        rdms = measure_rdms(psi)
        u, orb_info = optimize_orbitals(
            psi, u, lower, deflation, config, model.ints, rdms=rdms)
        energy = rotated_energy(u, rdms, model.ints)
        delta = abs(energy - e_prev)
        ovl = _pair_overlaps_sq(u, psi, lower)
        trace.append(TwoStepRecord(
            iteration=it, energy_after_theta=tres.energy, energy=energy,
            abs_delta_e=delta, objective=orb_info.objective, overlaps_sq=ovl,
            theta_evals=tres.n_evals, orbital_cycles=orb_info.cycles))
        e_prev = energy
        if delta < config.outer_tol:
            converged = True
            break

    return StateSolution(index=k, theta=theta, u=u, psi=psi, energy=e_prev,
                         trace=trace, converged=converged,
                         overlaps_sq=trace[-1].overlaps_sq if trace else ())


def solve_ssvqd(n_states: int, inits: list[PartialUnitary],
                deflation: DeflationConfig, config: OptimizerConfig,
                model: ActiveSpaceModel) -> list[StateSolution]:
    """Solve states 1..n_states sequentially, each deflated by the previous."""
    if len(inits) != n_states:
        raise ValueError("need one orbital init per state")
    solutions: list[StateSolution] = []
    for k in range(1, n_states + 1):
        theta0 = np.zeros(model.circuit.n_params)
        sol = solve_state_ssvqd(k, solutions, inits[k - 1], theta0,
                                deflation, config, model)
        solutions.append(sol)
    return solutions


@dataclass
class SavqdRecord:
    iteration: int
    energies: tuple[float, ...]
    weighted_sum: float
    abs_delta: float
    theta_evals: int
    orbital_steps: int


@dataclass
class SavqdSolution:
    states: list[StateSolution]
    u: PartialUnitary
    weighted_sum: float
    trace: list[SavqdRecord]
    converged: bool


def solve_savqd(n_states: int, u_init: PartialUnitary, weights: SAWeights,
                deflation: DeflationConfig, config: OptimizerConfig,
                model: ActiveSpaceModel) -> SavqdSolution:
    """State-averaged baseline: one shared rotation for every state.

    Each outer iteration runs a full deflated sweep in the frozen rotated
    basis (overlaps are plain inner products there), measures all RDM pairs,
    then descends the weighted-energy objective over the shared block until
    it settles. Stops when the weighted sum moves less than outer_tol.
    """
    if len(weights.w) != n_states:
        raise ValueError("one weight per state required")
    u = u_init
    thetas = [np.zeros(model.circuit.n_params) for _ in range(n_states)]
    trace: list[SavqdRecord] = []
    converged = False
    w_prev = np.inf
    states: list[StateSolution] = []
    betas = np.array([deflation.beta(j) for j in range(n_states)])

    for it in range(1, config.max_outer + 1):
        hmat = model.hamiltonian_matrix(u)
        sector_states: list[np.ndarray] = []
        psis: list[FockVector] = []
        energies = []
        evals_used = 0
        for alpha in range(n_states):
            occupied = tuple(sector_states)
            if config.theta_method == "exact":
                hpen = hmat.copy()
                for j, pj in enumerate(occupied):
                    hpen += betas[j] * np.outer(pj, pj)
                vals, vecs = np.linalg.eigh(hpen)
                p = vecs[:, 0]
                if p[np.argmax(np.abs(p))] < 0:
                    p = -p
                amps = np.zeros(1 << model.n_active_spin)
                amps[model.sector] = p
                psi = FockVector(model.n_active_spin, amps)
                theta = thetas[alpha]
                used = 1
            else:
                def pen(p, occupied=occupied):
                    return sum(betas[j] * float(pj @ p) ** 2
                               for j, pj in enumerate(occupied))

                def fun(theta, occupied=occupied):
                    p = model.sector_amps(model.prepare(theta))
                    return float(p @ hmat @ p) + pen(p)

                theta0 = thetas[alpha] if config.warm_start else np.zeros_like(thetas[alpha])
                residual = None
                if occupied:
                    residual = lambda theta: pen(model.sector_amps(model.prepare(theta)))
                cold = bool(occupied) and not np.any(np.asarray(theta0))
                theta, _, used = _minimize_with_fallback(
                    fun, theta0, config.theta_budget, config.theta_method,
                    model.circuit, residual, multistart=cold)
                psi = model.prepare(theta)
                p = model.sector_amps(psi)
            thetas[alpha] = theta
            sector_states.append(p)
            psis.append(psi)
            energies.append(float(p @ hmat @ p))
            evals_used += used

        rdm_pairs = [measure_rdms(psi) for psi in psis]
        # the energy and its gradient are linear in the RDMs, so the weighted
        # average collapses into a single effective pair
        rdm_avg = RDMPair(
            sum(w * r.one_body for w, r in zip(weights.w, rdm_pairs)),
            sum(w * r.two_body for w, r in zip(weights.w, rdm_pairs)))

        u_sweep = u
        f_prev = rotated_energy(u, rdm_avg, model.ints)
        steps = 0
        try:
            for _ in range(config.max_orbital_cycles):
                for _ in range(config.inner_cap):
                    grad = rotated_energy_gradient(u, rdm_avg, model.ints)
                    u = projected_gd_step(u, grad, config.eta)
                    steps += 1
                f_new = rotated_energy(u, rdm_avg, model.ints)
                if abs(f_new - f_prev) < config.orbital_inner_tol:
                    break
                f_prev = f_new
        except OrthRankError as exc:
            warnings.warn(f"state-averaged orbital phase aborted: {exc}")

        w_now = float(np.dot(weights.w, energies))
        delta = abs(w_now - w_prev)
        trace.append(SavqdRecord(it, tuple(energies), w_now, delta, evals_used, steps))
        states = [StateSolution(index=a + 1, theta=thetas[a], u=u_sweep,
                                psi=psis[a], energy=energies[a], trace=[],
                                converged=True,
                                overlaps_sq=tuple(
                                    float(np.dot(sector_states[j], sector_states[a])) ** 2
                                    for j in range(a)))
                  for a in range(n_states)]
        last_sweep_u = u_sweep
        if delta < config.outer_tol:
            converged = True
            break
        w_prev = w_now

    weighted = trace[-1].weighted_sum if trace else np.nan
    final_u = last_sweep_u if trace else u
    return SavqdSolution(states=states, u=final_u, weighted_sum=weighted,
                         trace=trace, converged=converged)


def weighted_sum_report(energies, weights: SAWeights) -> float:
    energies = np.asarray(energies, dtype=float)
    if energies.shape != weights.w.shape:
        raise ValueError("energy and weight counts differ")
    return float(np.dot(weights.w, energies))


def check_deflation_validity(solutions: list[StateSolution],
                             deflation: DeflationConfig) -> list[str]:
    """Post-hoc check of beta_j > E_{k+1} - E_j for every solved pair."""
    issues = []
    for k in range(1, len(solutions)):
        for j in range(k):
            gap = solutions[k].energy - solutions[j].energy
            if deflation.beta(j) <= gap:
                issues.append(
                    f"beta_{j + 1}={deflation.beta(j):.3f} <= E_{k + 1}-E_{j + 1}={gap:.3f}")
    return issues
