"""
Perturbation probabilities under ID-LDP constraints.

opt0 minimizes the worst-case total variance over free (a_i, b_i); opt1 and
opt2 restrict the search to RAPPOR-shaped (a_i + b_i = 1) and OUE-shaped
(a_i = 1/2) profiles, where the problem is convex.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from config import AUDIT_TOLERANCE, PROBABILITY_MARGIN
from errors import SolverError
from model import GRRParameters, PerturbationProfile, PrivacyModel
from privacy import check_idldp
from schemas import SolverOptions

logger = logging.getLogger(__name__)

# Steps along the segment towards a strictly feasible anchor
_REPAIR_STEPS = (0.0,) + tuple(10.0 ** -k for k in range(12, 0, -1)) + (0.5, 1.0)


class Baseline(str, Enum):
    RAPPOR = "rappor"
    OUE = "oue"
    GRR = "grr"


class SolverModel(str, Enum):
    OPT0 = "opt0"
    OPT1 = "opt1"
    OPT2 = "opt2"


@dataclass(frozen=True)
class SolveResult:
    profile: PerturbationProfile
    objective: float
    model_name: str
    seed: int
    restarts_succeeded: int


# ==================== BASELINES ====================

def baseline_profile(kind: Union[Baseline, str], epsilon: float, m: Optional[int] = None,
                     t: int = 1) -> Union[PerturbationProfile, GRRParameters]:
    """RAPPOR and OUE as uniform t-level profiles; GRR as its (p, q) pair over m items."""
    if not epsilon > 0:
        raise ValueError(f"Budget must be positive, got {epsilon}")
    kind = Baseline(kind)
    if kind is Baseline.RAPPOR:
        b = 1.0 / (math.exp(epsilon / 2.0) + 1.0)
        return PerturbationProfile.uniform(1.0 - b, b, t)
    if kind is Baseline.OUE:
        return PerturbationProfile.uniform(0.5, 1.0 / (math.exp(epsilon) + 1.0), t)
    if m is None or m < 2:
        raise ValueError("GRR needs a domain of at least two items")
    denominator = math.exp(epsilon) + m - 1
    return GRRParameters(math.exp(epsilon) / denominator, 1.0 / denominator, m)


# ==================== OBJECTIVES ====================

def objective_worst_case(profile: PerturbationProfile, model: PrivacyModel) -> float:
    """sum_i m_i b_i(1-b_i)/(a_i-b_i)^2 + max over occupied levels of (1-a_i-b_i)/(a_i-b_i)."""
    a, b = profile.a_array, profile.b_array
    gap = a - b
    if np.any(gap == 0):
        raise ValueError("Objective undefined when a_i = b_i")
    sizes = np.asarray(model.level_sizes, dtype=float)
    occupied = sizes > 0
    return float(np.sum(sizes * b * (1 - b) / gap ** 2) + np.max(((1 - a - b) / gap)[occupied]))


def objective_opt1(tau: Sequence[float], model: PrivacyModel) -> float:
    """sum_i m_i e^tau_i / (e^tau_i - 1)^2"""
    u = np.exp(np.asarray(tau, dtype=float))
    return float(np.sum(np.asarray(model.level_sizes) * u / (u - 1) ** 2))


def objective_opt2(b: Sequence[float], model: PrivacyModel) -> float:
    """sum_i m_i b_i(1-b_i)/(1/2 - b_i)^2"""
    b = np.asarray(b, dtype=float)
    return float(np.sum(np.asarray(model.level_sizes) * b * (1 - b) / (0.5 - b) ** 2))


def profile_from_tau(tau: Sequence[float]) -> PerturbationProfile:
    b = 1.0 / (np.exp(np.asarray(tau, dtype=float)) + 1.0)
    return PerturbationProfile(tuple(1.0 - b), tuple(b))


def profile_from_b(b: Sequence[float]) -> PerturbationProfile:
    b = np.asarray(b, dtype=float)
    return PerturbationProfile((0.5,) * b.size, tuple(b))


# ==================== SHARED PLUMBING ====================

def _run_slsqp(fun: Callable, jac: Callable, x0: np.ndarray, bounds, constraints,
               options: SolverOptions):
    return minimize(fun, x0, jac=jac, method="SLSQP", bounds=bounds, constraints=constraints,
                    options={"maxiter": options.max_iters, "ftol": options.step_tol})


def _feasible(profile_of: Callable[[np.ndarray], PerturbationProfile], x: np.ndarray,
              model: PrivacyModel) -> Optional[PerturbationProfile]:
    try:
        profile = profile_of(x)
    except ValueError:
        return None
    if not np.all(np.isfinite(profile.a_array)) or not check_idldp(profile, model, tol=0.0).passed:
        return None
    return profile


def _repair(profile_of: Callable[[np.ndarray], PerturbationProfile], x: np.ndarray, anchor: np.ndarray,
            model: PrivacyModel) -> tuple[np.ndarray, PerturbationProfile]:
    """First point on the segment from x to a strictly feasible anchor that passes the exact check."""
    for step in _REPAIR_STEPS:
        candidate = (1.0 - step) * x + step * anchor
        profile = _feasible(profile_of, candidate, model)
        if profile is not None:
            if step > 0:
                logger.debug(f"Repaired solver point with step {step:g}")
            return candidate, profile
    raise SolverError("Feasibility repair failed; the anchor point is not feasible")


def _pick(candidates: list[tuple[float, PerturbationProfile]]) -> tuple[float, PerturbationProfile]:
    """Lowest objective; ties go to the lexicographically smallest (a_1, b_1, a_2, ...)."""
    def key(candidate):
        value, profile = candidate
        return (round(value, 12), tuple(v for pair in zip(profile.a, profile.b) for v in pair))
    return min(candidates, key=key)


def _finish(profile: PerturbationProfile, model: PrivacyModel, name: str) -> PerturbationProfile:
    profile = profile.with_dummy_from_level(model.min_level)
    report = check_idldp(profile, model, AUDIT_TOLERANCE)
    if not report.passed:
        raise SolverError(
            f"{name} produced an infeasible profile: pair {report.worst_pair} "
            f"ratio {report.max_ratio:.6g} > bound {report.bound:.6g}"
        )
    return profile


def _tau_bounds(model: PrivacyModel) -> tuple[float, float]:
    ceiling = math.log((1 - PROBABILITY_MARGIN) / PROBABILITY_MARGIN)
    return 2 * PROBABILITY_MARGIN, min(ceiling, model.max_budget)


# ==================== OPT1 ====================

def _linear_pairs(model: PrivacyModel) -> tuple[np.ndarray, np.ndarray]:
    """Rows of tau_i + tau_j <= r_ij over unordered pairs i <= j."""
    pairs = [(i, j) for i in range(model.t) for j in range(i, model.t)]
    matrix = np.zeros((len(pairs), model.t))
    for row, (i, j) in enumerate(pairs):
        matrix[row, i] += 1.0
        matrix[row, j] += 1.0
    r = model.r_matrix()
    rhs = np.array([r[i, j] for i, j in pairs])
    return matrix, rhs


def _solve_opt1(model: PrivacyModel, options: SolverOptions) -> tuple[PerturbationProfile, int]:
    sizes = np.asarray(model.level_sizes, dtype=float)
    scale = 1.0 / sizes.sum()
    matrix, rhs = _linear_pairs(model)
    rhs = rhs - options.constraint_tol

    def fun(tau):
        u = np.exp(tau)
        return scale * float(np.sum(sizes * u / (u - 1) ** 2))

    def jac(tau):
        u = np.exp(tau)
        return scale * (-sizes * u * (u + 1) / (u - 1) ** 3)

    constraints = [{"type": "ineq", "fun": lambda tau: rhs - matrix @ tau, "jac": lambda tau: -matrix}]
    low, high = _tau_bounds(model)
    start = np.full(model.t, model.min_budget / 2.0 - options.constraint_tol)
    anchor = np.full(model.t, model.min_budget / 4.0)

    result = _run_slsqp(fun, jac, start, [(low, high)] * model.t, constraints, options)
    if not result.success:
        logger.warning(f"opt1: {result.message}")
    _, profile = _repair(profile_from_tau, np.clip(result.x, low, high), anchor, model)
    _, start_profile = _repair(profile_from_tau, start, anchor, model)
    _, profile = _pick([(objective_worst_case(p, model), p) for p in (profile, start_profile)])
    return _finish(profile, model, "opt1"), int(result.success)


def solve_opt1(model: PrivacyModel, options: Optional[SolverOptions] = None) -> PerturbationProfile:
    """RAPPOR-shaped model: a_i = e^tau_i/(e^tau_i+1), b_i = 1 - a_i, tau_i + tau_j <= r(eps_i, eps_j)."""
    return _solve_opt1(model, options or SolverOptions())[0]


# ==================== OPT2 ====================

def _solve_opt2(model: PrivacyModel, options: SolverOptions) -> tuple[PerturbationProfile, int]:
    sizes = np.asarray(model.level_sizes, dtype=float)
    scale = 1.0 / sizes.sum()
    exp_r = np.exp(model.r_matrix())
    pairs = [(i, j) for i in range(model.t) for j in range(model.t)]
    matrix = np.zeros((len(pairs), model.t))
    for row, (i, j) in enumerate(pairs):
        matrix[row, i] += exp_r[i, j]
        matrix[row, j] += 1.0
    rhs = 1.0 + options.constraint_tol

    def fun(b):
        return scale * float(np.sum(sizes * b * (1 - b) / (0.5 - b) ** 2))

    def jac(b):
        return scale * sizes * 0.5 / (0.5 - b) ** 3

    constraints = [{"type": "ineq", "fun": lambda b: matrix @ b - rhs, "jac": lambda b: matrix}]
    bounds = [(PROBABILITY_MARGIN, 0.5 - PROBABILITY_MARGIN)] * model.t
    start = np.full(model.t, 1.0 / (math.exp(model.min_budget) + 1.0) + options.constraint_tol)
    anchor = np.full(model.t, 1.0 / (math.exp(model.min_budget / 2.0) + 1.0))

    result = _run_slsqp(fun, jac, start, bounds, constraints, options)
    if not result.success:
        logger.warning(f"opt2: {result.message}")
    _, profile = _repair(profile_from_b, np.clip(result.x, *bounds[0]), anchor, model)
    _, start_profile = _repair(profile_from_b, start, anchor, model)
    _, profile = _pick([(objective_worst_case(p, model), p) for p in (profile, start_profile)])
    return _finish(profile, model, "opt2"), int(result.success)


def solve_opt2(model: PrivacyModel, options: Optional[SolverOptions] = None) -> PerturbationProfile:
    """OUE-shaped model: a_i = 1/2, e^r(eps_i, eps_j) b_i + b_j >= 1."""
    return _solve_opt2(model, options or SolverOptions())[0]


# ==================== OPT0 ====================

class _WorstCaseProblem:
    """opt0 over z = (a_1..a_t, b_1..b_t, s) with the epigraph variable s."""

    def __init__(self, model: PrivacyModel, options: SolverOptions):
        self.model = model
        self.options = options
        self.t = model.t
        self.sizes = np.asarray(model.level_sizes, dtype=float)
        self.occupied = np.flatnonzero(self.sizes > 0)
        self.scale = 1.0 / self.sizes.sum()
        self.pairs = [(i, j) for i in range(self.t) for j in range(self.t)]
        r = model.r_matrix()
        self.rhs = np.array([r[i, j] for i, j in self.pairs]) - options.constraint_tol
        self.bounds = [(PROBABILITY_MARGIN, 1 - PROBABILITY_MARGIN)] * (2 * self.t) + [(None, None)]

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        return z[:self.t], z[self.t:2 * self.t], z[-1]

    def pack(self, profile: PerturbationProfile) -> np.ndarray:
        a, b = profile.a_array, profile.b_array
        s = np.max(((1 - a - b) / (a - b))[self.occupied])
        return np.concatenate([a, b, [s]])

    def fun(self, z):
        a, b, s = self.split(z)
        return self.scale * (float(np.sum(self.sizes * b * (1 - b) / (a - b) ** 2)) + s)

    def jac(self, z):
        a, b, _ = self.split(z)
        gap = a - b
        grad_a = -2 * self.sizes * b * (1 - b) / gap ** 3
        grad_b = self.sizes * ((1 - 2 * b) / gap ** 2 + 2 * b * (1 - b) / gap ** 3)
        return self.scale * np.concatenate([grad_a, grad_b, [1.0]])

    def privacy(self, z):
        # r_ij - [ln a_i + ln(1-b_j) - ln b_i - ln(1-a_j)] >= 0
        a, b, _ = self.split(z)
        return np.array([
            self.rhs[row] - (math.log(a[i]) + math.log(1 - b[j]) - math.log(b[i]) - math.log(1 - a[j]))
            for row, (i, j) in enumerate(self.pairs)
        ])

    def privacy_jac(self, z):
        a, b, _ = self.split(z)
        jac = np.zeros((len(self.pairs), 2 * self.t + 1))
        for row, (i, j) in enumerate(self.pairs):
            jac[row, i] -= 1 / a[i]
            jac[row, self.t + i] += 1 / b[i]
            jac[row, self.t + j] += 1 / (1 - b[j])
            jac[row, j] -= 1 / (1 - a[j])
        return jac

    def epigraph(self, z):
        a, b, s = self.split(z)
        k = self.occupied
        return s - (1 - a[k] - b[k]) / (a[k] - b[k])

    def epigraph_jac(self, z):
        a, b, _ = self.split(z)
        jac = np.zeros((self.occupied.size, 2 * self.t + 1))
        for row, i in enumerate(self.occupied):
            gap2 = (a[i] - b[i]) ** 2
            jac[row, i] = (1 - 2 * b[i]) / gap2
            jac[row, self.t + i] = (2 * a[i] - 1) / gap2
            jac[row, -1] = 1.0
        return jac

    def gap(self, z):
        a, b, _ = self.split(z)
        return a - b - PROBABILITY_MARGIN

    def gap_jac(self, z):
        return np.hstack([np.eye(self.t), -np.eye(self.t), np.zeros((self.t, 1))])

    @property
    def constraints(self):
        return [
            {"type": "ineq", "fun": self.privacy, "jac": self.privacy_jac},
            {"type": "ineq", "fun": self.epigraph, "jac": self.epigraph_jac},
            {"type": "ineq", "fun": self.gap, "jac": self.gap_jac},
        ]

    @staticmethod
    def to_profile(x: np.ndarray) -> PerturbationProfile:
        t = x.size // 2
        return PerturbationProfile(tuple(x[:t]), tuple(x[t:2 * t]))

    def descend(self, start: PerturbationProfile, anchor: np.ndarray) -> tuple[list[tuple[float, PerturbationProfile]], bool]:
        """One local descent; both the start and the repaired end point are candidates."""
        candidates = [(objective_worst_case(start, self.model), start)]
        try:
            result = _run_slsqp(self.fun, self.jac, self.pack(start), self.bounds, self.constraints, self.options)
        except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
            logger.debug(f"opt0 restart aborted: {exc}")
            return candidates, False
        ab = np.clip(result.x[:2 * self.t], PROBABILITY_MARGIN, 1 - PROBABILITY_MARGIN)
        if np.all(np.isfinite(ab)):
            _, profile = _repair(self.to_profile, ab, anchor, self.model)
            candidates.append((objective_worst_case(profile, self.model), profile))
        return candidates, bool(result.success)


def _random_start(model: PrivacyModel, anchor: np.ndarray, rng: np.random.Generator) -> PerturbationProfile:
    a = rng.uniform(0.5, 1 - 1e-3, size=model.t)
    b = np.minimum(rng.uniform(1e-3, 0.5, size=model.t), a - 1e-3)
    return _repair(_WorstCaseProblem.to_profile, np.concatenate([a, b]), anchor, model)[1]


def _solve_opt0(model: PrivacyModel, options: SolverOptions) -> tuple[PerturbationProfile, int]:
    problem = _WorstCaseProblem(model, options)
    tau_anchor = model.min_budget / 4.0
    anchor_b = 1.0 / (math.exp(tau_anchor) + 1.0)
    anchor = np.concatenate([np.full(model.t, 1.0 - anchor_b), np.full(model.t, anchor_b)])

    starts = [
        baseline_profile(Baseline.RAPPOR, model.min_budget, t=model.t),
        baseline_profile(Baseline.OUE, model.min_budget, t=model.t),
        _solve_opt1(model, options)[0],
        _solve_opt2(model, options)[0],
    ]
    starts = [_repair(problem.to_profile, np.concatenate([p.a_array, p.b_array]), anchor, model)[1] for p in starts]
    rng = np.random.default_rng(options.seed)
    starts += [_random_start(model, anchor, rng) for _ in range(options.restarts)]

    def descend(start):
        return problem.descend(start, anchor)

    if options.threads > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            outcomes = list(pool.map(descend, starts))
    else:
        outcomes = [descend(start) for start in starts]

    candidates = [candidate for found, _ in outcomes for candidate in found]
    succeeded = sum(ok for _, ok in outcomes)
    if not candidates:
        raise SolverError("opt0 found no feasible point")
    value, profile = _pick(candidates)
    logger.info(f"opt0: objective {value:.6f} after {len(starts)} starts ({succeeded} converged)")
    return _finish(profile, model, "opt0"), succeeded


def solve_opt0(model: PrivacyModel, options: Optional[SolverOptions] = None) -> PerturbationProfile:
    """Worst-case model over free (a_i, b_i), multi-start from RAPPOR, OUE, opt1, opt2 and random points."""
    return _solve_opt0(model, options or SolverOptions())[0]


# ==================== DISPATCH ====================

_SOLVERS = {
    SolverModel.OPT0: _solve_opt0,
    SolverModel.OPT1: _solve_opt1,
    SolverModel.OPT2: _solve_opt2,
}


def solve(name: Union[SolverModel, str], model: PrivacyModel, options: Optional[SolverOptions] = None) -> SolveResult:
    options = options or SolverOptions()
    name = SolverModel(name)
    profile, succeeded = _SOLVERS[name](model, options)
    return SolveResult(profile, objective_worst_case(profile, model), name.value, options.seed, succeeded)
