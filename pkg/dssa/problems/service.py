"""
Test Problem Service

Builds ProblemInstance objects with exact mean operators, certified
solutions, declared Hölder data and closed-form noise profiles.
"""

from typing import Optional, Union

import numpy as np
from scipy.optimize import linprog

from ..core.models import MeanOperator, ProblemInstance, StochasticOracle
from ..exceptions import ProblemConstructionError
from ..extragradient.models import ExtragradientConfig
from ..extragradient.service import solve
from ..logging import get_logger
from ..projections.models import FeasibleSet, SetKind, product, whole_space
from ..projections.service import natural_residual, project
from ..sampling.models import RngPlan, constant
from .models import AffineSviSpec, HolderSpec, SaddlePointSpec
from .oracles import AffineOracle, HolderOracle, SaddleOracle

logger = get_logger(__name__)

CERTIFICATE_TARGET = 1e-10

FAMILIES = {
    "affine": "Affine SVI T(x) = Ax + b with multiplicative matrix noise and additive vector noise",
    "saddle": "Bilinear saddle point min_u max_v u'Bv + c'u - d'v on box or simplex blocks",
    "holder": "Monotone Hölder operator L(xi) sign(x - x*)|x - x*|^delta, not Lipschitz near x*",
}


def problem_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class _DeterministicOracle(StochasticOracle):
    """Wraps an exact operator as a noiseless oracle."""

    def __init__(self, operator, dimension: int):
        self.operator = operator
        self.dimension = dimension

    def sample(self, rng, size):
        return size

    def evaluate(self, samples, x):
        return np.tile(self.operator(x), (samples, 1))


def solve_deterministic(operator, feasible_set: FeasibleSet, name: str, max_iterations: int = 50000) -> tuple[np.ndarray, float]:
    """High-accuracy extragradient solve of VI(T, X); returns (x*, certificate residual)."""
    instance = ProblemInstance(
        name=f"{name}-deterministic",
        oracle=_DeterministicOracle(operator, feasible_set.dimension),
        feasible_set=feasible_set,
    )
    config = ExtragradientConfig(
        lam=0.4,
        theta=0.7,
        alpha_hat=1.0,
        schedule=constant(1),
        max_iterations=max_iterations,
        residual_tolerance=1e-13,
        max_backtracks=200,
    )
    result = solve(instance, config, RngPlan(0), x0=0.0)
    x = result.final_point
    certificate = natural_residual(feasible_set, operator(x), x, 1.0)
    if certificate > CERTIFICATE_TARGET:
        logger.warning("%s: deterministic solve stopped with certificate %.3e (status %s)",
                       name, certificate, result.status.value)
    return x, certificate


def make_affine(spec: AffineSviSpec, seed: Optional[int] = None) -> ProblemInstance:
    """Affine SVI with a certified solution and sigma_2(x) = sqrt(d (eta_A^2 ||x||^2 + eta_b^2))."""
    rng = problem_rng(spec.seed if seed is None else seed)
    d = spec.d
    if spec.matrix is not None:
        matrix = np.asarray(spec.matrix, dtype=float)
    else:
        g = rng.standard_normal((d, d))
        k = rng.standard_normal((d, d))
        matrix = g @ g.T / d + spec.monotone_margin * np.eye(d) + spec.skew_scale * (k - k.T) / (2.0 * np.sqrt(d))
    if spec.offset is not None:
        offset = np.asarray(spec.offset, dtype=float)
    else:
        offset = -matrix @ rng.standard_normal(d)

    smallest = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min())
    if smallest < -1e-12:
        raise ProblemConstructionError(f"A is not monotone: symmetric part has eigenvalue {smallest:.3e}")

    feasible_set = spec.feasible_set or whole_space(d)
    oracle = AffineOracle(matrix, offset, spec.matrix_noise, spec.vector_noise, spec.noise_law)
    name = f"affine-d{d}"

    if feasible_set.kind == SetKind.WHOLE_SPACE:
        solution = np.linalg.lstsq(matrix, -offset, rcond=None)[0]
        if np.linalg.norm(matrix @ solution + offset) > 1e-9 * (1.0 + np.linalg.norm(offset)):
            raise ProblemConstructionError("A is singular and b is not in its range: the solution set is empty")
    else:
        solution, _ = solve_deterministic(oracle.mean, feasible_set, name)
    certificate = natural_residual(feasible_set, oracle.mean(solution), solution, 1.0)

    logger.info("Built %s (eta_A=%s, eta_b=%s, set=%s, certificate=%.2e)",
                name, spec.matrix_noise, spec.vector_noise, feasible_set.kind.value, certificate)
    return ProblemInstance(
        name=name,
        oracle=oracle,
        feasible_set=feasible_set,
        mean=MeanOperator(oracle.mean),
        solution=solution,
        holder_exponent=1.0,
        holder_modulus=float(np.linalg.norm(matrix, 2)),
        noise_profile=oracle.sigma_2,
        sigma_holder_modulus=float(np.sqrt(d) * spec.matrix_noise),
        solution_certificate=certificate,
    )


def solve_matrix_game(coupling: np.ndarray, c: np.ndarray, d_vec: np.ndarray, u_scale: float, v_scale: float):
    """Exact saddle point of u'Bv + c'u - d'v over scaled simplices via two LPs."""
    m, n = coupling.shape
    # u-player: min_u c'u + s_v * max_j (B'u - d)_j
    u_problem = linprog(
        c=np.concatenate([c, [v_scale]]),
        A_ub=np.hstack([coupling.T, -np.ones((n, 1))]),
        b_ub=d_vec,
        A_eq=np.concatenate([np.ones(m), [0.0]])[None, :],
        b_eq=[u_scale],
        bounds=[(0, None)] * m + [(None, None)],
        method="highs",
    )
    # v-player: max_v -d'v + s_u * min_i (Bv + c)_i
    v_problem = linprog(
        c=np.concatenate([d_vec, [-u_scale]]),
        A_ub=np.hstack([-coupling, np.ones((m, 1))]),
        b_ub=c,
        A_eq=np.concatenate([np.ones(n), [0.0]])[None, :],
        b_eq=[v_scale],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    if not (u_problem.success and v_problem.success):
        raise ProblemConstructionError(f"matrix game LP failed: {u_problem.message} / {v_problem.message}")
    game_value = float(u_problem.fun)
    return u_problem.x[:m], v_problem.x[:n], game_value


def make_saddle(spec: SaddlePointSpec, seed: Optional[int] = None) -> ProblemInstance:
    """Bilinear saddle point; simplex games solved by LP, other blocks by a deterministic solve."""
    rng = problem_rng(spec.seed if seed is None else seed)
    m, n = spec.m, spec.n
    coupling = np.asarray(spec.coupling, dtype=float) if spec.coupling is not None else rng.standard_normal((m, n))
    c = np.asarray(spec.c, dtype=float) if spec.c is not None else np.zeros(m)
    d_vec = np.asarray(spec.d_vec, dtype=float) if spec.d_vec is not None else np.zeros(n)

    u_set, v_set = spec.u_set.to_set(m), spec.v_set.to_set(n)
    feasible_set = product(u_set, v_set)
    oracle = SaddleOracle(coupling, c, d_vec, spec.coupling_noise, spec.linear_noise)
    name = f"saddle-{m}x{n}"

    metadata = {}
    if u_set.kind == SetKind.SIMPLEX and v_set.kind == SetKind.SIMPLEX:
        u, v, game_value = solve_matrix_game(coupling, c, d_vec, u_set.scale, v_set.scale)
        solution = project(feasible_set, np.concatenate([u, v]))
        metadata["game_value"] = game_value
    else:
        solution, _ = solve_deterministic(oracle.mean, feasible_set, name)
    certificate = natural_residual(feasible_set, oracle.mean(solution), solution, 1.0)

    logger.info("Built %s (u:%s, v:%s, certificate=%.2e)", name, u_set.kind.value, v_set.kind.value, certificate)
    return ProblemInstance(
        name=name,
        oracle=oracle,
        feasible_set=feasible_set,
        mean=MeanOperator(oracle.mean),
        solution=solution,
        holder_exponent=1.0,
        holder_modulus=float(np.linalg.norm(coupling, 2)),
        noise_profile=oracle.sigma_2,
        sigma_holder_modulus=float(spec.coupling_noise * np.sqrt(max(m, n))),
        solution_certificate=certificate,
        metadata=metadata,
    )


def make_holder(spec: HolderSpec, seed: Optional[int] = None) -> ProblemInstance:
    """Monotone (E L, delta)-Hölder operator with its unique zero at the target."""
    if not 0 < spec.exponent < 1:
        raise ProblemConstructionError(f"Hölder exponent must lie in (0, 1), got {spec.exponent}")
    rng = problem_rng(spec.seed if seed is None else seed)
    target = np.asarray(spec.target, dtype=float) if spec.target is not None else rng.standard_normal(spec.d)
    oracle = HolderOracle(target, spec.exponent, spec.modulus_spread, spec.additive_noise, spec.noise_law)
    feasible_set = whole_space(spec.d)
    name = f"holder-d{spec.d}-delta{spec.exponent:g}"

    logger.info("Built %s (spread=%s, additive_noise=%s)", name, spec.modulus_spread, spec.additive_noise)
    return ProblemInstance(
        name=name,
        oracle=oracle,
        feasible_set=feasible_set,
        mean=MeanOperator(oracle.mean),
        solution=target.copy(),
        holder_exponent=spec.exponent,
        holder_modulus=oracle.mean_modulus * oracle.holder_constant,
        noise_profile=oracle.sigma_2,
        sigma_holder_modulus=spec.modulus_spread / np.sqrt(3.0) * oracle.holder_constant,
        solution_certificate=natural_residual(feasible_set, oracle.mean(target), target, 1.0),
    )


def build_problem(spec: Union[AffineSviSpec, SaddlePointSpec, HolderSpec]) -> ProblemInstance:
    """Dispatch on the spec's family."""
    if isinstance(spec, AffineSviSpec):
        return make_affine(spec)
    if isinstance(spec, SaddlePointSpec):
        return make_saddle(spec)
    if isinstance(spec, HolderSpec):
        return make_holder(spec)
    raise ProblemConstructionError(f"Unknown problem family: {getattr(spec, 'family', spec)!r}")
