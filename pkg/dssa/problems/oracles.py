"""
Concrete stochastic oracles of the synthetic families.

Gaussian noise entries are truncated at 6 standard deviations, so every
moment of the per-sample modulus exists. Rademacher entries are bounded.
Each draw also keeps its batch average, so the empirical mean of an affine
or Hölder batch costs O(d^2) per point instead of O(N d^2).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.models import StochasticOracle, frozen_array
from .models import NoiseLaw

TRUNCATION = 6.0


def truncated_normal(rng: np.random.Generator, scale: float, shape) -> np.ndarray:
    return scale * np.clip(rng.standard_normal(shape), -TRUNCATION, TRUNCATION)


def rademacher_signs(rng: np.random.Generator, shape) -> np.ndarray:
    """Independent +-1 entries as int8, eight per random byte."""
    count = int(np.prod(shape))
    raw = np.frombuffer(rng.bytes((count + 7) // 8), dtype=np.uint8)
    bits = np.unpackbits(raw, count=count).view(np.int8)
    return (2 * bits - 1).reshape(shape)


@dataclass(frozen=True)
class NoiseDraw:
    """Noise values ``scale * units`` for a batch, plus their average over the batch axis."""
    units: np.ndarray
    scale: float
    mean: np.ndarray

    def values(self) -> np.ndarray:
        return self.scale * self.units


def draw_noise(rng: np.random.Generator, law: NoiseLaw, scale: float, shape) -> Optional[NoiseDraw]:
    if scale <= 0.0:
        return None
    if law == NoiseLaw.RADEMACHER:
        units = rademacher_signs(rng, shape)
    else:
        units = np.clip(rng.standard_normal(shape), -TRUNCATION, TRUNCATION)
    units.setflags(write=False)
    mean = scale * np.mean(units, axis=0, dtype=np.float64)
    mean.setflags(write=False)
    return NoiseDraw(units=units, scale=float(scale), mean=mean)


@dataclass(frozen=True)
class AffineSamples:
    size: int
    # E(xi_j), shape (N, d, d); None when the matrix noise is zero
    matrices: Optional[NoiseDraw]
    # e(xi_j), shape (N, d); None when the vector noise is zero
    vectors: Optional[NoiseDraw]


class AffineOracle(StochasticOracle):
    """F(xi, x) = (A + E(xi)) x + b + e(xi)."""

    def __init__(self, matrix, offset, matrix_noise: float = 0.0, vector_noise: float = 0.0,
                 noise_law: NoiseLaw = NoiseLaw.GAUSSIAN):
        self.matrix = frozen_array(matrix)
        self.offset = frozen_array(offset)
        self.matrix_noise = float(matrix_noise)
        self.vector_noise = float(vector_noise)
        self.noise_law = NoiseLaw(noise_law)
        self.dimension = self.offset.size

    def sample(self, rng: np.random.Generator, size: int) -> AffineSamples:
        d = self.dimension
        matrices = draw_noise(rng, self.noise_law, self.matrix_noise, (size, d, d))
        vectors = draw_noise(rng, self.noise_law, self.vector_noise, (size, d))
        return AffineSamples(size=size, matrices=matrices, vectors=vectors)

    def evaluate(self, samples: AffineSamples, x: np.ndarray) -> np.ndarray:
        values = np.tile(self.matrix @ x + self.offset, (samples.size, 1))
        if samples.vectors is not None:
            values = values + samples.vectors.values()
        if samples.matrices is not None:
            values = values + samples.matrices.scale * np.einsum("nij,j->ni", samples.matrices.units, x)
        return values

    def batch_mean(self, samples: AffineSamples, x: np.ndarray) -> np.ndarray:
        value = self.matrix @ x + self.offset
        if samples.vectors is not None:
            value = value + samples.vectors.mean
        if samples.matrices is not None:
            value = value + samples.matrices.mean @ x
        return value

    def modulus(self, samples: AffineSamples) -> np.ndarray:
        if samples.matrices is None:
            return np.full(samples.size, max(1.0, float(np.linalg.norm(self.matrix, 2))))
        norms = np.linalg.norm(self.matrix + samples.matrices.values(), ord=2, axis=(1, 2))
        return np.maximum(1.0, norms)

    def mean(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset

    def sigma_2(self, x: np.ndarray) -> float:
        # both laws have unit variance per entry
        d = self.dimension
        return float(np.sqrt(self.matrix_noise**2 * float(x @ x) * d + self.vector_noise**2 * d))


@dataclass(frozen=True)
class SaddleSamples:
    # noise on B, shape (N, m, n); None when zero
    couplings: Optional[np.ndarray]
    # noise on (c, d_vec), shape (N, m + n)
    linear: np.ndarray


class SaddleOracle(StochasticOracle):
    """F(xi, (u, v)) = ((B + E)v + c + e_u, -(B + E)'u + d + e_v)."""

    def __init__(self, coupling, c, d_vec, coupling_noise: float = 0.0, linear_noise: float = 0.0):
        self.coupling = frozen_array(coupling)
        self.c = frozen_array(c)
        self.d_vec = frozen_array(d_vec)
        self.coupling_noise = float(coupling_noise)
        self.linear_noise = float(linear_noise)
        self.m, self.n = self.coupling.shape
        self.dimension = self.m + self.n

    def sample(self, rng: np.random.Generator, size: int) -> SaddleSamples:
        couplings = None
        if self.coupling_noise > 0.0:
            couplings = truncated_normal(rng, self.coupling_noise, (size, self.m, self.n))
            couplings.setflags(write=False)
        if self.linear_noise > 0.0:
            linear = truncated_normal(rng, self.linear_noise, (size, self.dimension))
        else:
            linear = np.zeros((size, self.dimension))
        linear.setflags(write=False)
        return SaddleSamples(couplings=couplings, linear=linear)

    def evaluate(self, samples: SaddleSamples, x: np.ndarray) -> np.ndarray:
        values = self.mean(x) + samples.linear
        if samples.couplings is not None:
            u, v = x[: self.m], x[self.m :]
            noise_u = np.einsum("nij,j->ni", samples.couplings, v)
            noise_v = -np.einsum("nij,i->nj", samples.couplings, u)
            values = values + np.concatenate([noise_u, noise_v], axis=1)
        return values

    def modulus(self, samples: SaddleSamples) -> np.ndarray:
        size = samples.linear.shape[0]
        if samples.couplings is None:
            return np.full(size, max(1.0, float(np.linalg.norm(self.coupling, 2))))
        return np.maximum(1.0, np.linalg.norm(self.coupling + samples.couplings, ord=2, axis=(1, 2)))

    def mean(self, x: np.ndarray) -> np.ndarray:
        u, v = x[: self.m], x[self.m :]
        return np.concatenate([self.coupling @ v + self.c, -self.coupling.T @ u + self.d_vec])

    def sigma_2(self, x: np.ndarray) -> float:
        u, v = x[: self.m], x[self.m :]
        coupling_part = self.coupling_noise**2 * (self.m * float(v @ v) + self.n * float(u @ u))
        return float(np.sqrt(coupling_part + self.linear_noise**2 * self.dimension))


def holder_map(x: np.ndarray, target: np.ndarray, exponent: float) -> np.ndarray:
    """phi(x)_i = sign(x_i - x*_i) |x_i - x*_i|^delta."""
    shift = x - target
    return np.sign(shift) * np.abs(shift) ** exponent


@dataclass(frozen=True)
class HolderSamples:
    # L(xi_j), shape (N,)
    moduli: np.ndarray
    # additive noise, shape (N, d); None when zero
    noise: Optional[NoiseDraw]


class HolderOracle(StochasticOracle):
    """F(xi, x) = L(xi) phi(x) + e(xi) with L(xi) = 1 + spread * Uniform(0, 2)."""

    def __init__(self, target, exponent: float, modulus_spread: float = 0.0, additive_noise: float = 0.0,
                 noise_law: NoiseLaw = NoiseLaw.GAUSSIAN):
        self.target = frozen_array(target)
        self.exponent = float(exponent)
        self.modulus_spread = float(modulus_spread)
        self.additive_noise = float(additive_noise)
        self.noise_law = NoiseLaw(noise_law)
        self.dimension = self.target.size

    @property
    def mean_modulus(self) -> float:
        return 1.0 + self.modulus_spread

    @property
    def holder_constant(self) -> float:
        """Constant C with ||phi(x) - phi(y)|| <= C ||x - y||^delta."""
        delta = self.exponent
        return 2.0 ** (1.0 - delta) * self.dimension ** ((1.0 - delta) / 2.0)

    def sample(self, rng: np.random.Generator, size: int) -> HolderSamples:
        moduli = 1.0 + self.modulus_spread * rng.uniform(0.0, 2.0, size)
        moduli.setflags(write=False)
        noise = draw_noise(rng, self.noise_law, self.additive_noise, (size, self.dimension))
        return HolderSamples(moduli=moduli, noise=noise)

    def evaluate(self, samples: HolderSamples, x: np.ndarray) -> np.ndarray:
        values = samples.moduli[:, None] * holder_map(x, self.target, self.exponent)[None, :]
        if samples.noise is not None:
            values = values + samples.noise.values()
        return values

    def batch_mean(self, samples: HolderSamples, x: np.ndarray) -> np.ndarray:
        value = float(np.mean(samples.moduli)) * holder_map(x, self.target, self.exponent)
        if samples.noise is not None:
            value = value + samples.noise.mean
        return value

    def modulus(self, samples: HolderSamples) -> np.ndarray:
        return samples.moduli * self.holder_constant

    def mean(self, x: np.ndarray) -> np.ndarray:
        return self.mean_modulus * holder_map(x, self.target, self.exponent)

    def sigma_2(self, x: np.ndarray) -> float:
        phi = holder_map(x, self.target, self.exponent)
        # Var U(0, 2) = 1/3
        modulus_part = self.modulus_spread**2 / 3.0 * float(phi @ phi)
        return float(np.sqrt(modulus_part + self.additive_noise**2 * self.dimension))
