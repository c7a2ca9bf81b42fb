"""Coupled Brownian increments for the interior and boundary noises.

Generator: numpy ``PCG64`` (``numpy.random.Generator``), Gaussian draws
via ``standard_normal``.  Replica ``r`` of a run seeded with ``s`` uses
``PCG64(s + r)``.  Within a replica the draws are step-major: at each step
the ``K`` interior modes in ascending order, then the two endpoints.

Increments are stored already colored: ``dW[n, j] = lambda_j * dbeta_j``
and ``dB[n, i] = theta_i * dbetahat_i``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

__all__ = [
    "PRNG_NAME",
    "NoiseSpec",
    "NoisePath",
    "sample_path",
    "sample_batch",
    "refine",
    "coarsen",
    "save_path",
    "load_path",
]

PRNG_NAME = f"numpy-{np.__version__}/PCG64/standard_normal"
MAGIC = b"NZP1"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: ``q_eigs`` is ``"identity"`` or a list of ``lambda_j >= 0``."""

    K: int
    q_eigs: Union[str, Tuple[float, ...]] = "identity"
    theta: Tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.q_eigs, str):
            if self.q_eigs != "identity":
                raise ValueError(f"unknown q_eigs {self.q_eigs!r}")
        else:
            object.__setattr__(self, "q_eigs", tuple(float(v) for v in self.q_eigs))
            if len(self.q_eigs) != self.K:
                raise ValueError(f"q_eigs has {len(self.q_eigs)} entries, expected K={self.K}")
            if min(self.q_eigs) < 0:
                raise ValueError("q_eigs must be non-negative")
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        if len(self.theta) != 2 or min(self.theta) < 0:
            raise ValueError("theta must be a non-negative pair")

    @property
    def lambdas(self) -> np.ndarray:
        if self.q_eigs == "identity":
            return np.ones(self.K)
        return np.asarray(self.q_eigs, dtype=float)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Colored increments.

    ``dW`` has shape ``(n_steps, K)`` and ``dB`` ``(n_steps, 2)`` for a
    single path; batches carry a replica axis in the middle,
    ``(n_steps, M, K)`` and ``(n_steps, M, 2)``.
    """

    dt: float
    dW: np.ndarray
    dB: np.ndarray
    w_scale: np.ndarray
    b_scale: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.dW.shape[0]

    @property
    def K(self) -> int:
        return self.dW.shape[-1]

    @property
    def batched(self) -> bool:
        return self.dW.ndim == 3

    @property
    def replicas(self) -> int:
        return self.dW.shape[1] if self.batched else 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.dt).tobytes())
        h.update(np.ascontiguousarray(self.dW, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.dB, dtype="<f8").tobytes())
        return h.hexdigest()

    def replica(self, r: int) -> "NoisePath":
        if not self.batched:
            raise ValueError("not a batched path")
        return NoisePath(self.dt, self.dW[:, r], self.dB[:, r], self.w_scale, self.b_scale)


def _raw(seed: int, n_steps: int, K: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((n_steps, K + 2))


def sample_path(spec: NoiseSpec, dt: float, n_steps: int, replica: int = 0) -> NoisePath:
    """Increments of one replica, stream seeded by ``spec.seed + replica``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    z = _raw(spec.seed + replica, n_steps, spec.K) * np.sqrt(dt)
    lam = spec.lambdas
    th = np.asarray(spec.theta)
    return NoisePath(dt, z[:, :spec.K] * lam, z[:, spec.K:] * th, lam, th)


def sample_batch(spec: NoiseSpec, dt: float, n_steps: int, replicas: Sequence[int]) -> NoisePath:
    """Stack the increments of several replicas along axis 1.

    Replica ``r`` of a batch is bit-identical to ``sample_path(..., r)``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    replicas = list(replicas)
    K = spec.K
    dW = np.empty((n_steps, len(replicas), K))
    dB = np.empty((n_steps, len(replicas), 2))
    sq = np.sqrt(dt)
    lam = spec.lambdas
    th = np.asarray(spec.theta)
    for i, r in enumerate(replicas):
        z = _raw(spec.seed + r, n_steps, K)
        z *= sq
        dW[:, i] = z[:, :K] * lam
        dB[:, i] = z[:, K:] * th
    return NoisePath(dt, dW, dB, lam, th)


def _bridge(incr: np.ndarray, scale: np.ndarray, factor: int, dt: float, rng) -> np.ndarray:
    n = incr.shape[0]
    shape = (n, factor) + incr.shape[1:]
    z = rng.standard_normal(shape) * np.sqrt(dt / factor) * scale
    z -= (z.sum(axis=1, keepdims=True) - incr[:, None]) / factor
    return z.reshape((n * factor,) + incr.shape[1:])


def refine(path: NoisePath, factor: int, seed: int = 0) -> NoisePath:
    """Brownian-bridge subdivision of every increment into ``factor`` pieces.

    The sub-increments of each coarse cell are Gaussian with variance
    ``scale^2 dt / factor``, conditioned to sum to the coarse increment.
    """
    if factor < 2:
        raise ValueError("refinement factor must be >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    ws = path.w_scale if not path.batched else path.w_scale[None, :]
    bs = path.b_scale if not path.batched else path.b_scale[None, :]
    dW = _bridge(path.dW, ws, factor, path.dt, rng)
    dB = _bridge(path.dB, bs, factor, path.dt, rng)
    return NoisePath(path.dt / factor, dW, dB, path.w_scale, path.b_scale)


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    """Sum consecutive groups of ``factor`` increments."""
    n = path.n_steps // factor
    if n * factor != path.n_steps:
        raise ValueError("n_steps not divisible by factor")
    dW = path.dW.reshape((n, factor) + path.dW.shape[1:]).sum(axis=1)
    dB = path.dB.reshape((n, factor) + path.dB.shape[1:]).sum(axis=1)
    return NoisePath(path.dt * factor, dW, dB, path.w_scale, path.b_scale)


def save_path(path: NoisePath, filename) -> None:
    """Little-endian dump: ``NZP1``, dt, n_steps, K, then dW, dB and the two scale vectors."""
    if path.batched:
        raise ValueError("only single-replica paths can be dumped")
    with open(filename, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<dQQ", path.dt, path.n_steps, path.K))
        for arr in (path.dW, path.dB, path.w_scale, path.b_scale):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_path(filename) -> NoisePath:
    with open(filename, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{filename}: not an NZP1 noise dump")
        dt, n, K = struct.unpack("<dQQ", fh.read(24))
        body = np.frombuffer(fh.read(), dtype="<f8")
    sizes = [n * K, n * 2, K, 2]
    if body.size != sum(sizes):
        raise ValueError(f"{filename}: truncated payload")
    parts = np.split(body, np.cumsum(sizes)[:-1])
    return NoisePath(dt, parts[0].reshape(n, K).astype(float), parts[1].reshape(n, 2).astype(float),
                     parts[2].astype(float), parts[3].astype(float))
