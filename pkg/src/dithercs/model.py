"""Ground truth, measurement ensembles, bounded noise and linear observations."""

from dataclasses import dataclass
import zlib

import numpy as np

__all__ = [
    "ParameterError",
    "StructureSpec",
    "GroundTruth",
    "MeasurementEnsemble",
    "NoiseSpec",
    "derive_seed",
    "rng_for",
    "generate_ground_truth",
    "sample_sparse",
    "sample_lowrank",
    "sample_matrix",
    "sample_noise",
    "linear_observe",
]

_U64 = (1 << 64) - 1


class ParameterError(ValueError):
    """Raised for invalid or inconsistent problem parameters."""


@dataclass(frozen=True)
class StructureSpec:
    """A sparse vector (``kind="sparse"``) or a low-rank square matrix (``kind="lowrank"``).

    For sparse vectors `dim` is the ambient dimension and `s` the sparsity;
    for low-rank matrices `d` is the side length and `rank` the rank, and the
    ambient dimension is ``d * d``.
    """

    kind: str
    dim: int = 0
    s: int = 0
    d: int = 0
    rank: int = 0

    def __post_init__(self):
        if self.kind == "sparse":
            if self.dim < 1 or not 1 <= self.s <= self.dim:
                raise ParameterError(f"sparse spec needs 1 <= s <= n, got s={self.s}, n={self.dim}")
        elif self.kind == "lowrank":
            if self.d < 1 or not 1 <= self.rank <= self.d:
                raise ParameterError(f"low-rank spec needs 1 <= rank <= d, got rank={self.rank}, d={self.d}")
            object.__setattr__(self, "dim", self.d * self.d)
        else:
            raise ParameterError(f"unknown structure kind {self.kind!r}")

    @classmethod
    def sparse(cls, n, s):
        return cls("sparse", dim=int(n), s=int(s))

    @classmethod
    def lowrank(cls, d, rank):
        return cls("lowrank", d=int(d), rank=int(rank))

    @property
    def n(self):
        return self.dim


@dataclass
class GroundTruth:
    """Signal ``x_star`` (length n) and corruption ``v_star`` (length m).

    `corruption_spec` is None for corruption-free problems, in which case
    ``v_star`` is all zeros.
    """

    x_star: np.ndarray
    v_star: np.ndarray
    signal_spec: StructureSpec
    corruption_spec: StructureSpec | None


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Row distribution of the sensing matrix.

    ``nominal_K`` is only recorded for evaluating bound shapes.
    """

    kind: str = "gaussian"
    nominal_K: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher"):
            raise ParameterError(f"unknown ensemble {self.kind!r}")
        if not self.nominal_K > 0:
            raise ParameterError("nominal_K must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be nonnegative, got {self.epsilon}")


def derive_seed(master_seed, tag, index=0):
    """Hash ``(master_seed, tag, index)`` into a 64-bit seed.

    Sub-streams depend only on these three values, so trials can run in any
    order or in parallel and still reproduce.
    """
    ss = np.random.SeedSequence(
        [int(master_seed) & _U64, zlib.crc32(str(tag).encode()), int(index) & _U64]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed, tag=None):
    if tag is not None:
        seed = derive_seed(seed, tag)
    return np.random.default_rng(int(seed) & _U64)


def sample_sparse(n, s, rng):
    """Uniformly random support of size `s` with standard normal entries."""
    # partial Fisher-Yates over the index set
    idx = np.arange(n)
    for i in range(s):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    x = np.zeros(n)
    x[idx[:s]] = rng.standard_normal(s)
    return x


def sample_lowrank(d, rank, rng):
    """``U1 @ U2.T`` with U1, U2 independent d x rank orthonormal-column matrices."""
    U1, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    U2, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    return U1 @ U2.T


def _sample_structure(spec, rng):
    if spec.kind == "sparse":
        return sample_sparse(spec.dim, spec.s, rng)
    return sample_lowrank(spec.d, spec.rank, rng).ravel()


def generate_ground_truth(signal_spec, corruption_spec, seed):
    """Draw ``(x_star, v_star)``; pure function of the specs and `seed`.

    Pass ``corruption_spec=None`` for a corruption-free instance; the length
    of ``v_star`` is then unknown here and an empty vector is returned
    (callers pad it to length m).
    """
    if corruption_spec is not None and corruption_spec.kind != "sparse":
        raise ParameterError("corruption must be a sparse vector")
    x = _sample_structure(signal_spec, rng_for(seed, "signal"))
    if corruption_spec is None:
        v = np.zeros(0)
    else:
        v = _sample_structure(corruption_spec, rng_for(seed, "corruption"))
    return GroundTruth(x, v, signal_spec, corruption_spec)


def sample_matrix(ensemble, m, n, seed):
    """An m x n matrix with i.i.d. standard normal or +-1 entries."""
    if m < 1 or n < 1:
        raise ParameterError(f"matrix dimensions must be positive, got {m}x{n}")
    rng = rng_for(seed)
    if ensemble.kind == "gaussian":
        return rng.standard_normal((m, n))
    return 2.0 * rng.integers(0, 2, size=(m, n)).astype(float) - 1.0


def sample_noise(spec, m, seed):
    """Standard Gaussian vector rescaled so that ``||n||_inf == epsilon``."""
    if m < 1:
        raise ParameterError("noise length must be positive")
    if spec.epsilon == 0:
        return np.zeros(m)
    z = rng_for(seed).standard_normal(m)
    return z * (spec.epsilon / np.abs(z).max())


def linear_observe(Phi, truth, noise):
    """Pre-quantization measurements ``Phi x* + sqrt(m) v* + n``."""
    Phi = np.asarray(Phi, dtype=float)
    m, n = Phi.shape
    x, v, noise = truth.x_star, truth.v_star, np.asarray(noise, dtype=float)
    if x.shape != (n,):
        raise ParameterError(f"signal length {x.shape} does not match Phi with {n} columns")
    if v.size == 0:
        v = np.zeros(m)
    if v.shape != (m,) or noise.shape != (m,):
        raise ParameterError(f"corruption/noise length must equal m={m}")
    return Phi @ x + np.sqrt(m) * v + noise
