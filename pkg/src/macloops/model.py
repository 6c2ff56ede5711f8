"""Plant dynamics, noise models, loop/scenario configuration and seeded
random-number streams.

All configuration types are immutable after construction (arrays are frozen),
so scenarios can be shared freely across concurrent episode workers.  Every
random draw flows through an explicitly coordinated RngStream, which is what
makes episodes bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError
from .network import CrmConfig, TrafficSource
from .scheduling import SchedulerPolicy

# Eigenvalues of a covariance may dip this far below zero before the matrix
# is rejected; anything in [-PSD_CLIP, 0) is clipped to zero.
PSD_CLIP = 1e-12


def as_matrix(value, name: str) -> np.ndarray:
    """Coerce a scalar or nested sequence to a 2-D float array."""
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def as_vector(value, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def check_symmetric_psd(mat: np.ndarray, name: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise ConfigurationError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ConfigurationError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if eigs.min(initial=0.0) < -PSD_CLIP * max(1.0, abs(eigs).max(initial=0.0)):
        raise ConfigurationError(f"{name} must be positive semi-definite, eigenvalues {eigs}")


def check_symmetric_pd(mat: np.ndarray, name: str) -> None:
    check_symmetric_psd(mat, name)
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if eigs.min() <= 0.0:
        raise ConfigurationError(f"{name} must be positive definite, eigenvalues {eigs}")


def psd_sqrt(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix with small-eigenvalue clipping."""
    cov = 0.5 * (cov + cov.T)
    eigval, eigvec = np.linalg.eigh(cov)
    if eigval.min(initial=0.0) < -PSD_CLIP * max(1.0, abs(eigval).max(initial=0.0)):
        raise ConfigurationError(f"covariance is not PSD, eigenvalues {eigval}")
    eigval = np.clip(eigval, 0.0, None)
    return (eigvec * np.sqrt(eigval)) @ eigvec.T


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream addressed by (master_seed, coordinates).

    Identical coordinates yield identical draw sequences; distinct coordinates
    yield statistically independent streams (numpy SeedSequence spawning).
    """

    master_seed: int
    coords: tuple[int, ...] = ()

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=self.coords)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def child(self, *extra: int) -> "RngStream":
        return RngStream(self.master_seed, self.coords + tuple(int(e) for e in extra))


@dataclass(frozen=True, eq=False)
class PlantModel:
    """Discrete-time linear plant x+ = A x + B u + w at its own sampling scale.

    `period` and `phase` place the plant on the global tick grid: the loop
    samples, schedules and actuates at ticks phase, phase+period,
    phase+2*period, ...  The default phase 0 synchronizes all loops of equal
    period on the same contention instants.
    """

    A: np.ndarray
    B: np.ndarray
    Rw: np.ndarray
    R0: np.ndarray
    x0_mean: Optional[np.ndarray] = None
    period: int = 1
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "A", _freeze(as_matrix(self.A, "A")))
        object.__setattr__(self, "B", _freeze(as_matrix(self.B, "B")))
        object.__setattr__(self, "Rw", _freeze(as_matrix(self.Rw, "Rw")))
        object.__setattr__(self, "R0", _freeze(as_matrix(self.R0, "R0")))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ConfigurationError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ConfigurationError(
                f"B must have {n} rows to match A, got {self.B.shape}"
            )
        if self.Rw.shape != (n, n) or self.R0.shape != (n, n):
            raise ConfigurationError("Rw and R0 must be n x n")
        check_symmetric_psd(self.Rw, "Rw")
        check_symmetric_psd(self.R0, "R0")
        mean = np.zeros(n) if self.x0_mean is None else as_vector(self.x0_mean, "x0_mean")
        if mean.shape != (n,):
            raise ConfigurationError(f"x0_mean must have length {n}")
        object.__setattr__(self, "x0_mean", _freeze(mean))
        if int(self.period) != self.period or self.period < 1:
            raise ConfigurationError(f"period must be a positive integer, got {self.period}")
        object.__setattr__(self, "period", int(self.period))
        if int(self.phase) != self.phase or not 0 <= self.phase < self.period:
            raise ConfigurationError(
                f"phase must be an integer in [0, period), got {self.phase}"
            )
        object.__setattr__(self, "phase", int(self.phase))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def plant_step(model: PlantModel, x, u, w) -> np.ndarray:
    """One step of the state equation: A x + B u + w."""
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    w = as_vector(w, "w")
    if x.shape != (model.n,):
        raise ConfigurationError(f"x must have length {model.n}, got {x.shape}")
    if u.shape != (model.m,):
        raise ConfigurationError(f"u must have length {model.m}, got {u.shape}")
    if w.shape != (model.n,):
        raise ConfigurationError(f"w must have length {model.n}, got {w.shape}")
    return model.A @ x + model.B @ u + w


def uncontrolled_state(controls: Sequence, x_k, model: PlantModel) -> np.ndarray:
    """State of the auxiliary uncontrolled process: x_k with the accumulated
    effect of the applied inputs u_0..u_{k-1} subtracted.

    For a fixed noise realization the result is identical under any two
    control sequences, which is what makes it usable as a control-free
    scheduling argument.
    """
    x_k = as_vector(x_k, "x_k")
    if x_k.shape != (model.n,):
        raise ConfigurationError(f"x_k must have length {model.n}")
    acc = np.zeros(model.n)
    for u in controls:
        u = as_vector(u, "u")
        if u.shape != (model.m,):
            raise ConfigurationError(f"controls must have length {model.m}")
        acc = model.A @ acc + model.B @ u
    return x_k - acc


def sample_noise(stream: Union[RngStream, np.random.Generator], covariance) -> np.ndarray:
    """Zero-mean Gaussian draw with the given covariance.

    The draw goes through the symmetric PSD square root, so exactly n standard
    normals are consumed per call regardless of the covariance's rank.
    """
    cov = as_matrix(covariance, "covariance")
    factor = psd_sqrt(cov)
    gen = stream.generator() if isinstance(stream, RngStream) else stream
    return factor @ gen.standard_normal(cov.shape[0])


@dataclass(frozen=True, eq=False)
class LoopConfig:
    """One control loop: plant, scheduler policy, horizon and cost weights."""

    plant: PlantModel
    scheduler: SchedulerPolicy
    horizon: int
    Q0: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    net_penalty: float = 0.0

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigurationError(f"horizon must be a positive integer, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))
        n, m = self.plant.n, self.plant.m
        q0 = as_matrix(self.Q0, "Q0")
        q1 = as_matrix(self.Q1, "Q1")
        q2 = as_matrix(self.Q2, "Q2")
        if q0.shape != (n, n) or q1.shape != (n, n):
            raise ConfigurationError("Q0 and Q1 must be n x n")
        if q2.shape != (m, m):
            raise ConfigurationError("Q2 must be m x m")
        check_symmetric_psd(q0, "Q0")
        check_symmetric_psd(q1, "Q1")
        check_symmetric_pd(q2, "Q2")
        object.__setattr__(self, "Q0", _freeze(q0))
        object.__setattr__(self, "Q1", _freeze(q1))
        object.__setattr__(self, "Q2", _freeze(q2))
        if self.net_penalty < 0.0:
            raise ConfigurationError(f"net_penalty must be >= 0, got {self.net_penalty}")


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """A set of loops plus exogenous sources contending through one CRM."""

    loops: tuple[LoopConfig, ...]
    crm: CrmConfig
    sources: tuple[TrafficSource, ...] = ()
    global_horizon: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(self.loops))
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.loops:
            raise ConfigurationError("scenario needs at least one loop")
        needed = max(lc.plant.phase + lc.horizon * lc.plant.period for lc in self.loops)
        horizon = needed if self.global_horizon is None else int(self.global_horizon)
        if horizon < needed:
            raise ConfigurationError(
                f"global_horizon {horizon} cannot contain the slowest loop "
                f"(needs {needed} ticks)"
            )
        object.__setattr__(self, "global_horizon", horizon)


def scenario_equal(a: NetworkScenario, b: NetworkScenario) -> bool:
    """Structural equality of two scenarios (arrays compared element-wise)."""
    if len(a.loops) != len(b.loops) or a.global_horizon != b.global_horizon:
        return False
    if a.crm != b.crm or a.sources != b.sources:
        return False
    for la, lb in zip(a.loops, b.loops):
        pa, pb = la.plant, lb.plant
        same_plant = (
            np.array_equal(pa.A, pb.A)
            and np.array_equal(pa.B, pb.B)
            and np.array_equal(pa.Rw, pb.Rw)
            and np.array_equal(pa.R0, pb.R0)
            and np.array_equal(pa.x0_mean, pb.x0_mean)
            and pa.period == pb.period
            and pa.phase == pb.phase
        )
        same_weights = (
            np.array_equal(la.Q0, lb.Q0)
            and np.array_equal(la.Q1, lb.Q1)
            and np.array_equal(la.Q2, lb.Q2)
        )
        if not (
            same_plant
            and same_weights
            and la.scheduler == lb.scheduler
            and la.horizon == lb.horizon
            and la.net_penalty == lb.net_penalty
        ):
            return False
    return True
