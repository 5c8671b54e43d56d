"""Vacuum-quench propagation and long-time averaging of entanglement data.

Two interchangeable propagation routes:

* ``FRAME_EXACT`` conjugates the exact mode rotation through the squeezing
  frame, S(t) = G^{-1} B(t) G with B(t) block-diagonal rotations at the
  frequencies J cos(pi n / (N+1)). Cost per sample is O(N^2) and the route
  is available away from g == delta.
* ``LAB_EXPONENTIAL`` evaluates scipy's matrix exponential of the
  equation-of-motion generator afresh at every sample time. It works in
  every regime (including the critical line) and serves as the
  cross-validation oracle for the frame route.

The covariance of the evolved vacuum is sigma(t) = S(t) S(t)^T.
"""
from __future__ import annotations

import enum
import functools
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NonConvergence, OverflowGuard
from .gaussian import (
    CovarianceMatrix,
    LocalDecomposition,
    local_decompose,
    quadrature_indices,
    site_correlators,
    subsystem_entropy_from_rows,
    thermal_entropy,
)
from .model import (
    ModelParams,
    PhaseRegime,
    SqueezingFrame,
    bdg_matrices,
    classify_phase,
    frame_hopping_sign,
    squeezing_frame,
    tight_binding_spectrum,
)

_OVERFLOW_LIMIT = 1e300
_MAX_SAMPLES_ENV = "BKC_MAX_SAMPLES"


class PropagationMode(enum.Enum):
    FRAME_EXACT = "frame"
    LAB_EXPONENTIAL = "lab"


@dataclass(frozen=True)
class AveragingProtocol:
    """Deterministic late-time sampling grid and convergence policy.

    Samples are taken at t_k = t_min + k dt. The estimate starts from
    ``initial_samples`` values and is extended in ``batch_samples`` steps
    until the standard error of the mean drops below ``rel_threshold``
    times |mean|, or ``max_samples`` is reached (NonConvergence).
    """

    t_min: float
    dt: float
    initial_samples: int = 1000
    batch_samples: int = 500
    max_samples: int = 20000
    rel_threshold: float = 1e-3

    def __post_init__(self):
        if self.t_min < 0 or self.dt <= 0:
            raise ValueError("need t_min >= 0 and dt > 0")
        if not 0 < self.initial_samples <= self.max_samples:
            raise ValueError("initial_samples must be in (0, max_samples]")
        if self.batch_samples <= 0 or self.rel_threshold <= 0:
            raise ValueError("batch_samples and rel_threshold must be positive")

    @classmethod
    def for_params(cls, params: ModelParams, **overrides) -> "AveragingProtocol":
        """Late-time grid scaled by the effective hopping: t_min = 10 N / J, dt = 10 / J.

        The sample cap honours the BKC_MAX_SAMPLES environment variable
        unless overridden explicitly.
        """
        hop = params.hopping
        kwargs = {"t_min": 10.0 * params.n_sites / hop, "dt": 10.0 / hop}
        env_cap = os.environ.get(_MAX_SAMPLES_ENV)
        if env_cap is not None:
            kwargs["max_samples"] = int(env_cap)
        kwargs.update(overrides)
        return cls(**kwargs)

    def time(self, k: int) -> float:
        return self.t_min + k * self.dt


@dataclass(frozen=True, eq=False)
class TimeAverageResult:
    """Converged (or capped) time average of a scalar entanglement quantity."""

    mean: float
    stderr: float
    n_samples: int
    converged: bool
    values: np.ndarray = field(repr=False)


def _check_finite(arr: np.ndarray, t: float) -> np.ndarray:
    if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > _OVERFLOW_LIMIT:
        raise OverflowGuard(f"propagation overflowed float64 range at t = {t!r}")
    return arr


class Propagator:
    """Symplectic map of the quench, sampled at arbitrary times."""

    def __init__(self, params: ModelParams, mode: PropagationMode):
        self.params = params
        self.mode = mode
        n = params.n_sites
        h, omega = bdg_matrices(params)
        self.generator = omega @ h
        self.frame: SqueezingFrame | None = None
        if mode is PropagationMode.FRAME_EXACT:
            frame = squeezing_frame(params)
            sign = frame_hopping_sign(frame)
            spectrum = tight_binding_spectrum(params)
            psi2 = np.kron(spectrum.modes, np.eye(2))
            self.frame = frame
            self._psi2 = psi2
            self.frequencies = sign * params.hopping * np.cos(
                np.pi * np.arange(1, n + 1) / (n + 1)
            )
            self.mode_map = psi2 @ frame.matrix()
            self.mode_map_inv = frame.inverse_matrix() @ psi2.T

    def _rotated_map(self, t: float) -> np.ndarray:
        """B(t) G without materializing B: paired-row rotation of G."""
        cos_t = np.cos(self.frequencies * t)[:, None]
        sin_t = np.sin(self.frequencies * t)[:, None]
        top = self.mode_map[0::2]
        bot = self.mode_map[1::2]
        out = np.empty_like(self.mode_map)
        out[0::2] = cos_t * top + sin_t * bot
        out[1::2] = cos_t * bot - sin_t * top
        return out

    def symplectic(self, t: float) -> np.ndarray:
        """Full quadrature map S(t) with sigma(t) = S S^T from the vacuum."""
        if t == 0.0:
            return np.eye(2 * self.params.n_sites)
        if self.mode is PropagationMode.FRAME_EXACT:
            s_mat = self.mode_map_inv @ self._rotated_map(t)
        else:
            s_mat = scipy.linalg.expm(self.generator * t)
        return _check_finite(s_mat, t)

    def subsystem_rows(self, t: float, rows: np.ndarray) -> np.ndarray:
        """Rows of S(t) for the quadratures listed in ``rows``."""
        if t == 0.0:
            return np.eye(2 * self.params.n_sites)[rows]
        if self.mode is PropagationMode.FRAME_EXACT:
            block = self.mode_map_inv[rows] @ self._rotated_map(t)
            return _check_finite(block, t)
        return self.symplectic(t)[rows]

    def entropy_map(self, t: float) -> np.ndarray:
        """Quadrature map whose state has the same subsystem entropies as S(t).

        The frame route returns W(t) = Psi2^T B(t) G, i.e. the evolved state
        written in the squeezing frame. Site blocks of W W^T differ from the
        lab ones only by per-site symplectic factors, which leave every
        whole-site subsystem entropy unchanged but strip the e^{r (j - j0)}
        local-squeezing amplification. Without that rescaling the lab-frame
        site blocks at large N carry entries so far above the symplectic
        eigenvalues that the eigensolver's floating-point floor swallows the
        entropy entirely.
        """
        if self.mode is not PropagationMode.FRAME_EXACT:
            return self.symplectic(t)
        if t == 0.0:
            return self.frame.matrix()
        return _check_finite(self._psi2.T @ self._rotated_map(t), t)

    def entropy_rows(self, t: float, rows: np.ndarray) -> np.ndarray:
        """Rows of entropy_map(t); see that method for the frame choice."""
        if self.mode is not PropagationMode.FRAME_EXACT:
            return self.subsystem_rows(t, rows)
        if t == 0.0:
            return self.frame.matrix()[rows]
        block = self._psi2.T[rows] @ self._rotated_map(t)
        return _check_finite(block, t)


@functools.lru_cache(maxsize=32)
def build_propagator(params: ModelParams, mode: PropagationMode | None = None) -> Propagator:
    """Construct (and memoize) the propagator for these couplings.

    With ``mode=None`` the frame route is used away from the critical line
    and the matrix-exponential route exactly on it.
    """
    if mode is None:
        if classify_phase(params) is PhaseRegime.CRITICAL:
            mode = PropagationMode.LAB_EXPONENTIAL
        else:
            mode = PropagationMode.FRAME_EXACT
    return Propagator(params, mode)


def evolve(params: ModelParams, t: float, mode: PropagationMode | None = None) -> CovarianceMatrix:
    """Covariance of the evolved vacuum at time t."""
    s_mat = build_propagator(params, mode).symplectic(t)
    return CovarianceMatrix(s_mat @ s_mat.T)


def lab_exponential_evolve(params: ModelParams, t: float) -> CovarianceMatrix:
    """Covariance at time t computed through expm only; works in every regime."""
    h, omega = bdg_matrices(params)
    if t == 0.0:
        return CovarianceMatrix(np.eye(2 * params.n_sites))
    s_mat = _check_finite(scipy.linalg.expm((omega @ h) * t), t)
    return CovarianceMatrix(s_mat @ s_mat.T)


def _resolve_protocol(params: ModelParams, protocol: AveragingProtocol | None) -> AveragingProtocol:
    return AveragingProtocol.for_params(params) if protocol is None else protocol


def _standard_error(values: np.ndarray) -> float:
    if values.size < 2:
        return math.inf
    return float(values.std(ddof=1) / math.sqrt(values.size))


def _converge_scalar(sample, protocol: AveragingProtocol) -> tuple[np.ndarray, bool]:
    """Extend the sample list batchwise until the protocol's target is met."""
    values: list[float] = []
    target = protocol.initial_samples
    while True:
        while len(values) < target:
            values.append(sample(protocol.time(len(values))))
        arr = np.asarray(values)
        if _standard_error(arr) <= protocol.rel_threshold * abs(arr.mean()):
            return arr, True
        if len(values) >= protocol.max_samples:
            return arr, False
        target = min(len(values) + protocol.batch_samples, protocol.max_samples)


def _result_from_series(values: np.ndarray, converged: bool) -> TimeAverageResult:
    return TimeAverageResult(
        mean=float(values.mean()),
        stderr=_standard_error(values),
        n_samples=int(values.size),
        converged=converged,
        values=values,
    )


def time_averaged_entropy(
    params: ModelParams,
    subsystem,
    protocol: AveragingProtocol | None = None,
    mode: PropagationMode | None = None,
) -> TimeAverageResult:
    """Long-time average of the entanglement entropy of ``subsystem``.

    ``subsystem`` is an iterable of 0-based site indices. Raises
    NonConvergence (with the partial estimate attached) if the sample cap
    is reached first.
    """
    protocol = _resolve_protocol(params, protocol)
    prop = build_propagator(params, mode)
    rows = quadrature_indices(subsystem)
    if rows.size == 0:
        raise ValueError("subsystem must contain at least one site")

    def sample(t: float) -> float:
        return subsystem_entropy_from_rows(prop.entropy_rows(t, rows))

    values, converged = _converge_scalar(sample, protocol)
    result = _result_from_series(values, converged)
    if not converged:
        raise NonConvergence(
            f"entropy mean not converged after {values.size} samples", result=result
        )
    return result


def series_fluctuation_ratio(values) -> float:
    """RMS fluctuation of a series about its mean, relative to the mean."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or arr.mean() == 0.0:
        raise ValueError("fluctuation ratio needs a nonzero-mean series")
    return float(arr.std(ddof=0) / abs(arr.mean()))


def fluctuation_ratio(
    params: ModelParams,
    subsystem,
    protocol: AveragingProtocol | None = None,
    mode: PropagationMode | None = None,
) -> float:
    """Relative RMS of the entropy time series on the converged sample set."""
    result = time_averaged_entropy(params, subsystem, protocol, mode)
    return series_fluctuation_ratio(result.values)


@dataclass(frozen=True, eq=False)
class PageCurve:
    """Time-averaged entropy of every left block, sharing one sample grid."""

    lengths: np.ndarray
    entropies: np.ndarray
    stderrs: np.ndarray
    n_samples: int
    converged: bool


def page_curve(
    params: ModelParams,
    protocol: AveragingProtocol | None = None,
    mode: PropagationMode | None = None,
) -> PageCurve:
    """Entropy of the leftmost l sites for every cut l = 1..N-1.

    All cuts share the same deterministic time grid; sampling stops when
    every cut individually meets the protocol target.
    """
    protocol = _resolve_protocol(params, protocol)
    prop = build_propagator(params, mode)
    n = params.n_sites
    lengths = np.arange(1, n)

    def sample(t: float) -> np.ndarray:
        w_mat = prop.entropy_map(t)
        out = np.empty(n - 1)
        for i, l in enumerate(lengths):
            out[i] = subsystem_entropy_from_rows(w_mat[: 2 * l])
        return out

    values, converged = _converge_series(sample, protocol)
    means = values.mean(axis=0)
    stderrs = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
    curve = PageCurve(
        lengths=lengths,
        entropies=means,
        stderrs=stderrs,
        n_samples=values.shape[0],
        converged=converged,
    )
    if not converged:
        raise NonConvergence(
            f"page curve not converged after {values.shape[0]} samples", result=curve
        )
    return curve


def _converge_series(sample, protocol: AveragingProtocol) -> tuple[np.ndarray, bool]:
    """Vector version of the convergence loop: every component must converge."""
    values: list[np.ndarray] = []
    target = protocol.initial_samples
    while True:
        while len(values) < target:
            values.append(sample(protocol.time(len(values))))
        arr = np.asarray(values)
        if arr.shape[0] >= 2:
            stderr = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])
            if np.all(stderr <= protocol.rel_threshold * np.abs(arr.mean(axis=0))):
                return arr, True
        if len(values) >= protocol.max_samples:
            return arr, False
        target = min(len(values) + protocol.batch_samples, protocol.max_samples)


@dataclass(frozen=True, eq=False)
class SiteProfiles:
    """Site-resolved time averages from one shared sampling run.

    ``occupations`` and ``pair_amplitudes`` are the site correlators of the
    time-averaged covariance; ``mean_blocks`` holds its 2x2 site blocks.
    """

    entropies: np.ndarray
    stderrs: np.ndarray
    occupations: np.ndarray
    pair_amplitudes: np.ndarray
    mean_blocks: np.ndarray
    n_samples: int
    converged: bool

    def thermal_entropies(self) -> np.ndarray:
        """Thermal proxy per site: entropy of a thermal mode at the same density."""
        return np.array([thermal_entropy(max(n, 0.0)) for n in self.occupations])

    def local_decompositions(self) -> list[LocalDecomposition]:
        """Rotation+squeeze+thermal factorization of each averaged site block."""
        return [local_decompose(blk) for blk in self.mean_blocks]


def profiles(
    params: ModelParams,
    protocol: AveragingProtocol | None = None,
    mode: PropagationMode | None = None,
) -> SiteProfiles:
    """Single-site entropy and averaged correlators for every site."""
    protocol = _resolve_protocol(params, protocol)
    prop = build_propagator(params, mode)
    n = params.n_sites
    block_sums = np.zeros((n, 2, 2))
    count = 0

    def sample(t: float) -> np.ndarray:
        nonlocal count
        s_mat = prop.symplectic(t)
        w_mat = prop.entropy_map(t)
        out = np.empty(n)
        for j in range(n):
            rows = s_mat[2 * j:2 * j + 2]
            block_sums[j] += rows @ rows.T
            out[j] = subsystem_entropy_from_rows(w_mat[2 * j:2 * j + 2])
        count += 1
        return out

    values, converged = _converge_series(sample, protocol)
    means = values.mean(axis=0)
    stderrs = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
    mean_blocks = block_sums / count
    occs = np.empty(n)
    pairs = np.empty(n, dtype=complex)
    for j in range(n):
        occs[j], pairs[j] = site_correlators(mean_blocks[j], 0)
    result = SiteProfiles(
        entropies=means,
        stderrs=stderrs,
        occupations=occs,
        pair_amplitudes=pairs,
        mean_blocks=mean_blocks,
        n_samples=values.shape[0],
        converged=converged,
    )
    if not converged:
        raise NonConvergence(
            f"site profiles not converged after {values.shape[0]} samples", result=result
        )
    return result
