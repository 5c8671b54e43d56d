"""Gaussian-state toolkit on quadrature covariance matrices.

Conventions: N modes with quadratures ordered r = (q_1, p_1, ..., q_N, p_N),
hbar = 1, and sigma_ij = <{r_i, r_j}>, so the vacuum covariance is the
identity and every physical symplectic eigenvalue satisfies nu >= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotSymplectic, NumericalFailure

OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

# Eigenvalues of a covariance matrix carry absolute floating-point noise that
# scales with the matrix norm; the physical floor nu >= 1 is enforced with a
# tolerance widened accordingly.
_NU_TOL = 1e-8
_NU_SCALE_TOL = 1e-13


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return the 2N x 2N symplectic form Omega for the interleaved ordering."""
    return np.kron(np.eye(n_modes), OMEGA2)


def quadrature_indices(modes) -> np.ndarray:
    """Interleaved (q, p) row indices for a sequence of 0-based mode indices."""
    modes = np.asarray(sorted(modes), dtype=int)
    if modes.size and (modes[0] < 0):
        raise DomainError("mode indices must be non-negative")
    return np.stack([2 * modes, 2 * modes + 1], axis=1).reshape(-1)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Validated covariance matrix of a zero-mean Gaussian state.

    Parameters
    ----------
    data:
        Real square array of even dimension. Symmetry is checked relative to
        the matrix scale and the stored copy is symmetrized exactly.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2:
            raise ValueError("covariance matrix must be square with even dimension")
        scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
        asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if asym > 1e-10 * scale:
            raise ValueError(f"covariance matrix is not symmetric (residual {asym:.3e})")
        object.__setattr__(self, "data", (arr + arr.T) / 2.0)

    @property
    def n_modes(self) -> int:
        return self.data.shape[0] // 2

    def site_block(self, j: int) -> np.ndarray:
        """2x2 quadrature block of mode j (0-based)."""
        if not 0 <= j < self.n_modes:
            raise DomainError(f"mode index {j} out of range for {self.n_modes} modes")
        return self.data[2 * j:2 * j + 2, 2 * j:2 * j + 2]


def vacuum(n_modes: int) -> CovarianceMatrix:
    """Covariance of the N-mode vacuum: the identity in these conventions."""
    if n_modes < 1:
        raise DomainError(f"need at least one mode, got {n_modes}")
    return CovarianceMatrix(np.eye(2 * n_modes))


def _as_array(sigma) -> np.ndarray:
    if isinstance(sigma, CovarianceMatrix):
        return sigma.data
    return np.asarray(sigma, dtype=float)


def symplectic_eigenvalues(sigma, modes=None) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix restricted to ``modes``.

    Eigenvalues of Omega_A sigma_A come in pairs +/- i nu; the returned array
    holds the nu values sorted ascending, one per retained mode. Raw values
    are returned without clamping; callers decide how to treat eigenvalues
    that dip below 1 through floating-point noise.
    """
    arr = _as_array(sigma)
    if modes is not None:
        idx = quadrature_indices(modes)
        arr = arr[np.ix_(idx, idx)]
    if arr.size == 0:
        return np.zeros(0)
    omega = symplectic_form(arr.shape[0] // 2)
    try:
        vals = np.linalg.eigvals(omega @ arr)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symplectic eigensolve failed: {exc}") from exc
    vals = np.sort(np.abs(vals.imag))
    if vals.size % 2:
        raise NumericalFailure("symplectic spectrum did not pair up")
    return (vals[0::2] + vals[1::2]) / 2.0


def symplectic_eigenvalues_from_rows(rows) -> np.ndarray:
    """Symplectic spectrum of the block sigma_A = R R^T given its map rows R.

    R holds the 2l quadrature rows of a symplectic map applied to the vacuum,
    so sigma_A is never formed: R^T is QR-factored as Q T and the nu values
    are the paired singular values of T Omega T^T. Squaring R into R R^T
    doubles the dynamic range and makes small nu values irrecoverable once
    the entries grow past ~1/sqrt(eps); this route keeps the absolute error
    near eps times the block norm instead, which is what resolves nu ~ 1
    modes inside strongly amplified blocks.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] % 2 or rows.shape[0] > rows.shape[1]:
        raise ValueError("expected a 2l x 2N row block with 2l <= 2N")
    if rows.shape[0] == 0:
        return np.zeros(0)
    try:
        t_mat = np.linalg.qr(rows.T, mode="r")
        kern = t_mat @ symplectic_form(rows.shape[0] // 2) @ t_mat.T
        vals = np.linalg.svd(kern, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"row-block symplectic spectrum failed: {exc}") from exc
    return np.sort((vals[0::2] + vals[1::2]) / 2.0)


def subsystem_entropy_from_rows(rows) -> float:
    """Entanglement entropy of the block sigma_A = R R^T from its map rows.

    Same clamping policy as subsystem_entropy, with the noise floor scaled
    by the block norm ||R||^2.
    """
    rows = np.asarray(rows, dtype=float)
    nus = symplectic_eigenvalues_from_rows(rows)
    if nus.size == 0:
        return 0.0
    scale = float(np.linalg.norm(rows, ord="fro") ** 2)
    floor = 1.0 - (_NU_TOL + _NU_SCALE_TOL * max(1.0, scale))
    if np.any(nus < floor):
        raise DomainError(
            f"subsystem spectrum dips below 1 beyond noise floor: min {nus.min()!r}"
        )
    return float(np.sum(entropy_kernel(np.maximum(nus, 1.0))))


def entropy_kernel(x):
    """Von Neumann entropy of one Gaussian mode with symplectic eigenvalue x.

    s(x) = ((x+1)/2) ln((x+1)/2) - ((x-1)/2) ln((x-1)/2), evaluated in a form
    that stays accurate for x up to the largest representable floats. Values
    in [1 - 1e-8, 1] are clamped to 1 (where s = 0); anything lower raises
    DomainError. Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 1.0 - _NU_TOL):
        raise DomainError(f"symplectic eigenvalue below 1: min {arr.min()!r}")
    arr = np.maximum(arr, 1.0)
    u = (arr + 1.0) / 2.0
    v = (arr - 1.0) / 2.0
    small = arr <= 100.0
    out = np.empty_like(arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        vs = v[small]
        out[small] = u[small] * np.log(u[small]) - np.where(
            vs > 0.0, vs * np.log(np.where(vs > 0.0, vs, 1.0)), 0.0
        )
        vb = v[~small]
        out[~small] = np.log(vb) + u[~small] * np.log1p(1.0 / vb)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def subsystem_entropy(sigma, modes=None) -> float:
    """Entanglement entropy of ``modes``: sum of s(nu) over the block spectrum.

    Eigenvalues below 1 by no more than the scale-aware noise floor are
    clamped to 1; a genuinely unphysical block raises DomainError.
    """
    arr = _as_array(sigma)
    if modes is not None:
        idx = quadrature_indices(modes)
        arr = arr[np.ix_(idx, idx)]
    nus = symplectic_eigenvalues(arr)
    scale = float(np.max(np.abs(arr))) if arr.size else 1.0
    floor = 1.0 - (_NU_TOL + _NU_SCALE_TOL * max(1.0, scale))
    if np.any(nus < floor):
        raise DomainError(
            f"subsystem spectrum dips below 1 beyond noise floor: min {nus.min()!r}"
        )
    return float(np.sum(entropy_kernel(np.maximum(nus, 1.0))))


def site_correlators(sigma, j: int) -> tuple[float, complex]:
    """Occupation n = <a_j^dag a_j> and pair amplitude m = <a_j a_j> of mode j."""
    if isinstance(sigma, CovarianceMatrix):
        block = sigma.site_block(j)
    else:
        arr = np.asarray(sigma, dtype=float)
        block = arr[2 * j:2 * j + 2, 2 * j:2 * j + 2]
    qq, pp, qp = block[0, 0], block[1, 1], (block[0, 1] + block[1, 0]) / 2.0
    n = (qq + pp - 2.0) / 4.0
    m = (qq - pp + 2.0j * qp) / 4.0
    return float(n), complex(m)


def single_site_nu(n: float, m: complex) -> float:
    """Symplectic eigenvalue of a single mode from its (n, m) correlators."""
    nu_sq = (2.0 * n + 1.0) ** 2 - 4.0 * abs(m) ** 2
    scale = max(1.0, (2.0 * n + 1.0) ** 2)
    if nu_sq < 1.0 - (2.0 * _NU_TOL + _NU_SCALE_TOL * scale):
        raise DomainError(f"unphysical single-mode correlators: nu^2 = {nu_sq!r}")
    return math.sqrt(max(nu_sq, 1.0))


def thermal_entropy(nbar: float) -> float:
    """Entropy of a thermal mode with mean occupation nbar."""
    if nbar < -_NU_TOL:
        raise DomainError(f"negative occupation {nbar!r}")
    if nbar <= 0.0:
        return 0.0
    return nbar * math.log1p(1.0 / nbar) + math.log1p(nbar)


@dataclass(frozen=True)
class LocalDecomposition:
    """Single-mode block factored as a rotated squeezed thermal state.

    The block equals R(theta) diag(e^{2 beta + 2 z}, e^{2 beta - 2 z}) R(theta)^T
    with R(theta) the counterclockwise rotation; e^{2 beta} is the thermal
    symplectic eigenvalue and z the squeeze strength along the theta axis.
    """

    z: float
    beta: float
    theta: float

    def reconstruct(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, -s], [s, c]])
        lam = np.array([math.exp(2 * self.beta + 2 * self.z),
                        math.exp(2 * self.beta - 2 * self.z)])
        return (rot * lam) @ rot.T


def local_decompose(block) -> LocalDecomposition:
    """Factor a 2x2 covariance block into (z, beta, theta); see LocalDecomposition."""
    arr = np.asarray(block, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError("local_decompose expects a 2x2 block")
    sym = (arr + arr.T) / 2.0
    lam, vec = np.linalg.eigh(sym)
    if lam[0] <= 0.0:
        raise DomainError(f"block is not positive definite: eigenvalues {lam!r}")
    lo, hi = float(lam[0]), float(lam[1])
    vmax = vec[:, 1]
    theta = math.atan2(vmax[1], vmax[0])
    if theta <= -math.pi / 2:
        theta += math.pi
    elif theta > math.pi / 2:
        theta -= math.pi
    dec = LocalDecomposition(
        z=0.25 * math.log(hi / lo),
        beta=0.25 * math.log(hi * lo),
        theta=theta,
    )
    resid = float(np.max(np.abs(dec.reconstruct() - sym)))
    if resid > 1e-9 * max(1.0, hi):
        raise NumericalFailure(f"local decomposition reconstruction off by {resid:.3e}")
    return dec


def symplectic_residual(s_mat: np.ndarray) -> float:
    """Scaled violation of S Omega S^T = Omega, entrywise relative to row norms."""
    s_mat = np.asarray(s_mat, dtype=float)
    omega = symplectic_form(s_mat.shape[0] // 2)
    diff = s_mat @ omega @ s_mat.T - omega
    rows = np.linalg.norm(s_mat, axis=1)
    scale = 1.0 + np.outer(rows, rows)
    return float(np.max(np.abs(diff) / scale))


def apply_symplectic(sigma, s_mat) -> CovarianceMatrix:
    """Transform a covariance matrix by a symplectic map: S sigma S^T."""
    arr = _as_array(sigma)
    s_mat = np.asarray(s_mat, dtype=float)
    if s_mat.shape != arr.shape:
        raise ValueError("shape mismatch between transform and covariance")
    resid = symplectic_residual(s_mat)
    if resid > 1e-10:
        raise NotSymplectic(f"transform violates the symplectic form (residual {resid:.3e})")
    return CovarianceMatrix(s_mat @ arr @ s_mat.T)
