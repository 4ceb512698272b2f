"""Map generators: exact damped-mode embedding and an iterative
influence-functional path-integral propagator for spin-boson baths.

Both produce a :class:`~dynamap.maps.DynamicalMapSeries` by propagating a
complete operator basis, so the output feeds directly into the transfer-tensor
and time-local extrapolation machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import (
    MemoryBudgetExceeded,
    NonDiagonalizableCoupling,
    QuadratureFailure,
)
from .maps import DynamicalMapSeries, expm, is_hermitian
from .models import (
    Embedding,
    EmbeddingSpec,
    SpectralDensity,
    SystemSpec,
    bath_correlation,
    build_embedding,
)
from .numerics import DEFAULT_NUMERICS, NumericsConfig

__all__ = [
    "InfluenceCoefficients",
    "embedding_propagate",
    "extended_spectrum",
    "embedding_state",
    "eta_coefficients",
    "quapi_propagate",
]


# ---------------------------------------------------------------------------
# damped-mode embedding
# ---------------------------------------------------------------------------

def embedding_propagate(
    spec: EmbeddingSpec | Embedding,
    dt: float,
    n_steps: int,
) -> DynamicalMapSeries:
    """Reduced maps E(t_n, 0) from the extended generator.

    The single-step extended propagator is exponentiated once and powered;
    the mode starts in its vacuum state and is traced out per step. Exact to
    matrix-exponential precision.
    """
    emb = spec if isinstance(spec, Embedding) else build_embedding(spec)
    step = expm(emb.generator, dt)
    x = emb.embed
    d2 = emb.system_dim**2
    out = np.empty((n_steps, d2, d2), dtype=complex)
    for n in range(n_steps):
        x = step @ x
        out[n] = emb.project @ x
    return DynamicalMapSeries(dt=dt, t0=0.0, maps=out)


def extended_spectrum(emb: Embedding) -> np.ndarray:
    """Eigenvalues of the extended generator (decay rates and frequencies)."""
    return np.linalg.eigvals(emb.generator)


def embedding_state(emb: Embedding, rho0: np.ndarray, t: float) -> np.ndarray:
    """Exact reduced state at an arbitrary time, without grid powering."""
    vec = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    ext = expm(emb.generator, t) @ (emb.embed @ vec)
    red = emb.project @ ext
    d = emb.system_dim
    return red.reshape((d, d), order="F")


# ---------------------------------------------------------------------------
# influence coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InfluenceCoefficients:
    """Discretized bath influence: eta[k] couples path windows k steps apart.

    eta[0] is the double integral of C(t' - t'') over the ordered half of one
    step window; eta[k] integrates C over a pair of windows at lag k.
    """

    dt: float
    kmax: int
    eta: np.ndarray = field(repr=False)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=complex).copy()
        if eta.shape != (self.kmax + 1,):
            raise ValueError(f"expected {self.kmax + 1} coefficients, got {eta.shape}")
        eta.flags.writeable = False
        object.__setattr__(self, "eta", eta)


@lru_cache(maxsize=200_000)
def _corr_cached(sd: SpectralDensity, temperature: float, t: float) -> complex:
    return bath_correlation(sd, temperature, t)


def _window_quad(f, a, b, rtol, scale):
    re, re_err, *_ = quad(lambda x: f(x).real, a, b, epsabs=1e-14, epsrel=rtol, limit=200, full_output=1)
    im, im_err, *_ = quad(lambda x: f(x).imag, a, b, epsabs=1e-14, epsrel=rtol, limit=200, full_output=1)
    err = max(re_err, im_err)
    if err > max(rtol * abs(complex(re, im)), 1e-10 * max(scale, 1e-30), 1e-13):
        raise QuadratureFailure(err)
    return complex(re, im)


def eta_coefficients(
    sd: SpectralDensity,
    temperature: float,
    dt: float,
    kmax: int,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> InfluenceCoefficients:
    """Window integrals of the bath correlation function.

    The pair-window integral over windows at lag k >= 1 reduces exactly to a
    single integral with a triangular weight,

        eta_k = int_{-dt}^{dt} (dt - |u|) C(k dt + u) du,

    and the diagonal window gives eta_0 = int_0^dt (dt - u) C(u) du. Both are
    evaluated by adaptive quadrature on top of the adaptive quadrature inside
    C itself.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    rtol = numerics.eta_rtol
    scale = abs(_corr_cached(sd, temperature, 0.0)) * dt**2
    eta = np.empty(kmax + 1, dtype=complex)
    eta[0] = _window_quad(
        lambda u: (dt - u) * _corr_cached(sd, temperature, u), 0.0, dt, rtol, scale
    )
    for k in range(1, kmax + 1):
        eta[k] = _window_quad(
            lambda u: (dt - abs(u)) * _corr_cached(sd, temperature, k * dt + u),
            -dt,
            dt,
            rtol,
            scale,
        )
    return InfluenceCoefficients(dt=dt, kmax=kmax, eta=eta)


# ---------------------------------------------------------------------------
# iterative path-integral propagation
# ---------------------------------------------------------------------------

def quapi_propagate(
    system: SystemSpec,
    coeffs: InfluenceCoefficients,
    n_steps: int,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> DynamicalMapSeries:
    """Dynamical maps from iterative path summation with finite memory.

    Works in the eigenbasis of the coupling operator; the system propagator is
    split symmetrically around the influence insertions, and path variables
    further apart than ``coeffs.kmax`` steps are decoupled. All D^2 initial
    basis operators propagate together as one batch, which is what the memory
    guard (D^2)^kmax * D^2 counts.

    When the system Hamiltonian commutes with the coupling operator the path
    variables never mix, the sum collapses onto constant paths, and an exact
    reduced recursion with O(N) memory is used instead of the dense tensor; in
    that regime arbitrarily long memories are affordable.
    """
    h = system.h_s
    o = system.coupling_op
    if not is_hermitian(o):
        raise NonDiagonalizableCoupling("coupling operator must be Hermitian")
    d = system.dim
    d2 = d * d
    kmax = coeffs.kmax
    dt = coeffs.dt
    eta = coeffs.eta

    svals, v = np.linalg.eigh(o)
    h_eig = v.conj().T @ h @ v

    # path index z = j*d + i matches column-stacked vec(rho): forward value
    # s_plus = svals[i], backward value s_minus = svals[j]
    i_idx = np.arange(d2) % d
    j_idx = np.arange(d2) // d
    s_plus = svals[i_idx]
    s_minus = svals[j_idx]
    blip = s_plus - s_minus

    # influence phases: the new window picks up self_phi plus one lag term
    # per earlier window, phi_k[z_new, z_old]
    weights = [eta[k] * s_plus - np.conj(eta[k]) * s_minus for k in range(kmax + 1)]
    self_phi = blip * weights[0]
    lag_phi = [None] + [np.outer(blip, weights[k]) for k in range(1, kmax + 1)]

    off_diag = h_eig - np.diag(np.diag(h_eig))
    h_scale = 1.0 + float(np.linalg.norm(h_eig))
    if float(np.max(np.abs(off_diag))) <= 1e-13 * h_scale:
        maps_eig = _propagate_commuting(np.diag(h_eig).real, dt, n_steps, kmax,
                                        self_phi, lag_phi, d2)
    else:
        maps_eig = _propagate_dense(h_eig, dt, n_steps, kmax, self_phi,
                                    lag_phi, d2, numerics)

    basis_change = np.kron(v.T, v.conj().T)  # vec_orig -> vec_eig, unitary
    out = np.einsum("ab,nbc,cd->nad", basis_change.conj().T, maps_eig, basis_change)
    return DynamicalMapSeries(dt=dt, t0=0.0, maps=out)


def _propagate_commuting(energies, dt, n_steps, kmax, self_phi, lag_phi, d2):
    """Constant-path recursion for [H_S, O] = 0; exact and O(N * D^2)."""
    i_idx = np.arange(d2) % len(energies)
    j_idx = np.arange(d2) // len(energies)
    phase = np.exp(-1j * (energies[i_idx] - energies[j_idx]) * dt)
    lag_diag = [None] + [lag_phi[k].diagonal() for k in range(1, kmax + 1)]

    maps = np.empty((n_steps, d2, d2), dtype=complex)
    total_phi = np.zeros(d2, dtype=complex)
    lag_cumulative = np.zeros(d2, dtype=complex)
    for n in range(1, n_steps + 1):
        if 2 <= n and n - 1 <= kmax:
            lag_cumulative = lag_cumulative + lag_diag[n - 1]
        total_phi = total_phi + self_phi + lag_cumulative
        maps[n - 1] = np.diag(phase**n * np.exp(-total_phi))
    return maps


def _propagate_dense(h_eig, dt, n_steps, kmax, self_phi, lag_phi, d2, numerics):
    """Augmented-tensor recursion over the last ``kmax`` path variables."""
    if float(d2) ** kmax * d2 > numerics.memory_budget:
        raise MemoryBudgetExceeded(
            f"path tensor of (D^2)^kmax * D^2 = {float(d2)**kmax * d2:.3e} entries "
            f"exceeds the budget {numerics.memory_budget:.3e}"
        )
    self_factor = np.exp(-self_phi)
    lag_factor = [None] + [np.exp(-lag_phi[k]) for k in range(1, kmax + 1)]
    u_half = expm(-1j * h_eig, dt / 2.0)
    k_half = np.kron(u_half.conj(), u_half)
    u_full = u_half @ u_half
    k_full = np.kron(u_full.conj(), u_full)
    # fold the new point's self term and the lag-1 coupling into the step
    step_kernel = (k_full * lag_factor[1] * self_factor[:, None]).T  # (z_n, z_new)

    maps = np.empty((n_steps, d2, d2), dtype=complex)
    # batch axis first: tensor[b, z_hist..., z_latest]
    tensor = k_half.T * self_factor[None, :]
    maps[0] = k_half @ tensor.T
    for n in range(2, n_steps + 1):
        hist = tensor.ndim - 1
        expanded = tensor[..., None] * step_kernel
        for k in range(2, hist + 1):
            axis = 1 + hist - k
            shape = [1] * expanded.ndim
            shape[axis] = d2
            shape[-1] = d2
            expanded = expanded * lag_factor[k].T.reshape(shape)
        if hist == kmax:
            tensor = expanded.sum(axis=1)
        else:
            tensor = expanded
        readout = tensor.sum(axis=tuple(range(1, tensor.ndim - 1)))
        maps[n - 1] = k_half @ readout.T
    return maps
