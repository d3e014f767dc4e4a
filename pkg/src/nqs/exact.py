"""Ground-truth solvers: dense ED, Lanczos, and imaginary-time propagation.

These are the oracles used by the acceptance tests. The Lanczos solver uses
full reorthogonalization of the Krylov basis (cheap at desk scale and free
of ghost eigenvalues) with a seeded start vector for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertIndex
from .operator import Operator

MAX_FULL_ED_STATES = 2**13
MAX_LANCZOS_STATES = 2**24
MAX_PROPAGATION_STATES = 2**16


@dataclass
class EdResult:
    """Eigenvalues ascending; eigenvectors (when computed) are unit-norm
    columns indexed in HilbertIndex order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def full_ed(op: Operator, compute_eigenvectors: bool = True) -> EdResult:
    """Dense Hermitian eigendecomposition of the operator."""
    index = HilbertIndex(op.hilbert)
    if index.n_states > MAX_FULL_ED_STATES:
        raise ValueError(f"space of {index.n_states} states too large for full ED")
    mat = op.to_dense(index)
    asym = np.abs(mat - mat.conj().T).max()
    if asym > 1e-10:
        raise ValueError(f"operator is not Hermitian (max asymmetry {asym:.2e})")
    if compute_eigenvectors:
        vals, vecs = np.linalg.eigh(mat)
        return EdResult(eigenvalues=vals, eigenvectors=vecs.T)
    return EdResult(eigenvalues=np.linalg.eigvalsh(mat))


def lanczos_ed(op: Operator, first_n: int = 1, compute_eigenvectors: bool = False,
               tol: float = 1e-12, max_krylov: int = 400, seed: int = 93) -> EdResult:
    """Lowest eigenpairs by Lanczos iteration with full reorthogonalization.

    Works from the sparse matrix of the operator; the start vector is drawn
    from a seeded generator so repeated runs agree bitwise.
    """
    if first_n < 1 or first_n > 10:
        raise ValueError("first_n must be in 1..10")
    index = HilbertIndex(op.hilbert)
    n = index.n_states
    if n > MAX_LANCZOS_STATES:
        raise ValueError(f"space of {n} states too large for Lanczos")
    H = op.to_sparse(index)
    real = not np.iscomplexobj(H)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) if real else rng.normal(size=n) + 1j * rng.normal(size=n)
    v = v / np.linalg.norm(v)

    max_dim = min(max_krylov, n)
    V = np.zeros((max_dim, n), dtype=np.float64 if real else np.complex128)
    alphas: list[float] = []
    betas: list[float] = []
    V[0] = v
    theta = S = None
    converged = False
    residual = np.inf
    dim = 0
    for k in range(max_dim):
        w = H @ V[k]
        alpha = float(np.vdot(V[k], w).real)
        alphas.append(alpha)
        w = w - alpha * V[k]
        if k > 0:
            w = w - betas[k - 1] * V[k - 1]
        # full reorthogonalization against the whole Krylov basis (two passes)
        for _ in range(2):
            w = w - V[: k + 1].T @ (V[: k + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        dim = k + 1
        if dim >= first_n:
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, S = np.linalg.eigh(T)
            scale = max(1.0, float(np.abs(theta[:first_n]).max()))
            residual = float((beta * np.abs(S[dim - 1, :first_n])).max())
            if residual <= tol * scale or beta < 1e-14 or dim == n:
                converged = True
                break
        elif beta < 1e-14:
            raise RuntimeError(
                "Krylov space became invariant before first_n eigenvalues were available; "
                "try a different seed"
            )
        if dim == max_dim:
            break
        betas.append(beta)
        V[dim] = w / beta
    if not converged:
        raise RuntimeError(
            f"Lanczos did not converge within {max_dim} iterations (residual {residual:.2e})"
        )
    eigenvalues = theta[:first_n].copy()
    eigenvectors = None
    if compute_eigenvectors:
        eigenvectors = (V[:dim].T @ S[:, :first_n]).T
        eigenvectors = eigenvectors / np.linalg.norm(eigenvectors, axis=1, keepdims=True)
    return EdResult(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


@dataclass
class PropagationResult:
    state: np.ndarray
    times: np.ndarray
    energies: np.ndarray


def imaginary_time_propagation(op: Operator, psi0: np.ndarray, tau_max: float,
                               dt: float) -> PropagationResult:
    """Integrate d psi/d tau = -(H - <H>) psi with classic RK4, renormalizing
    after every step. Converges to the ground state when <psi0|gs> != 0."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    index = HilbertIndex(op.hilbert)
    if index.n_states > MAX_PROPAGATION_STATES:
        raise ValueError(f"space of {index.n_states} states too large for propagation")
    H = op.to_sparse(index)
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("initial state must be nonzero")
    psi /= norm

    def deriv(phi):
        hphi = H @ phi
        e = np.vdot(phi, hphi).real / np.vdot(phi, phi).real
        return -(hphi - e * phi)

    n_steps = int(round(tau_max / dt))
    times = np.empty(n_steps + 1)
    energies = np.empty(n_steps + 1)
    times[0] = 0.0
    energies[0] = np.vdot(psi, H @ psi).real
    for step in range(1, n_steps + 1):
        k1 = deriv(psi)
        k2 = deriv(psi + 0.5 * dt * k1)
        k3 = deriv(psi + 0.5 * dt * k2)
        k4 = deriv(psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = np.linalg.norm(psi)
        if not np.isfinite(norm) or norm == 0:
            raise RuntimeError(f"state became non-finite at step {step}; try a smaller dt")
        psi /= norm
        times[step] = step * dt
        energies[step] = np.vdot(psi, H @ psi).real
    return PropagationResult(state=psi, times=times, energies=energies)
