"""A-series root data, the rational dynamical r-matrix, and the reduced
Poisson bracket of the Lie-algebraic family.

The reduced phase space is coordinatized by (q, p, xi) where q lies in the
open chamber q_1 > ... > q_n, p is real, and xi is anti-Hermitian with zero
diagonal (the subspace written T_perp below).  The momentum matrix is
parametrized as Y(q, p, xi) = diag(p) - r(q) xi, where r(q) inverts
ad_{diag(q)} on the zero-diagonal subspace:

    (r(q) xi)_jk = xi_jk / (q_j - q_k)   (j != k),  zero diagonal.

The reduced bracket of two observables F, H of (q, p, xi) is

    {F, H} = <grad_q F, grad_p H> - <grad_p F, grad_q H>
             + <xi, [grad_xi F, grad_xi H]>,

with <.,.> the matrix trace form and grad_xi the T_perp-projected gradient
defined by <U, grad_xi F> = d/dt F(xi + t U) for U in T_perp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, EvaluationFailure
from .oscillator import DEGENERACY_RTOL

#: Central-difference step floor; the default step is relative to coordinate
#: magnitude with this absolute floor (near the cube root of machine eps).
FD_STEP_FLOOR = 1e-7


@dataclass(frozen=True)
class RootSystemA:
    """Root data of the A-series system on n letters under the trace form.

    Positive roots are alpha_jk = e_j - e_k for j < k with alpha(q) =
    q_j - q_k; root vectors are the elementary matrices E_jk, normalized so
    that <E_alpha, E_-alpha> = tr(E_jk E_kj) = 1 = 2/|alpha|^2.
    """

    n: int

    @property
    def positive_roots(self) -> list[tuple[int, int]]:
        return [(j, k) for j in range(self.n) for k in range(j + 1, self.n)]

    def alpha_of(self, root: tuple[int, int], q: np.ndarray) -> float:
        j, k = root
        return float(q[j] - q[k])

    def root_vector(self, root: tuple[int, int]) -> np.ndarray:
        j, k = root
        E = np.zeros((self.n, self.n), dtype=complex)
        E[j, k] = 1.0
        return E

    def normalization(self, root: tuple[int, int]) -> float:
        """2/|alpha|^2 under the trace form."""
        return 1.0

    @property
    def num_positive_roots(self) -> int:
        return self.n * (self.n - 1) // 2


def _gap_matrix(q: np.ndarray, gap_tol: float | None) -> np.ndarray:
    """Pairwise differences with degeneracy guard; diagonal set to 1."""
    q = np.asarray(q, dtype=float)
    dq = q[:, None] - q[None, :]
    tol = gap_tol
    if tol is None:
        tol = DEGENERACY_RTOL * max(float(np.max(np.abs(q))), 1e-300)
    off = ~np.eye(q.size, dtype=bool)
    if np.any(np.abs(dq[off]) <= tol):
        raise DegenerateSpectrum("chamber positions are not pairwise distinct")
    np.fill_diagonal(dq, 1.0)
    return dq


def r_matrix_apply(q, xi, gap_tol: float | None = None) -> np.ndarray:
    """Apply the rational dynamical r-matrix: (r(q) xi)_jk = xi_jk/(q_j - q_k).

    Annihilates diagonals; inverts ad_{diag(q)} on zero-diagonal matrices.
    """
    xi = np.asarray(xi, dtype=complex)
    dq = _gap_matrix(np.asarray(q, dtype=float), gap_tol)
    out = xi / dq
    np.fill_diagonal(out, 0.0)
    return out


def parametrize_Y_lie(q, p, xi, gap_tol: float | None = None) -> np.ndarray:
    """Y(q, p, xi) = diag(p) - r(q) xi; Hermitian for xi in T_perp."""
    Y = np.diag(np.asarray(p, dtype=float)).astype(complex)
    return Y - r_matrix_apply(q, xi, gap_tol=gap_tol)


def xi_from_Y(q, Y) -> np.ndarray:
    """Invert the parametrization on the off-diagonal part:
    xi = -ad_{diag(q)}(offdiag Y), i.e. xi_jk = -(q_j - q_k) Y_jk."""
    q = np.asarray(q, dtype=float)
    Y = np.asarray(Y, dtype=complex)
    xi = -(q[:, None] - q[None, :]) * Y
    np.fill_diagonal(xi, 0.0)
    return xi


def project_t_perp(a: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto T_perp: anti-Hermitize, zero the diagonal."""
    out = 0.5 * (a - a.conj().T)
    np.fill_diagonal(out, 0.0)
    return out


def H_red_lie(q, p, xi, omega: float, gap_tol: float | None = None) -> float:
    """Reduced Hamiltonian of the Lie-algebraic family:

        (1/2) sum p^2 + (1/2) omega^2 sum q^2
            + sum_{j<k} |xi_jk|^2 / (q_j - q_k)^2,

    equal to (1/2) tr(Y(q,p,xi)^2) + (1/2) omega^2 sum q^2.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    dq = _gap_matrix(q, gap_tol)
    w = np.abs(xi) ** 2 / dq**2
    spin = 0.5 * float(np.sum(w[~np.eye(q.size, dtype=bool)]))
    return float(0.5 * np.sum(p**2) + 0.5 * omega**2 * np.sum(q**2) + spin)


# ---------------------------------------------------------------------------
# finite-difference gradients and the reduced bracket
# ---------------------------------------------------------------------------

def _fd_steps(values: np.ndarray, rel: float) -> np.ndarray:
    return np.maximum(rel * np.abs(values), FD_STEP_FLOOR)


def _call(f, q, p, xi):
    try:
        return float(f(q, p, xi))
    except Exception as exc:  # noqa: BLE001 - propagate as a typed failure
        raise EvaluationFailure(f"observable callback failed: {exc}") from exc


def grad_qp(f, q, p, xi, fd_step: float = 1e-5):
    """Central-difference gradients of f(q, p, xi) in q and p."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    hq = _fd_steps(q, fd_step)
    hp = _fd_steps(p, fd_step)
    gq = np.zeros_like(q)
    gp = np.zeros_like(p)
    for j in range(q.size):
        e = np.zeros_like(q); e[j] = hq[j]
        gq[j] = (_call(f, q + e, p, xi) - _call(f, q - e, p, xi)) / (2 * hq[j])
        e = np.zeros_like(p); e[j] = hp[j]
        gp[j] = (_call(f, q, p + e, xi) - _call(f, q, p - e, xi)) / (2 * hp[j])
    return gq, gp


def grad_xi(f, q, p, xi, fd_step: float = 1e-5) -> np.ndarray:
    """T_perp-projected gradient of f with respect to xi.

    With xi_jk = a_jk + i b_jk for j < k (and xi_kj = -conj(xi_jk)), the
    trace-form pairing gives

        (grad_xi f)_kj = (df/da_jk - i df/db_jk) / 2,
        (grad_xi f)_jk = -conj((grad_xi f)_kj),

    which lands in T_perp automatically.
    """
    xi = np.asarray(xi, dtype=complex)
    n = xi.shape[0]
    h = max(fd_step * max(1.0, float(np.max(np.abs(xi)))), FD_STEP_FLOOR)
    g = np.zeros_like(xi)
    for j in range(n):
        for k in range(j + 1, n):
            U = np.zeros_like(xi)
            U[j, k] = h; U[k, j] = -h
            dfa = (_call(f, q, p, xi + U) - _call(f, q, p, xi - U)) / (2 * h)
            U = np.zeros_like(xi)
            U[j, k] = 1j * h; U[k, j] = 1j * h
            dfb = (_call(f, q, p, xi + U) - _call(f, q, p, xi - U)) / (2 * h)
            g[k, j] = 0.5 * (dfa - 1j * dfb)
            g[j, k] = -np.conj(g[k, j])
    return g


def reduced_bracket_lie(f, h, q, p, xi, fd_step: float = 1e-5) -> float:
    """Evaluate the reduced Poisson bracket {f, h} at (q, p, xi).

    f and h are scalar callbacks f(q, p, xi) defined near the point; all
    gradients are central finite differences with relative step fd_step.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    fq, fp = grad_qp(f, q, p, xi, fd_step)
    hq, hp = grad_qp(h, q, p, xi, fd_step)
    fxi = grad_xi(f, q, p, xi, fd_step)
    hxi = grad_xi(h, q, p, xi, fd_step)
    canonical = float(fq @ hp - fp @ hq)
    spin = float(np.trace(xi @ (fxi @ hxi - hxi @ fxi)).real)
    return canonical + spin
