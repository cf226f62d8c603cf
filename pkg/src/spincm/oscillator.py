"""Unreduced matrix-oscillator phase spaces, their exact flow, and moment maps.

The three state types hold a point of the unreduced phase space:

* :class:`GHState` -- Hermitian pair (X, Y) plus an n x ell spin matrix zeta,
* :class:`BnState` -- off-diagonal blocks (x, y) of a 2n x 2n Hermitian pair,
  plus spin matrices zeta (n x ell1) and eta (n x ell2),
* :class:`LieState` -- traceless Hermitian pair (X, Y), no spin.

In the combined coordinate Z = omega*X - i*Y the oscillator flow is the
phase rotation Z -> exp(i*omega*t) Z with spin matrices unchanged, so the
flow here is evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import (complex_to_pairs, frob, haar_unitary, hermitize,
                      pairs_to_complex, row_norms)
from .errors import ConstraintViolation, DegenerateSpectrum

#: Relative spacing below which eigenvalues / gauge-slice positions count as
#: degenerate; scaled by max|q| at the point of use.
DEGENERACY_RTOL = 1e-8

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GHState:
    """Oscillator point (X, Y, zeta); X, Y are Hermitized on construction."""

    X: np.ndarray
    Y: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        X = hermitize(self.X)
        Y = hermitize(self.Y)
        zeta = np.asarray(self.zeta, dtype=complex)
        n = X.shape[0]
        if X.shape != (n, n) or Y.shape != (n, n) or zeta.shape[0] != n:
            raise ValueError("inconsistent GH state shapes")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def ell(self) -> int:
        return self.zeta.shape[1]


@dataclass(frozen=True)
class BnState:
    """Oscillator point (x, y, zeta, eta) in block form.

    Represents the 2n x 2n Hermitian matrices X = [[0, x], [x^dag, 0]] and
    likewise Y; x and y themselves are arbitrary complex n x n matrices.
    """

    x: np.ndarray
    y: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        y = np.asarray(self.y, dtype=complex)
        zeta = np.asarray(self.zeta, dtype=complex)
        eta = np.asarray(self.eta, dtype=complex)
        n = x.shape[0]
        if x.shape != (n, n) or y.shape != (n, n):
            raise ValueError("x and y must be square of equal size")
        if zeta.shape[0] != n or eta.shape[0] != n:
            raise ValueError("spin matrices must have n rows")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def ell1(self) -> int:
        return self.zeta.shape[1]

    @property
    def ell2(self) -> int:
        return self.eta.shape[1]


@dataclass(frozen=True)
class LieState:
    """Oscillator point (X, Y) with both matrices traceless Hermitian.

    Hermitization and trace removal absorb round-off from upstream
    arithmetic, mirroring the treatment of X, Y in :class:`GHState`.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = hermitize(self.X)
        Y = hermitize(self.Y)
        n = X.shape[0]
        if X.shape != (n, n) or Y.shape != (n, n):
            raise ValueError("inconsistent Lie state shapes")
        X = X - np.trace(X) / n * np.eye(n)
        Y = Y - np.trace(Y) / n * np.eye(n)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


UnreducedState = GHState | BnState | LieState


# ---------------------------------------------------------------------------
# oscillator coordinate and exact flow
# ---------------------------------------------------------------------------

def osc_coordinate(state: UnreducedState, omega: float) -> np.ndarray:
    """Z = omega*X - i*Y; for the B_n family this is the full 2n x 2n matrix."""
    if isinstance(state, BnState):
        n = state.n
        Z = np.zeros((2 * n, 2 * n), dtype=complex)
        Z[:n, n:] = omega * state.x - 1j * state.y
        Z[n:, :n] = omega * state.x.conj().T - 1j * state.y.conj().T
        return Z
    return omega * state.X - 1j * state.Y


def xy_from_osc(Z: np.ndarray, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Invert Z = omega*X - i*Y: X = (Z + Z^dag)/(2 omega), Y = i(Z - Z^dag)/2."""
    X = (Z + Z.conj().T) / (2.0 * omega)
    Y = 0.5j * (Z - Z.conj().T)
    return X, Y


def exact_flow(state: UnreducedState, t: float, omega: float) -> UnreducedState:
    """Closed-form oscillator evolution by time t; spins are constants of motion."""
    ph = np.exp(1j * omega * t)
    if isinstance(state, BnState):
        # Block (1,2) of Z carries omega*x - i*y; block (2,1) dagger-conjugate
        # combination omega*x + i*y rotates with the opposite phase.
        zp = omega * state.x - 1j * state.y
        zm = omega * state.x + 1j * state.y
        zp = ph * zp
        zm = np.conj(ph) * zm
        xt = (zp + zm) / (2.0 * omega)
        yt = 0.5j * (zp - zm)
        return BnState(x=xt, y=yt, zeta=state.zeta, eta=state.eta)
    Z = ph * osc_coordinate(state, omega)
    X, Y = xy_from_osc(Z, omega)
    if isinstance(state, GHState):
        return GHState(X=X, Y=Y, zeta=state.zeta)
    return LieState(X=X, Y=Y)


def energy(state: UnreducedState, omega: float) -> float:
    """Oscillator energy (1/2) tr(Y^2) + (1/2) omega^2 tr(X^2).

    For the B_n family the traces run over the full 2n x 2n blocks, i.e.
    tr(X^2) = 2 tr(x x^dag).
    """
    if isinstance(state, BnState):
        return float(
            np.trace(state.y @ state.y.conj().T).real
            + omega**2 * np.trace(state.x @ state.x.conj().T).real
        )
    return float(
        0.5 * np.trace(state.Y @ state.Y).real
        + 0.5 * omega**2 * np.trace(state.X @ state.X).real
    )


# ---------------------------------------------------------------------------
# moment maps
# ---------------------------------------------------------------------------

def moment_map_gh(state: GHState) -> np.ndarray:
    """[X, Y] + i zeta zeta^dag; anti-Hermitian by construction."""
    return (state.X @ state.Y - state.Y @ state.X
            + 1j * state.zeta @ state.zeta.conj().T)


def moment_map_bn(state: BnState) -> tuple[np.ndarray, np.ndarray]:
    """The two diagonal blocks of the block-commutator moment map:

    J1 = x y^dag - y x^dag + i zeta zeta^dag,
    J2 = x^dag y - y^dag x + i eta eta^dag.
    """
    x, y = state.x, state.y
    J1 = x @ y.conj().T - y @ x.conj().T + 1j * state.zeta @ state.zeta.conj().T
    J2 = x.conj().T @ y - y.conj().T @ x + 1j * state.eta @ state.eta.conj().T
    return J1, J2


def moment_map_lie(state: LieState) -> np.ndarray:
    """[X, Y] for the spinless Lie-algebraic family."""
    return state.X @ state.Y - state.Y @ state.X


def moment_residual(state: UnreducedState, params) -> float:
    """Frobenius distance of the moment map from its target level.

    The Lie family reduces at the zero orbit-type level, so no target is
    subtracted there and the residual is meaningless; returns 0.0.
    """
    from .params import Family  # local import to avoid cycle at module load

    if isinstance(state, GHState):
        target = 1j * params.c * np.eye(state.n)
        return frob(moment_map_gh(state) - target)
    if isinstance(state, BnState):
        J1, J2 = moment_map_bn(state)
        t1 = 1j * params.c1 * np.eye(state.n)
        t2 = 1j * params.c2 * np.eye(state.n)
        return max(frob(J1 - t1), frob(J2 - t2))
    if params.family is not Family.LIE_A:
        raise ValueError("state type does not match params family")
    return 0.0


# ---------------------------------------------------------------------------
# gauge-slice constructors
# ---------------------------------------------------------------------------

def _check_gaps(values: np.ndarray, tol: float | None, scale: float,
                also_nonzero: bool = False, also_sums: bool = False):
    if tol is None:
        tol = DEGENERACY_RTOL * max(scale, 1e-300)
    v = np.asarray(values, dtype=float)
    n = v.size
    for j in range(n):
        if also_nonzero and abs(v[j]) <= tol:
            raise DegenerateSpectrum(f"position q_{j+1} = {v[j]} is too close to zero")
        for k in range(j + 1, n):
            if abs(v[j] - v[k]) <= tol:
                raise DegenerateSpectrum(
                    f"positions q_{j+1} = {v[j]} and q_{k+1} = {v[k]} nearly collide")
            if also_sums and abs(v[j] + v[k]) <= tol:
                raise DegenerateSpectrum(
                    f"positions q_{j+1} and q_{k+1} nearly satisfy q_j + q_k = 0")


def build_slice_Y(q, p, zeta, c: float, gap_tol: float | None = None,
                  constraint_rtol: float = 1e-8) -> GHState:
    """Embed gauge-slice data (q, p, zeta) as an oscillator state.

    X = diag(q) and Y carries the slice momentum

        Y_jk = p_j delta_jk - i (1 - delta_jk) zeta_j zeta_k^dag / (q_j - q_k),

    which is exactly what the moment-map constraint J = i c 1 forces once X
    is diagonal.  Requires pairwise distinct q and |zeta_j|^2 = c per row.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    zeta = np.asarray(zeta, dtype=complex)
    n = q.size
    _check_gaps(q, gap_tol, float(np.max(np.abs(q))) if n else 0.0)
    norms2 = row_norms(zeta) ** 2
    if np.any(np.abs(norms2 - c) > constraint_rtol * max(abs(c), 1.0)):
        raise ConstraintViolation(
            f"spin row norms^2 {norms2} deviate from the moment level c = {c}")
    G = zeta @ zeta.conj().T
    Y = np.diag(p).astype(complex)
    dq = q[:, None] - q[None, :]
    np.fill_diagonal(dq, 1.0)
    off = -1j * G / dq
    np.fill_diagonal(off, 0.0)
    Y = Y + off
    return GHState(X=np.diag(q).astype(complex), Y=Y, zeta=zeta)


def build_slice_y_bn(q, p, zeta, eta, c1: float, c2: float,
                     gap_tol: float | None = None,
                     constraint_rtol: float = 1e-8) -> BnState:
    """Embed B_n gauge-slice data as an oscillator state.

    With x = diag(q)/sqrt(2), nonzero pairwise-distinct |q_j| and
    q_j + q_k != 0, the moment-map constraint (i c1 1, i c2 1) forces the
    row sums zeta_j zeta_j^dag + eta_j eta_j^dag = c1 + c2 and determines

        y_jj = (p_j + i (c2 - eta_j eta_j^dag) / q_j) / sqrt(2),
        y_jk = -(i/sqrt(2)) (zeta_j zeta_k^dag + eta_j eta_k^dag)/(q_j - q_k)
               +(i/sqrt(2)) (zeta_j zeta_k^dag - eta_j eta_k^dag)/(q_j + q_k).
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    n = q.size
    c = c1 + c2
    _check_gaps(q, gap_tol, float(np.max(np.abs(q))) if n else 0.0,
                also_nonzero=True, also_sums=True)
    rows = row_norms(zeta) ** 2 + row_norms(eta) ** 2
    if np.any(np.abs(rows - c) > constraint_rtol * max(abs(c), 1.0)):
        raise ConstraintViolation(
            f"spin row sums {rows} deviate from c1 + c2 = {c}")
    Gz = zeta @ zeta.conj().T
    Ge = eta @ eta.conj().T
    dq = q[:, None] - q[None, :]
    sq = q[:, None] + q[None, :]
    np.fill_diagonal(dq, 1.0)
    y = (-1j / _SQRT2) * (Gz + Ge) / dq + (1j / _SQRT2) * (Gz - Ge) / sq
    np.fill_diagonal(y, 0.0)
    y = y + np.diag((p + 1j * (c2 - np.diag(Ge).real) / q) / _SQRT2)
    return BnState(x=np.diag(q).astype(complex) / _SQRT2, y=y,
                   zeta=zeta, eta=eta)


def build_slice_lie(q, p, xi, gap_tol: float | None = None) -> LieState:
    """Embed Lie-family slice data: X = diag(q), Y = diag(p) - r(q) xi."""
    from .rootdata import parametrize_Y_lie  # local import to avoid cycle

    q = np.asarray(q, dtype=float)
    Y = parametrize_Y_lie(q, p, xi, gap_tol=gap_tol)
    return LieState(X=np.diag(q).astype(complex), Y=Y)


# ---------------------------------------------------------------------------
# gauge randomization
# ---------------------------------------------------------------------------

def randomize_gauge(state: UnreducedState, seed=None) -> UnreducedState:
    """Apply a Haar-random symmetry-group element to the state.

    GH / Lie: conjugate (X, Y) by g in U(n) (and map zeta -> g zeta).
    B_n: act with a block pair (g1, g2): x -> g1 x g2^dag during which
    zeta -> g1 zeta and eta -> g2 eta.  Central moment values are fixed by
    conjugation, so constraint-surface membership is preserved exactly.
    """
    rng = np.random.default_rng(seed)
    if isinstance(state, BnState):
        g1 = haar_unitary(state.n, rng)
        g2 = haar_unitary(state.n, rng)
        return BnState(
            x=g1 @ state.x @ g2.conj().T,
            y=g1 @ state.y @ g2.conj().T,
            zeta=g1 @ state.zeta,
            eta=g2 @ state.eta,
        )
    g = haar_unitary(state.n, rng)
    gd = g.conj().T
    if isinstance(state, GHState):
        return GHState(X=g @ state.X @ gd, Y=g @ state.Y @ gd,
                       zeta=g @ state.zeta)
    return LieState(X=g @ state.X @ gd, Y=g @ state.Y @ gd)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def state_to_dict(state: UnreducedState) -> dict:
    if isinstance(state, GHState):
        return {"family": "GibbonsHermsen",
                "X": complex_to_pairs(state.X),
                "Y": complex_to_pairs(state.Y),
                "zeta": complex_to_pairs(state.zeta)}
    if isinstance(state, BnState):
        return {"family": "BnType",
                "x": complex_to_pairs(state.x),
                "y": complex_to_pairs(state.y),
                "zeta": complex_to_pairs(state.zeta),
                "eta": complex_to_pairs(state.eta)}
    return {"family": "LieA",
            "X": complex_to_pairs(state.X),
            "Y": complex_to_pairs(state.Y)}


def state_from_dict(doc: dict, hermitian_rtol: float = 1e-12) -> UnreducedState:
    """Rebuild a state from its JSON document, re-validating invariants."""
    family = doc.get("family")
    if family == "GibbonsHermsen":
        X = pairs_to_complex(doc["X"])
        Y = pairs_to_complex(doc["Y"])
        _require_hermitian(X, "X", hermitian_rtol)
        _require_hermitian(Y, "Y", hermitian_rtol)
        return GHState(X=X, Y=Y, zeta=pairs_to_complex(doc["zeta"]))
    if family == "BnType":
        return BnState(x=pairs_to_complex(doc["x"]), y=pairs_to_complex(doc["y"]),
                       zeta=pairs_to_complex(doc["zeta"]),
                       eta=pairs_to_complex(doc["eta"]))
    if family == "LieA":
        X = pairs_to_complex(doc["X"])
        Y = pairs_to_complex(doc["Y"])
        _require_hermitian(X, "X", hermitian_rtol)
        _require_hermitian(Y, "Y", hermitian_rtol)
        return LieState(X=X, Y=Y)
    raise ValueError(f"unknown state family {family!r}")


def _require_hermitian(a: np.ndarray, name: str, rtol: float):
    scale = max(1.0, frob(a))
    if frob(a - a.conj().T) > rtol * scale:
        raise ValueError(f"matrix {name} is not Hermitian within tolerance")
