"""Gauge fixing: canonical reduced coordinates from constraint-surface points,
and gauge-invariant distances between reduced states.

Projection diagonalizes the position matrix (eigendecomposition for the GH
and Lie families, SVD for B_n), sorts the spectrum into the open Weyl
chamber, and removes the residual torus freedom by a spin-row phase
convention: the largest-magnitude component of each row is made real and
positive (lowest index wins among magnitudes equal within 1e-12 relative).

Because any smooth section of the residual torus would do, cross-checks
between independently produced reduced states must go through
:func:`reduced_distance`, which compares torus invariants, never raw
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import complex_to_pairs, frob, pairs_to_complex, row_norms
from .errors import (ConstraintViolation, DegenerateSpectrum,
                     DimensionMismatch, PhaseFixFailure)
from .oscillator import (DEGENERACY_RTOL, BnState, GHState, LieState,
                         build_slice_Y, build_slice_y_bn, build_slice_lie,
                         moment_map_bn, moment_map_gh)
from .params import Family
from .rootdata import xi_from_Y

_SQRT2 = np.sqrt(2.0)

#: Relative tolerance (vs the moment level) for accepting an input state as
#: lying on the constraint surface.
CONSTRAINT_RTOL = 1e-8

#: Tolerance for the reduced-state row-norm invariants; slightly looser than
#: fresh-construction accuracy so that integrated states (constraint drift
#: up to ~1e-9 over a period) remain storable.
ROW_NORM_RTOL = 1e-8


# ---------------------------------------------------------------------------
# reduced state types
# ---------------------------------------------------------------------------

def _check_chamber(q: np.ndarray, positive: bool):
    if np.any(np.diff(q) >= 0):
        raise ValueError("chamber ordering violated: q must be strictly decreasing")
    if positive and q[-1] <= 0:
        raise ValueError("chamber requires q_n > 0")


@dataclass(frozen=True)
class ReducedGH:
    """Canonical reduced point (q, p, zeta): q strictly decreasing,
    |zeta_j|^2 = c, rows phase-fixed."""

    q: np.ndarray
    p: np.ndarray
    zeta: np.ndarray
    c: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        zeta = np.asarray(self.zeta, dtype=complex)
        _check_chamber(q, positive=False)
        norms2 = row_norms(zeta) ** 2
        if np.any(np.abs(norms2 - self.c) > ROW_NORM_RTOL * max(abs(self.c), 1.0)):
            raise ConstraintViolation("spin row norms^2 deviate from c")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class ReducedBn:
    """Canonical reduced point (q, p, zeta, eta): q strictly decreasing and
    positive, joint row sums = c1 + c2, joint row phases fixed."""

    q: np.ndarray
    p: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    c1: float
    c2: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        zeta = np.asarray(self.zeta, dtype=complex)
        eta = np.asarray(self.eta, dtype=complex)
        _check_chamber(q, positive=True)
        c = self.c1 + self.c2
        rows = row_norms(zeta) ** 2 + row_norms(eta) ** 2
        if np.any(np.abs(rows - c) > ROW_NORM_RTOL * max(abs(c), 1.0)):
            raise ConstraintViolation("joint spin row sums deviate from c1 + c2")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class ReducedLie:
    """Reduced point (q, p, xi) of the Lie-algebraic family: q strictly
    decreasing, xi anti-Hermitian with zero diagonal (defined modulo
    conjugation by diagonal phases)."""

    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        xi = np.asarray(self.xi, dtype=complex)
        _check_chamber(q, positive=False)
        scale = max(1.0, float(np.max(np.abs(xi))) if xi.size else 0.0)
        if frob(xi + xi.conj().T) > 1e-10 * scale or np.any(np.abs(np.diag(xi)) > 1e-10 * scale):
            raise ValueError("xi must be anti-Hermitian with zero diagonal")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.q.size


ReducedState = ReducedGH | ReducedBn | ReducedLie


# ---------------------------------------------------------------------------
# phase fixing
# ---------------------------------------------------------------------------

def _dominant_index(row: np.ndarray) -> int:
    mags = np.abs(row)
    m = float(np.max(mags))
    if m == 0.0:
        raise PhaseFixFailure("cannot phase-fix a zero spin row")
    candidates = np.nonzero(m - mags <= 1e-12 * m)[0]
    return int(candidates[0])


def phase_fix_rows(*blocks: np.ndarray) -> tuple[np.ndarray, ...]:
    """Rotate each (joint) row by a common phase making its largest-magnitude
    component real positive.  Multiple blocks are concatenated per row and
    share one phase (the residual torus acts jointly)."""
    joined = np.concatenate(blocks, axis=1) if len(blocks) > 1 else blocks[0]
    out = [b.astype(complex).copy() for b in blocks]
    for j in range(joined.shape[0]):
        idx = _dominant_index(joined[j])
        z = joined[j, idx]
        ph = z / abs(z)
        for b in out:
            b[j] = b[j] / ph
    return tuple(out)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def _slice_consistency(actual: np.ndarray, expected: np.ndarray, what: str,
                       rtol: float = 1e-8):
    scale = max(1.0, frob(expected))
    if frob(actual - expected) > rtol * scale:
        raise ConstraintViolation(
            f"{what} does not match the gauge-slice form; "
            "input is off the constraint surface")


def project_gh(state: GHState, c: float, gap_tol: float | None = None) -> ReducedGH:
    """Gauge-fix a constraint-surface point to canonical reduced coordinates.

    Diagonalizes X with eigenvalues sorted strictly decreasing, transports Y
    and zeta to that frame, and phase-fixes the spin rows.  The transported
    momentum must reproduce the slice form of Y to 1e-8, which doubles as
    the constraint-surface check.
    """
    target = 1j * c * np.eye(state.n)
    if frob(moment_map_gh(state) - target) > CONSTRAINT_RTOL * max(abs(c), 1.0) * state.n:
        raise ConstraintViolation("moment map differs from i c 1")
    lam, U = np.linalg.eigh(state.X)
    order = np.argsort(lam)[::-1]
    q = lam[order]
    U = U[:, order]
    tol = gap_tol if gap_tol is not None else DEGENERACY_RTOL * max(float(np.max(np.abs(q))), 1e-300)
    if np.any(-np.diff(q) <= tol):
        raise DegenerateSpectrum("position matrix has (nearly) repeated eigenvalues")
    Yp = U.conj().T @ state.Y @ U
    zp = U.conj().T @ state.zeta
    p = np.diag(Yp).real.copy()
    expected = build_slice_Y(q, p, zp, c).Y
    _slice_consistency(Yp, expected, "transported momentum matrix")
    (zfixed,) = phase_fix_rows(zp)
    return ReducedGH(q=q, p=p, zeta=zfixed, c=c)


def project_bn(state: BnState, c1: float, c2: float,
               gap_tol: float | None = None) -> ReducedBn:
    """Gauge-fix a B_n constraint-surface point via singular value
    decomposition of x; singular values must be distinct and nonzero."""
    n = state.n
    c = c1 + c2
    J1, J2 = moment_map_bn(state)
    lvl = max(abs(c1), abs(c2), 1.0)
    if (frob(J1 - 1j * c1 * np.eye(n)) > CONSTRAINT_RTOL * lvl * n
            or frob(J2 - 1j * c2 * np.eye(n)) > CONSTRAINT_RTOL * lvl * n):
        raise ConstraintViolation("moment map differs from (i c1 1, i c2 1)")
    u, s, vh = np.linalg.svd(state.x)
    q = s * _SQRT2  # descending and non-negative by SVD convention
    tol = gap_tol if gap_tol is not None else DEGENERACY_RTOL * max(float(np.max(np.abs(q))), 1e-300)
    if q[-1] <= tol or np.any(-np.diff(q) <= tol):
        raise DegenerateSpectrum("singular values are (nearly) repeated or zero")
    v = vh.conj().T
    yp = u.conj().T @ state.y @ v
    zp = u.conj().T @ state.zeta
    ep = v.conj().T @ state.eta
    p = _SQRT2 * np.diag(yp).real.copy()
    expected = build_slice_y_bn(q, p, zp, ep, c1, c2).y
    _slice_consistency(yp, expected, "transported momentum matrix")
    zfixed, efixed = phase_fix_rows(zp, ep)
    return ReducedBn(q=q, p=p, zeta=zfixed, eta=efixed, c1=c1, c2=c2)


def project_lie(state: LieState, gap_tol: float | None = None) -> ReducedLie:
    """Gauge-fix a Lie-family point: diagonalize X, read p from the diagonal
    of the transported Y and xi from its off-diagonal part.

    The residual torus is fixed by making the superdiagonal entries of xi
    real non-negative where they are nonzero (best effort; distances between
    reduced Lie states minimize over the torus anyway).
    """
    lam, U = np.linalg.eigh(state.X)
    order = np.argsort(lam)[::-1]
    q = lam[order]
    U = U[:, order]
    tol = gap_tol if gap_tol is not None else DEGENERACY_RTOL * max(float(np.max(np.abs(q))), 1e-300)
    if np.any(-np.diff(q) <= tol):
        raise DegenerateSpectrum("position matrix has (nearly) repeated eigenvalues")
    Yp = U.conj().T @ state.Y @ U
    p = np.diag(Yp).real.copy()
    xi = xi_from_Y(q, Yp)
    xi = _phase_fix_xi(xi)
    return ReducedLie(q=q, p=p, xi=xi)


def _phase_fix_xi(xi: np.ndarray) -> np.ndarray:
    """Conjugate by diagonal phases so superdiagonal entries are real >= 0."""
    n = xi.shape[0]
    theta = np.zeros(n)
    for j in range(n - 1):
        z = xi[j, j + 1] * np.exp(1j * (theta[j]))
        # choose theta_{j+1} so that e^{i(theta_j - theta_{j+1})} xi_{j,j+1} >= 0
        if abs(z) > 1e-300:
            theta[j + 1] = np.angle(z)
        else:
            theta[j + 1] = theta[j]
    ph = np.exp(1j * theta)
    return (ph[:, None] * xi) * np.conj(ph)[None, :]


def embed(reduced: ReducedState, params):
    """Inverse of projection: rebuild the gauge-slice oscillator state."""
    if isinstance(reduced, ReducedGH):
        return build_slice_Y(reduced.q, reduced.p, reduced.zeta, params.c)
    if isinstance(reduced, ReducedBn):
        return build_slice_y_bn(reduced.q, reduced.p, reduced.zeta, reduced.eta,
                                params.c1, params.c2)
    return build_slice_lie(reduced.q, reduced.p, reduced.xi)


def project(state, params) -> ReducedState:
    """Family dispatcher for the projections above."""
    if isinstance(state, GHState):
        if params.family is not Family.GIBBONS_HERMSEN:
            raise DimensionMismatch("state/params family mismatch")
        return project_gh(state, params.c)
    if isinstance(state, BnState):
        return project_bn(state, params.c1, params.c2)
    return project_lie(state)


# ---------------------------------------------------------------------------
# gauge-invariant distance
# ---------------------------------------------------------------------------

def _projector_distance(rows_a: np.ndarray, rows_b: np.ndarray) -> float:
    """Max over rows of the Frobenius distance between the rank-one
    projectors zeta_j^dag zeta_j; blind to row phases."""
    d = 0.0
    for j in range(rows_a.shape[0]):
        Pa = np.outer(rows_a[j].conj(), rows_a[j])
        Pb = np.outer(rows_b[j].conj(), rows_b[j])
        d = max(d, frob(Pa - Pb))
    return d


def _torus_orbit_distance(xi_a: np.ndarray, xi_b: np.ndarray) -> float:
    """min over diagonal phases z of ||z xi_a z^-1 - xi_b||_F.

    Maximizing f(theta) = sum_{j!=k} Re(e^{i(theta_j - theta_k)} w_jk) with
    w_jk = (xi_a)_jk conj((xi_b)_jk) is a tiny phase-synchronization
    problem; coordinate ascent from an eigenvector start plus a zero start
    is reliable at the sizes used here (n <= 4 in practice).
    """
    n = xi_a.shape[0]
    if n < 2:
        return 0.0
    w = xi_a * np.conj(xi_b)
    base = frob(xi_a) ** 2 + frob(xi_b) ** 2

    def value(theta):
        ph = np.exp(1j * theta)
        return float(np.sum((ph[:, None] * w * np.conj(ph)[None, :]).real)
                     - np.sum(w.diagonal().real))

    def ascend(theta):
        for _ in range(200):
            moved = 0.0
            for j in range(n):
                g = 0.0 + 0.0j
                for k in range(n):
                    if k != j:
                        g += w[j, k] * np.exp(-1j * theta[k])
                if abs(g) > 1e-300:
                    new = -np.angle(g)
                    moved = max(moved, abs(np.angle(np.exp(1j * (new - theta[j])))))
                    theta[j] = new
            if moved < 1e-14:
                break
        return theta

    starts = [np.zeros(n)]
    # eigenvector relaxation of the synchronization problem
    W = w.copy()
    np.fill_diagonal(W, 0.0)
    Wh = 0.5 * (W + W.conj().T)
    vals, vecs = np.linalg.eigh(Wh)
    lead = vecs[:, -1]
    if np.all(np.abs(lead) > 1e-12):
        starts.append(np.angle(lead))
    best = -np.inf
    for th in starts:
        best = max(best, value(ascend(th.copy())))
    return float(np.sqrt(max(base - 2.0 * best, 0.0)))


def reduced_distance(a: ReducedState, b: ReducedState) -> float:
    """Gauge-invariant metric on the reduced phase space.

    Max of the sup-norms of q and p differences and a phase-blind spin
    distance (row projectors for GH, joint-row projectors for B_n, the
    torus-orbit Frobenius distance for the Lie family).  Zero exactly when
    the two states coincide as points of the quotient.
    """
    if type(a) is not type(b):
        raise DimensionMismatch("states belong to different families")
    if a.q.size != b.q.size:
        raise DimensionMismatch("states have different particle numbers")
    d = max(float(np.max(np.abs(a.q - b.q))), float(np.max(np.abs(a.p - b.p))))
    if isinstance(a, ReducedGH):
        if a.zeta.shape != b.zeta.shape:
            raise DimensionMismatch("spin dimensions differ")
        d = max(d, _projector_distance(a.zeta, b.zeta))
    elif isinstance(a, ReducedBn):
        if a.zeta.shape != b.zeta.shape or a.eta.shape != b.eta.shape:
            raise DimensionMismatch("spin dimensions differ")
        d = max(d, _projector_distance(np.concatenate([a.zeta, a.eta], axis=1),
                                       np.concatenate([b.zeta, b.eta], axis=1)))
    else:
        if a.xi.shape != b.xi.shape:
            raise DimensionMismatch("spin dimensions differ")
        d = max(d, _torus_orbit_distance(a.xi, b.xi))
    return d


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def reduced_to_dict(state: ReducedState) -> dict:
    if isinstance(state, ReducedGH):
        return {"family": "GibbonsHermsen", "q": state.q.tolist(),
                "p": state.p.tolist(), "zeta": complex_to_pairs(state.zeta),
                "c": state.c}
    if isinstance(state, ReducedBn):
        return {"family": "BnType", "q": state.q.tolist(), "p": state.p.tolist(),
                "zeta": complex_to_pairs(state.zeta),
                "eta": complex_to_pairs(state.eta),
                "c1": state.c1, "c2": state.c2}
    return {"family": "LieA", "q": state.q.tolist(), "p": state.p.tolist(),
            "xi": complex_to_pairs(state.xi)}


def reduced_from_dict(doc: dict) -> ReducedState:
    family = doc.get("family")
    if family == "GibbonsHermsen":
        return ReducedGH(q=np.asarray(doc["q"], float), p=np.asarray(doc["p"], float),
                         zeta=pairs_to_complex(doc["zeta"]), c=float(doc["c"]))
    if family == "BnType":
        return ReducedBn(q=np.asarray(doc["q"], float), p=np.asarray(doc["p"], float),
                         zeta=pairs_to_complex(doc["zeta"]),
                         eta=pairs_to_complex(doc["eta"]),
                         c1=float(doc["c1"]), c2=float(doc["c2"]))
    if family == "LieA":
        return ReducedLie(q=np.asarray(doc["q"], float), p=np.asarray(doc["p"], float),
                          xi=pairs_to_complex(doc["xi"]))
    raise ValueError(f"unknown reduced-state family {family!r}")


def spin_components(state: ReducedState) -> np.ndarray:
    """Flat real vector of spin components, re/im interleaved row-major.

    GH: zeta rows; B_n: zeta rows then eta rows; Lie: upper-triangle xi
    entries row-major.  This fixes the CSV column layout.
    """
    if isinstance(state, ReducedGH):
        flat = state.zeta.ravel()
    elif isinstance(state, ReducedBn):
        flat = np.concatenate([state.zeta.ravel(), state.eta.ravel()])
    else:
        n = state.n
        flat = np.array([state.xi[j, k] for j in range(n) for k in range(j + 1, n)],
                        dtype=complex)
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def spin_column_names(family: Family, n: int, ell: int | None = None,
                      ell1: int | None = None, ell2: int | None = None) -> list[str]:
    """Header names matching :func:`spin_components` order."""
    names = []
    if family is Family.GIBBONS_HERMSEN:
        for j in range(n):
            for a in range(ell):
                names += [f"zeta_{j+1}_{a+1}_re", f"zeta_{j+1}_{a+1}_im"]
    elif family is Family.BN_TYPE:
        for j in range(n):
            for a in range(ell1):
                names += [f"zeta_{j+1}_{a+1}_re", f"zeta_{j+1}_{a+1}_im"]
        for j in range(n):
            for a in range(ell2):
                names += [f"eta_{j+1}_{a+1}_re", f"eta_{j+1}_{a+1}_im"]
    else:
        for j in range(n):
            for k in range(j + 1, n):
                names += [f"xi_{j+1}_{k+1}_re", f"xi_{j+1}_{k+1}_im"]
    return names
