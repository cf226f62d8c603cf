"""First integrals as balanced trace words, and numerical certification of
maximal superintegrability by the rank of their differentials.

A word is a product of letter matrices built from an unreduced state:

    Z     oscillator coordinate omega*X - i*Y (2n x 2n block form for B_n),
    Zd    its conjugate transpose,
    S     spin Gram block zeta zeta^dag  (column-resolved variant S[a,b] =
          zeta_a zeta_b^dag over single columns),
    S2    second spin block eta eta^dag (B_n only), resolved variant alike,
    C     cross block zeta_a eta_b^dag embedded off-diagonally (B_n only),
    Cd    its conjugate transpose.

Under the oscillator flow Z picks up a phase while all spin letters are
inert, so the real and imaginary parts of tr(word) are first integrals
exactly when the word is balanced: count(Z) = count(Zd).  All letters
conjugate equivariantly under the symmetry group, so these functions descend
to the reduced phase space.

The aggregate letters S, S2 see the spin variables only through their Gram
matrix, which is blind to the global rotation of the spin frame (a symmetry
of the whole model commuting with the flow).  Saturating the maximal rank
dim - 1 therefore requires the column-resolved letters, and for B_n the
cross letters, which detect the relative phase between the two spin blocks.
The aggregate-only pools stall at a smaller, reproducible rank.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankUnstable, UnbalancedWord
from .gauge import ReducedBn, ReducedGH, ReducedState, embed
from .oscillator import BnState, GHState, LieState, UnreducedState, osc_coordinate
from .params import Family, ModelParams


@dataclass(frozen=True, order=True)
class Letter:
    """One alphabet symbol; a, b are column indices for resolved spin letters."""

    kind: str
    a: int = -1
    b: int = -1

    def dagger(self) -> "Letter":
        if self.kind == "Z":
            return Letter("Zd")
        if self.kind == "Zd":
            return Letter("Z")
        if self.kind in ("S", "S2"):
            return Letter(self.kind, self.b, self.a) if self.a >= 0 else self
        if self.kind == "C":
            return Letter("Cd", self.a, self.b)
        if self.kind == "Cd":
            return Letter("C", self.a, self.b)
        raise ValueError(f"unknown letter kind {self.kind!r}")

    def __str__(self):
        if self.a < 0:
            return self.kind
        return f"{self.kind}[{self.a},{self.b}]"


@dataclass(frozen=True)
class InvariantWord:
    """A balanced trace word together with the real part taken of its trace."""

    letters: tuple[Letter, ...]
    part: str = "re"  # "re" | "im"

    def __post_init__(self):
        if not self.letters:
            raise UnbalancedWord("words must be nonempty")
        if self.part not in ("re", "im"):
            raise ValueError("part must be 're' or 'im'")
        object.__setattr__(self, "letters", tuple(self.letters))

    @property
    def balanced(self) -> bool:
        kinds = [l.kind for l in self.letters]
        return kinds.count("Z") == kinds.count("Zd")

    def __str__(self):
        return self.part.capitalize() + " tr(" + " ".join(map(str, self.letters)) + ")"


# ---------------------------------------------------------------------------
# alphabets and letter matrices
# ---------------------------------------------------------------------------

def alphabet(params: ModelParams, resolved: bool = True) -> list[Letter]:
    """Letters available for the given family.

    With ``resolved`` the spin letters are per-column outer products (plus
    the B_n cross letters); otherwise only the aggregate Gram letters of the
    base alphabet are used.
    """
    letters = [Letter("Z"), Letter("Zd")]
    if params.family is Family.GIBBONS_HERMSEN:
        if resolved:
            letters += [Letter("S", a, b)
                        for a in range(params.ell) for b in range(params.ell)]
        else:
            letters.append(Letter("S"))
    elif params.family is Family.BN_TYPE:
        if resolved:
            letters += [Letter("S", a, b)
                        for a in range(params.ell1) for b in range(params.ell1)]
            letters += [Letter("S2", a, b)
                        for a in range(params.ell2) for b in range(params.ell2)]
            letters += [Letter(k, a, b) for k in ("C", "Cd")
                        for a in range(params.ell1) for b in range(params.ell2)]
        else:
            letters.append(Letter("S"))
            if params.ell2 > 0:
                letters.append(Letter("S2"))
    return letters


def letter_matrices(state: UnreducedState, omega: float,
                    letters) -> dict[Letter, np.ndarray]:
    """Evaluate each distinct letter at the state."""
    out: dict[Letter, np.ndarray] = {}
    Z = osc_coordinate(state, omega)
    for l in set(letters):
        if l.kind == "Z":
            out[l] = Z
        elif l.kind == "Zd":
            out[l] = Z.conj().T
        else:
            out[l] = _spin_letter(state, l)
    return out


def _spin_letter(state: UnreducedState, l: Letter) -> np.ndarray:
    if isinstance(state, LieState):
        raise DimensionMismatch("the Lie family has no spin letters")
    if isinstance(state, GHState):
        if l.kind != "S":
            raise DimensionMismatch(f"letter {l} undefined for the GH family")
        if l.a < 0:
            return state.zeta @ state.zeta.conj().T
        return np.outer(state.zeta[:, l.a], state.zeta[:, l.b].conj())
    n = state.n
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    if l.kind == "S":
        M[:n, :n] = (state.zeta @ state.zeta.conj().T if l.a < 0
                     else np.outer(state.zeta[:, l.a], state.zeta[:, l.b].conj()))
    elif l.kind == "S2":
        M[n:, n:] = (state.eta @ state.eta.conj().T if l.a < 0
                     else np.outer(state.eta[:, l.a], state.eta[:, l.b].conj()))
    elif l.kind == "C":
        M[:n, n:] = np.outer(state.zeta[:, l.a], state.eta[:, l.b].conj())
    elif l.kind == "Cd":
        M[n:, :n] = np.outer(state.eta[:, l.b], state.zeta[:, l.a].conj())
    else:
        raise ValueError(f"unknown letter kind {l.kind!r}")
    return M


def _trace_word(letters: tuple[Letter, ...], mats: dict[Letter, np.ndarray]) -> complex:
    M = mats[letters[0]]
    for l in letters[1:]:
        M = M @ mats[l]
    return complex(np.trace(M))


def invariant_value(word: InvariantWord, state: UnreducedState,
                    omega: float) -> float:
    """Re or Im of tr(product of letter matrices at the state)."""
    if not word.balanced:
        raise UnbalancedWord(f"word {word} has unequal Z / Zd counts")
    mats = letter_matrices(state, omega, word.letters)
    v = _trace_word(word.letters, mats)
    return v.real if word.part == "re" else v.imag


def word_trace(letters: tuple[Letter, ...], state: UnreducedState,
               omega: float) -> complex:
    """Complex trace of an arbitrary (possibly unbalanced) word; unbalanced
    traces oscillate under the flow and are useful as negative controls."""
    return _trace_word(tuple(letters), letter_matrices(state, omega, letters))


def conservation_check(word: InvariantWord, states, omega: float) -> float:
    """Max over the sampled states of |F(t) - F(0)|."""
    vals = [invariant_value(word, s, omega) for s in states]
    return float(np.max(np.abs(np.asarray(vals) - vals[0])))


def conservation_check_reduced(word: InvariantWord, trajectory,
                               params: ModelParams) -> float:
    """Conservation along a reduced trajectory, evaluated through the
    gauge-slice embedding."""
    return conservation_check(
        word, [embed(s, params) for s in trajectory.states], params.omega)


# ---------------------------------------------------------------------------
# pool generation
# ---------------------------------------------------------------------------

_BLOCK_MOVES = {"Z": ((0, 1), (1, 0)), "Zd": ((0, 1), (1, 0)),
                "C": ((0, 1),), "Cd": ((1, 0),),
                "S": ((0, 0),), "S2": ((1, 1),)}


def _block_reachable(letters: tuple[Letter, ...]) -> bool:
    """Whether a B_n word can have nonzero trace given the 2 x 2 block
    structure of its letters (off-diagonal letters must chain up)."""
    trans = np.eye(2, dtype=bool)
    for l in letters:
        m = np.zeros((2, 2), dtype=bool)
        for i, j in _BLOCK_MOVES[l.kind]:
            m[i, j] = True
        trans = trans @ m
    return bool(trans[0, 0] or trans[1, 1])


def _canonical_rotation(letters: tuple[Letter, ...]) -> tuple[Letter, ...]:
    return min(letters[i:] + letters[:i] for i in range(len(letters)))


def _revdag(letters: tuple[Letter, ...]) -> tuple[Letter, ...]:
    return tuple(l.dagger() for l in reversed(letters))


def generate_pool(max_len: int, letters, block_structure: bool = False,
                  include_im: bool = True) -> list[InvariantWord]:
    """Enumerate balanced words of length <= max_len over the alphabet.

    Words are deduplicated up to cyclic rotation (trace cyclicity) and up to
    the conjugate-transpose symmetry, which identifies Re parts and negates
    Im parts; words in a self-conjugate class have identically real traces,
    so only their Re part is emitted.  With ``block_structure`` (B_n),
    words whose block pattern forces a zero trace are dropped.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    letters = sorted(set(letters))
    seen: set[tuple[Letter, ...]] = set()
    pool: list[InvariantWord] = []
    for L in range(1, max_len + 1):
        for w in itertools.product(letters, repeat=L):
            kinds = [l.kind for l in w]
            if kinds.count("Z") != kinds.count("Zd"):
                continue
            canon = _canonical_rotation(w)
            if canon in seen:
                continue
            conj = _canonical_rotation(_revdag(canon))
            seen.add(canon)
            self_conjugate = conj == canon
            if not self_conjugate:
                if conj in seen:
                    continue  # the conjugate class was already emitted
                seen.add(conj)
            if block_structure and not _block_reachable(canon):
                continue
            pool.append(InvariantWord(letters=canon, part="re"))
            if include_im and not self_conjugate:
                pool.append(InvariantWord(letters=canon, part="im"))
    return pool


def generate_pool_for(params: ModelParams, max_len: int,
                      resolved: bool = True) -> list[InvariantWord]:
    return generate_pool(max_len, alphabet(params, resolved=resolved),
                         block_structure=params.family is Family.BN_TYPE)


# ---------------------------------------------------------------------------
# chart of the reduced space and numerical rank
# ---------------------------------------------------------------------------

def dim_reduced(params: ModelParams) -> int:
    """Real dimension of the reduced phase space."""
    if params.family is Family.GIBBONS_HERMSEN:
        return 2 * params.n * params.ell
    if params.family is Family.BN_TYPE:
        return 2 * params.n * (params.ell1 + params.ell2)
    # traceless q, p and the torus-reduced spin block
    return params.n * params.n - 1


def _row_complement_dirs(row: np.ndarray) -> list[np.ndarray]:
    """Real-orthonormal directions tangent to the fixed-norm sphere and
    transverse to the phase direction: {w, i w} over a complex orthonormal
    basis {w} of the Hermitian-orthogonal complement of the row."""
    ell = row.size
    nrm = np.linalg.norm(row)
    u = row / nrm
    basis = np.concatenate([u[:, None], np.eye(ell, dtype=complex)], axis=1)
    Q, _ = np.linalg.qr(basis)
    comp = Q[:, 1:]
    dirs = []
    for a in range(ell - 1):
        dirs.append(comp[:, a] * nrm)
        dirs.append(1j * comp[:, a] * nrm)
    return dirs


@dataclass(frozen=True)
class Chart:
    """Local coordinates of the reduced space at a GH / B_n point:
    (q, p, per-row spin parameters in the phase-transverse directions)."""

    point: ReducedState
    params: ModelParams
    dirs: list

    @property
    def dim(self) -> int:
        return len(self.dirs)

    def state_at(self, delta: np.ndarray) -> UnreducedState:
        st = self.point
        q = st.q.copy()
        p = st.p.copy()
        if isinstance(st, ReducedGH):
            rows = st.zeta.copy()
            target = np.sqrt(st.c)
        else:
            rows = np.concatenate([st.zeta, st.eta], axis=1)
            target = np.sqrt(st.c1 + st.c2)
        for (kind, payload), eps in zip(self.dirs, delta):
            if eps == 0.0:
                continue
            if kind == "q":
                q[payload] += eps
            elif kind == "p":
                p[payload] += eps
            else:
                j, d = payload
                u = rows[j] + eps * d
                rows[j] = target * u / np.linalg.norm(u)
        if isinstance(st, ReducedGH):
            red = ReducedGH(q=q, p=p, zeta=rows, c=st.c)
        else:
            l1 = st.zeta.shape[1]
            red = ReducedBn(q=q, p=p, zeta=rows[:, :l1], eta=rows[:, l1:],
                            c1=st.c1, c2=st.c2)
        return embed(red, self.params)


def build_chart(point: ReducedState, params: ModelParams) -> Chart:
    if isinstance(point, ReducedGH):
        rows = point.zeta
    elif isinstance(point, ReducedBn):
        rows = np.concatenate([point.zeta, point.eta], axis=1)
    else:
        raise DimensionMismatch("rank charts are defined for the GH and B_n families")
    n = point.n
    dirs: list = [("q", j) for j in range(n)] + [("p", j) for j in range(n)]
    for j in range(n):
        for d in _row_complement_dirs(rows[j]):
            dirs.append(("s", (j, d)))
    chart = Chart(point=point, params=params, dirs=dirs)
    if chart.dim != dim_reduced(params):
        raise RankUnstable(
            f"chart dimension {chart.dim} != reduced dimension {dim_reduced(params)}")
    return chart


@dataclass(frozen=True)
class RankReport:
    """Numerical rank of a pool of invariants at a reduced point."""

    rank: int
    singular_values: np.ndarray
    gap: float
    dim: int
    n_words: int
    n_rows_used: int
    svd_tol: float
    fd_step: float
    maximal: bool

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "singular_values": [float(s) for s in self.singular_values],
            "gap": self.gap if np.isfinite(self.gap) else None,
            "dim_reduced": self.dim,
            "n_words": self.n_words,
            "n_rows_used": self.n_rows_used,
            "svd_tol": self.svd_tol,
            "fd_step": self.fd_step,
            "maximal": self.maximal,
        }


#: Jacobian rows with gradient norm below this multiple of the word's value
#: scale are numerically constant functions (their content is pure
#: finite-difference noise, around 1e-9 relative) and are excluded.
ROW_DROP_RTOL = 1e-6

#: Minimum ratio between the singular values just above and just below the
#: rank cut; smaller gaps raise :class:`RankUnstable`.
MIN_GAP = 1e3


def rank_of_invariants(words, point: ReducedState, params: ModelParams,
                       fd_step: float = 1e-5, svd_tol: float = 1e-8,
                       require_gap: bool = True) -> RankReport:
    """Numerical rank of the differentials of the word invariants.

    The reduced point is embedded through the gauge slice, each invariant is
    composed with a chart of the reduced space (q, p and phase-transverse
    spin coordinates), and the Jacobian is assembled by central finite
    differences.  Rows are normalized; rows that are numerically constant
    are dropped.  The rank counts singular values >= svd_tol * largest, and
    can never exceed dim - 1 because the flow direction annihilates every
    invariant.
    """
    words = list(words)
    for w in words:
        if not w.balanced:
            raise UnbalancedWord(f"word {w} has unequal Z / Zd counts")
    chart = build_chart(point, params)
    dim = chart.dim
    omega = params.omega

    needed = sorted({l for w in words for l in w.letters})
    vals_plus = np.zeros((len(words), dim), dtype=complex)
    vals_minus = np.zeros((len(words), dim), dtype=complex)
    scale = np.zeros(len(words))
    for i in range(dim):
        for sgn, tgt in ((fd_step, vals_plus), (-fd_step, vals_minus)):
            delta = np.zeros(dim)
            delta[i] = sgn
            mats = letter_matrices(chart.state_at(delta), omega, needed)
            for wi, w in enumerate(words):
                v = _trace_word(w.letters, mats)
                tgt[wi, i] = v
                scale[wi] = max(scale[wi], abs(v))
    grads = (vals_plus - vals_minus) / (2.0 * fd_step)
    rows = np.vstack([g.real if w.part == "re" else g.imag
                      for g, w in zip(grads, words)])
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > ROW_DROP_RTOL * np.maximum(scale, 1.0)
    rows = rows[keep] / norms[keep][:, None]
    if rows.shape[0] == 0:
        return RankReport(rank=0, singular_values=np.zeros(0), gap=np.inf,
                          dim=dim, n_words=len(words), n_rows_used=0,
                          svd_tol=svd_tol, fd_step=fd_step, maximal=False)
    s = np.linalg.svd(rows, compute_uv=False)
    rank = int(np.sum(s >= svd_tol * s[0]))
    if rank > dim - 1:
        raise RankUnstable(
            f"computed rank {rank} exceeds dim - 1 = {dim - 1}; the flow "
            "direction must lie in the kernel of every invariant")
    gap = float(s[rank - 1] / s[rank]) if rank < s.size else float("inf")
    if require_gap and rank < s.size and gap < MIN_GAP:
        raise RankUnstable(
            f"no clear spectral gap at the rank cut (gap = {gap:.2e})")
    return RankReport(rank=rank, singular_values=s, gap=gap, dim=dim,
                      n_words=len(words), n_rows_used=int(rows.shape[0]),
                      svd_tol=svd_tol, fd_step=fd_step,
                      maximal=rank == dim - 1)


@dataclass(frozen=True)
class SaturationResult:
    report: RankReport
    history: tuple[tuple[int, int], ...]  # (max_len, rank)
    saturated: bool
    max_len: int

    def to_dict(self) -> dict:
        return {
            "saturated": self.saturated,
            "max_len": self.max_len,
            "history": [list(h) for h in self.history],
            **self.report.to_dict(),
        }


def saturate_rank(point: ReducedState, params: ModelParams,
                  resolved: bool = True, max_len_cap: int = 6,
                  fd_step: float = 1e-5, svd_tol: float = 1e-8) -> SaturationResult:
    """Grow the pool by word length until the rank stabilizes for two
    consecutive lengths (or the cap is reached)."""
    history: list[tuple[int, int]] = []
    report = None
    for max_len in range(2, max_len_cap + 1):
        pool = generate_pool_for(params, max_len, resolved=resolved)
        report = rank_of_invariants(pool, point, params,
                                    fd_step=fd_step, svd_tol=svd_tol)
        history.append((max_len, report.rank))
        if len(history) >= 2 and history[-1][1] == history[-2][1]:
            return SaturationResult(report=report, history=tuple(history),
                                    saturated=True, max_len=max_len)
    return SaturationResult(report=report, history=tuple(history),
                            saturated=False, max_len=max_len_cap)
