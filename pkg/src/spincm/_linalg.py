"""Small dense-linear-algebra helpers used throughout the package."""

from __future__ import annotations

import numpy as np


def hermitize(a: np.ndarray) -> np.ndarray:
    """Symmetrize to the nearest Hermitian matrix, (A + A^dag)/2."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    a = np.asarray(a)
    scale = max(1.0, float(np.linalg.norm(a)))
    return float(np.linalg.norm(a - a.conj().T)) <= tol * scale


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from QR of a complex Gaussian matrix.

    The R diagonal is phase-normalized so the distribution is exactly
    Haar rather than QR-convention dependent.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def complex_to_pairs(a: np.ndarray) -> list:
    """Nested lists of [re, im] pairs for JSON serialization."""
    a = np.asarray(a, dtype=complex)
    stacked = np.stack([a.real, a.imag], axis=-1)
    return stacked.tolist()


def pairs_to_complex(doc, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Inverse of :func:`complex_to_pairs`; validates the trailing pair axis."""
    arr = np.asarray(doc, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError("expected nested [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and out.shape != shape:
        raise ValueError(f"expected shape {shape}, got {out.shape}")
    return out


def row_norms(a: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(a), axis=1)
