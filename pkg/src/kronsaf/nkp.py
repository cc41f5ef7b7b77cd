"""Nearest-Kronecker-product machinery.

A length seg_len*n_seg weight vector m is read column-major into the
matrix M (seg_len x n_seg): segment i of m is column i of M. The best
rank-`rank` approximation of M (Frobenius sense) gives the Kronecker
factors: m ~= sum_q kron(short_q, long_q) with long_q of length seg_len
and short_q of length n_seg.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "SvdResult",
    "KronFactors",
    "jacobi_svd",
    "nkp_decompose",
    "kron_synthesize",
    "filtered_input_left",
    "filtered_input_right",
    "misalignment",
    "random_lowrank_ir",
]


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD a = u @ diag(values) @ vt, values sorted descending."""

    u: np.ndarray
    values: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.values) @ self.vt


def jacobi_svd(a, tol=1e-12, max_sweeps=64):
    """Thin SVD of a small matrix by one-sided Jacobi rotations.

    Columns of a working copy are orthogonalized pairwise; at
    convergence the column norms are the singular values. `tol` bounds
    the allowed off-diagonal Gram residue relative to the column norms.
    Rows < columns is handled by transposing internally.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError("jacobi_svd needs a non-empty 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ParameterError("jacobi_svd input contains non-finite entries")
    if a.shape[0] < a.shape[1]:
        res = jacobi_svd(a.T, tol=tol, max_sweeps=max_sweeps)
        return SvdResult(u=res.vt.T, values=res.values, vt=res.u.T)

    u = a.copy()
    n = u.shape[1]
    v = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up = u[:, p]
                uq = u[:, q]
                app = float(np.dot(up, up))
                aqq = float(np.dot(uq, uq))
                apq = float(np.dot(up, uq))
                if abs(apq) <= tol * np.sqrt(app * aqq) or apq == 0.0:
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                u[:, p], u[:, q] = c * up - s * uq, s * up + c * uq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            break

    norms = np.linalg.norm(u, axis=0)
    order = np.argsort(norms)[::-1]
    norms = norms[order]
    u = u[:, order]
    v = v[:, order]
    # Zero singular values keep a zero left column; reconstruction is unaffected.
    nonzero = norms > 0.0
    u[:, nonzero] /= norms[nonzero]
    u[:, ~nonzero] = 0.0
    return SvdResult(u=u, values=norms, vt=v.T)


@dataclass
class KronFactors:
    """Stacked Kronecker factors: long (rank, seg_len), short (rank, n_seg)."""

    long: np.ndarray
    short: np.ndarray

    def __post_init__(self):
        self.long = np.atleast_2d(np.asarray(self.long, dtype=np.float64))
        self.short = np.atleast_2d(np.asarray(self.short, dtype=np.float64))
        if self.long.shape[0] != self.short.shape[0]:
            raise DimensionError("factor stacks disagree on rank")

    @property
    def rank(self):
        return self.long.shape[0]

    @property
    def seg_len(self):
        return self.long.shape[1]

    @property
    def n_seg(self):
        return self.short.shape[1]


def _reshape_segments(x, seg_len, n_seg):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != seg_len * n_seg:
        raise DimensionError(
            f"vector of length {x.size} does not split into {n_seg} segments of {seg_len}"
        )
    return np.reshape(x, (seg_len, n_seg), order="F")


def nkp_decompose(m, seg_len, n_seg, rank):
    """Optimal Kronecker factors of a weight vector, plus residual size.

    Returns (KronFactors, omega) where omega is the relative Frobenius
    error of the rank-truncated reconstruction: sqrt(tail singular
    energy) / ||M||_F. rank must satisfy 1 <= rank <= min(seg_len, n_seg).
    """
    seg_len = int(seg_len)
    n_seg = int(n_seg)
    rank = int(rank)
    mat = _reshape_segments(m, seg_len, n_seg)
    if not 1 <= rank <= min(seg_len, n_seg):
        raise ParameterError(f"rank must lie in [1, {min(seg_len, n_seg)}], got {rank}")
    total = np.linalg.norm(mat)
    if total == 0.0:
        raise ParameterError("cannot decompose an all-zero vector")
    res = jacobi_svd(mat)
    scale = np.sqrt(res.values[:rank])
    long = (scale[:, None] * res.u[:, :rank].T).copy()
    short = (scale[:, None] * res.vt[:rank, :]).copy()
    tail = res.values[rank:]
    omega = float(np.sqrt(np.sum(tail**2)) / total)
    return KronFactors(long=long, short=short), omega


def kron_synthesize(factors):
    """Weight vector sum_q kron(short_q, long_q), column-major layout."""
    mat = factors.long.T @ factors.short
    return np.ravel(mat, order="F")


def filtered_input_left(x, short_stack, seg_len, n_seg):
    """Inputs for the long-factor update: stack of X @ short_q.

    X is x read column-major as seg_len x n_seg. Result length is
    rank*seg_len, blocks ordered by q.
    """
    mat = _reshape_segments(x, seg_len, n_seg)
    short_stack = np.atleast_2d(short_stack)
    if short_stack.shape[1] != n_seg:
        raise DimensionError("short factors do not match n_seg")
    return np.ravel(short_stack @ mat.T)


def filtered_input_right(x, long_stack, seg_len, n_seg):
    """Inputs for the short-factor update: stack of X.T @ long_q."""
    mat = _reshape_segments(x, seg_len, n_seg)
    long_stack = np.atleast_2d(long_stack)
    if long_stack.shape[1] != seg_len:
        raise DimensionError("long factors do not match seg_len")
    return np.ravel(long_stack @ mat)


def misalignment(reference, estimate):
    """Relative distance ||reference - estimate|| / ||reference||."""
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise DimensionError("misalignment needs same-shape vectors")
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        raise ParameterError("reference vector must be nonzero")
    return float(np.linalg.norm(reference - estimate) / denom)


def random_lowrank_ir(seg_len, n_seg, rank, seed, decay=0.0, weights=None):
    """Unit-norm test system with exact Kronecker rank `rank`.

    Sum of `rank` outer products of Gaussian vectors; optional
    exponential decay down the long factors makes it look like a
    room-ish response, and `weights` scales the components (a dominant
    first component mimics the fast-decaying spectra of real echo
    paths). Deterministic in `seed`.
    """
    if rank > min(seg_len, n_seg):
        raise DimensionError(
            f"rank {rank} exceeds min(seg_len, n_seg) = {min(seg_len, n_seg)}"
        )
    rng = np.random.default_rng(seed)
    shape = np.exp(-decay * np.arange(seg_len)) if decay > 0.0 else 1.0
    long = rng.standard_normal((rank, seg_len)) * shape
    short = rng.standard_normal((rank, n_seg))
    if weights is None:
        weights = np.ones(rank)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (rank,):
            raise DimensionError("need one weight per component")
    # Orthonormalize both stacks so the weights become the exact
    # singular values of the segment-reshaped response.
    for stack in (long, short):
        for q in range(rank):
            for prev in range(q):
                stack[q] -= np.dot(stack[q], stack[prev]) * stack[prev]
            stack[q] /= np.linalg.norm(stack[q])
    long *= weights[:, None]
    m = kron_synthesize(KronFactors(long=long, short=short))
    return m / np.linalg.norm(m)
