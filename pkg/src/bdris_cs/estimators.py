"""
Two-stage sparse core recovery and the reference baselines.

Stage 1 finds the S active RIS-pair atoms of the effective dictionary
``a3_eff`` from the mode-3 unfolding ``x3t`` (K_ris x N_tx M_rx), either
greedily (STORM) or from the noise subspace of ``x3t`` (STAR), and fits the
coefficient rows ``theta`` by least squares. Stage 2 reshapes every row into
an N_tx x M_rx matrix, reads the tx and rx grid bins off its dominant
singular pair by a subspace search over ``a1_eff`` / ``a2_eff``, and fits
the scalar gain. The composite channel is rebuilt from the raw Fourier
dictionaries.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .dictionary import true_support
from .errors import InvalidArgument, NumericFailure, ResourceLimit
from .tensor_core import khatri_rao_cols, ls_solve, svd, unvec, vec

VCS_ATOM_BUDGET = 2 ** 20


@dataclass
class SupportEstimate:
    support: list
    theta: np.ndarray
    spectrum: np.ndarray | None = None


@dataclass
class PathComponent:
    support_idx: int
    p_tx_hat: int
    p_rx_hat: int
    gain: complex
    residual_ratio: float = 0.0


@dataclass
class EstimateResult:
    method: str
    components: list
    c_hat: np.ndarray = field(repr=False)
    nmse: float = float("nan")
    stage1_time: float = 0.0
    stage2_time: float = 0.0
    support_exact: bool | None = None

    @property
    def support(self):
        return [c.support_idx for c in self.components]


def _inverse_norms(a):
    norms = np.linalg.norm(a, axis=0)
    with np.errstate(divide="ignore"):
        return np.where(norms > 0, 1.0 / norms, 0.0)


def _check_x3t(x3t, ds):
    x3t = np.asarray(x3t, dtype=np.complex128)
    if x3t.ndim != 2 or x3t.shape[0] != ds.a3_eff.shape[0]:
        raise InvalidArgument(
            f"measurements {x3t.shape} do not match {ds.a3_eff.shape[0]} frames"
        )
    return x3t


def storm_support(x3t, ds, s, normalize=True):
    """OMP over the columns of ``a3_eff`` with a least-squares refit per step.

    With ``normalize`` the residual correlation of each atom is divided by the
    atom norm, i.e. OMP on the column-normalized dictionary. The training
    projection leaves ``a3_eff`` columns with unequal norms, and the raw
    correlation then favours long atoms over the true ones.
    """
    x3t = _check_x3t(x3t, ds)
    a3 = ds.a3_eff
    if s > a3.shape[0]:
        raise InvalidArgument(f"sparsity {s} exceeds the {a3.shape[0]} available frames")
    scale = _inverse_norms(a3) if normalize else 1.0
    support = []
    residual = x3t
    theta = np.zeros((0, x3t.shape[1]), dtype=np.complex128)
    for _ in range(s):
        corr = np.linalg.norm(a3.conj().T @ residual, axis=1) * scale
        corr[support] = -np.inf
        # argmax returns the first maximum: lowest index wins ties
        support.append(int(np.argmax(corr)))
        theta = ls_solve(a3[:, support], x3t)
        residual = x3t - a3[:, support] @ theta
    return SupportEstimate(support=support, theta=theta)


def music_spectrum(x3t, ds, s):
    """Squared projection of every ``a3_eff`` column onto the noise subspace."""
    x3t = _check_x3t(x3t, ds)
    k_ris = x3t.shape[0]
    if s >= k_ris:
        raise InvalidArgument(f"sparsity {s} leaves no noise subspace in {k_ris} frames")
    u, _, _ = svd(x3t, full_matrices=True)
    u_null = u[:, s:]
    return np.sum(np.abs(ds.a3_eff.conj().T @ u_null) ** 2, axis=1)


def star_support(x3t, ds, s):
    """Support = the ``s`` atoms closest to orthogonal to the noise subspace."""
    x3t = _check_x3t(x3t, ds)
    spectrum = music_spectrum(x3t, ds, s)
    support = [int(k) for k in np.argsort(spectrum, kind="stable")[:s]]
    theta = ls_solve(ds.a3_eff[:, support], x3t)
    return SupportEstimate(support=support, theta=theta, spectrum=spectrum)


def subspace_bin(dictionary, null_basis):
    """Dictionary column with the smallest squared projection on ``null_basis``."""
    cost = np.sum(np.abs(dictionary.conj().T @ null_basis) ** 2, axis=1)
    return int(np.argmin(cost))


def factorize_rank_one(m_s, a1_eff, a2_eff):
    """Grid bins and gain of a (noisy) ``d * a1[:, i] a2[:, j]^T`` matrix.

    Returns ``(i, j, gain, sigma2 / sigma1)``.
    """
    n_tx, m_rx = m_s.shape
    if n_tx < 2 or m_rx < 2:
        raise InvalidArgument("rank-one search needs at least 2 tx and 2 rx beams")
    u, sv, v = svd(m_s, full_matrices=True)
    tx_null = u[:, 1:]
    # m_s^T = d a2 a1^T has left singular vectors conj(v)
    rx_null = v[:, 1:].conj()
    i = subspace_bin(a1_eff, tx_null)
    j = subspace_bin(a2_eff, rx_null)
    a1, a2 = a1_eff[:, i], a2_eff[:, j]
    gain = (a1.conj() @ m_s @ a2.conj()) / (np.vdot(a1, a1).real * np.vdot(a2, a2).real)
    ratio = float(sv[1] / sv[0]) if sv[0] > 0 else 0.0
    return i, j, complex(gain), ratio


def stage2_factorize(se, ds, cfg):
    n_tx, m_rx = ds.a1_eff.shape[0], ds.a2_eff.shape[0]
    if se.theta.shape != (len(se.support), n_tx * m_rx):
        raise InvalidArgument(f"theta shape {se.theta.shape} does not match support/beams")
    components = []
    for k, row in zip(se.support, se.theta):
        m_s = unvec(row, n_tx, m_rx)
        i, j, gain, ratio = factorize_rank_one(m_s, ds.a1_eff, ds.a2_eff)
        components.append(PathComponent(k, i, j, gain, ratio))
    return components


def reconstruct(components, ds):
    """Composite channel from path components; column index ``n * M + m``."""
    rows = ds.f3.shape[0]
    cols = ds.f1.shape[0] * ds.f2.shape[0]
    if not components:
        return np.zeros((rows, cols), dtype=np.complex128)
    n = ds.n_grid
    for c in components:
        if not (0 <= c.p_tx_hat < n and 0 <= c.p_rx_hat < n and 0 <= c.support_idx < n * n):
            raise InvalidArgument(f"component {c} has bins outside the grid")
    f3s = ds.f3[:, [c.support_idx for c in components]]
    gains = np.array([c.gain for c in components])
    beams = khatri_rao_cols(ds.f1[:, [c.p_tx_hat for c in components]],
                            ds.f2[:, [c.p_rx_hat for c in components]])
    return (f3s * gains) @ beams.T


def nmse(c_hat, c_true):
    c_hat, c_true = np.asarray(c_hat), np.asarray(c_true)
    if c_hat.shape != c_true.shape:
        raise InvalidArgument(f"shape mismatch {c_hat.shape} vs {c_true.shape}")
    ref = np.sum(np.abs(c_true) ** 2)
    if ref == 0:
        raise InvalidArgument("true channel is zero; NMSE undefined")
    return float(np.sum(np.abs(c_hat - c_true) ** 2) / ref)


def _two_stage(method, support_fn, ms, ds, cfg, c_true=None):
    t0 = time.perf_counter()
    se = support_fn(ms.unfolded, ds, cfg.s)
    t1 = time.perf_counter()
    comps = stage2_factorize(se, ds, cfg)
    c_hat = reconstruct(comps, ds)
    t2 = time.perf_counter()
    res = EstimateResult(method, comps, c_hat, stage1_time=t1 - t0, stage2_time=t2 - t1)
    if c_true is not None:
        res.nmse = nmse(c_hat, c_true)
    return res


def storm(ms, ds, cfg, c_true=None, normalize=True):
    def support_fn(x3t, ds, s):
        return storm_support(x3t, ds, s, normalize=normalize)
    return _two_stage("storm", support_fn, ms, ds, cfg, c_true)


def star(ms, ds, cfg, c_true=None):
    return _two_stage("star", star_support, ms, ds, cfg, c_true)


def oracle_ls(ms, ch, ds, cfg, c_true=None):
    """Joint LS of all P^2 core gains with every grid bin known."""
    p = ch.paths
    if not p.on_grid:
        raise InvalidArgument("oracle LS needs on-grid paths")
    t0 = time.perf_counter()
    support = true_support(ch, ds)
    pairs = [(ig, ih) for ig in range(p.p) for ih in range(p.p)]
    # vec(a3 b^T) = b (x) a3, with b = a2[:, rx] (x) a1[:, tx]
    design = np.stack(
        [np.kron(np.kron(ds.a2_eff[:, p.rx_idx[ih]], ds.a1_eff[:, p.tx_idx[ig]]),
                 ds.a3_eff[:, k])
         for (ig, ih), k in zip(pairs, support)],
        axis=1,
    )
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        raise NumericFailure(f"oracle design has rank {rank} < {design.shape[1]}")
    gains = ls_solve(design, vec(ms.unfolded))
    comps = [PathComponent(k, int(p.tx_idx[ig]), int(p.rx_idx[ih]), complex(d))
             for (ig, ih), k, d in zip(pairs, support, gains)]
    t1 = time.perf_counter()
    c_hat = reconstruct(comps, ds)
    res = EstimateResult("oracle_ls", comps, c_hat, stage1_time=t1 - t0,
                         stage2_time=time.perf_counter() - t1)
    if c_true is not None:
        res.nmse = nmse(c_hat, c_true)
    return res


def largest_grid_within(budget=VCS_ATOM_BUDGET):
    """Largest grid size whose n_grid^4 atom count fits ``budget``."""
    n = 1
    while (n + 1) ** 4 <= budget:
        n += 1
    return n


def _vcs_atoms(ds, i, j, out=None):
    """Explicit atoms ``vec(a3[:, k] (a2[:, j] (x) a1[:, i])^T)`` for all k."""
    b = np.kron(ds.a2_eff[:, j], ds.a1_eff[:, i])
    a3 = ds.a3_eff
    if out is None:
        out = np.empty((b.size * a3.shape[0], a3.shape[1]), dtype=np.complex128)
    np.multiply(b[:, None, None], a3[None, :, :], out=out.reshape(b.size, *a3.shape))
    return out


def vectorized_cs(ms, ds, cfg, c_true=None, budget=VCS_ATOM_BUDGET, normalize=True):
    """Single-stage OMP on the flattened measurement vector.

    The dictionary spans every (tx bin, rx bin, RIS pair) combination,
    n_grid^4 atoms of length K_ris N_tx M_rx. Atoms are generated explicitly,
    one (tx, rx) block at a time, so memory stays bounded while the work is
    that of the full vectorized problem.
    """
    n = ds.n_grid
    n_atoms = n ** 4
    if n_atoms > budget:
        raise ResourceLimit(f"vectorized CS needs {n_atoms} atoms, budget is {budget}")
    y = vec(ms.unfolded)
    t0 = time.perf_counter()
    chosen = []  # (i, j, k)
    cols = []
    residual = y
    coef = np.zeros(0, dtype=np.complex128)
    buf = np.empty((y.size, n * n), dtype=np.complex128)
    # atom norms factor as |a1_i| |a2_j| |a3_k|
    inv1, inv2, inv3 = (_inverse_norms(a) if normalize else np.ones(a.shape[1])
                        for a in (ds.a1_eff, ds.a2_eff, ds.a3_eff))
    for _ in range(cfg.s):
        best, best_val = None, -1.0
        r_conj = residual.conj()
        for i in range(n):
            for j in range(n):
                corr = np.abs(r_conj @ _vcs_atoms(ds, i, j, out=buf)) * (inv1[i] * inv2[j] * inv3)
                for (ci, cj, ck) in chosen:
                    if ci == i and cj == j:
                        corr[ck] = -1.0
                k = int(np.argmax(corr))
                if corr[k] > best_val:
                    best, best_val = (i, j, k), corr[k]
        chosen.append(best)
        cols.append(_vcs_atoms(ds, best[0], best[1], out=buf)[:, best[2]].copy())
        basis = np.stack(cols, axis=1)
        coef = ls_solve(basis, y)
        residual = y - basis @ coef
    t1 = time.perf_counter()
    comps = [PathComponent(k, i, j, complex(d)) for (i, j, k), d in zip(chosen, coef)]
    c_hat = reconstruct(comps, ds)
    res = EstimateResult("vectorized_cs", comps, c_hat, stage1_time=t1 - t0,
                         stage2_time=0.0)
    if c_true is not None:
        res.nmse = nmse(c_hat, c_true)
    return res
