"""Fourier dictionaries and their training-projected versions."""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument
from .scenario import ris_pair_atoms, steering_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DictionarySet:
    f1: np.ndarray      # N x n_grid, BS steering grid
    f2: np.ndarray      # M x n_grid, UE steering grid
    f3: np.ndarray      # Q K_bar^2 x n_grid^2, RIS pair atoms
    a1_eff: np.ndarray  # N_tx x n_grid
    a2_eff: np.ndarray  # M_rx x n_grid
    a3_eff: np.ndarray  # K_ris x n_grid^2
    n_grid: int

    def col_index(self, i_g, i_h):
        """F3 column of RIS pair ``(i_g, i_h)``: g-major, h-minor."""
        n = self.n_grid
        if not (0 <= i_g < n and 0 <= i_h < n):
            raise InvalidArgument(f"bin pair ({i_g}, {i_h}) outside [0, {n})")
        return int(i_g) * n + int(i_h)

    def col_pair(self, k):
        if not 0 <= k < self.n_grid ** 2:
            raise InvalidArgument(f"column {k} outside [0, {self.n_grid ** 2})")
        return divmod(int(k), self.n_grid)


@lru_cache(maxsize=8)
def fourier_dictionaries(n_bs, m_ue, k_ris_elems, q_groups, n_grid):
    """Training-independent ``(F1, F2, F3)``; cached and read-only."""
    bins = np.arange(n_grid)
    f1 = steering_matrix(n_bs, bins, n_grid)
    f2 = steering_matrix(m_ue, bins, n_grid)
    f_ris = steering_matrix(k_ris_elems, bins, n_grid)
    f3 = ris_pair_atoms(f_ris, f_ris, q_groups)
    for f in (f1, f2, f3):
        f.setflags(write=False)
    return f1, f2, f3


def build_dictionaries(cfg, tr):
    f1, f2, f3 = fourier_dictionaries(cfg.n_bs, cfg.m_ue, cfg.k_ris_elems,
                                      cfg.q_groups, cfg.n_grid)
    if tr.w_tx.shape[0] != cfg.n_bs or tr.w_rx.shape[0] != cfg.m_ue:
        raise InvalidArgument(
            f"beam matrices {tr.w_tx.shape}, {tr.w_rx.shape} do not match N={cfg.n_bs}, M={cfg.m_ue}"
        )
    if tr.w_ris.shape[0] != f3.shape[0]:
        raise InvalidArgument(
            f"RIS training has {tr.w_ris.shape[0]} rows, expected Q*K_bar^2={f3.shape[0]}"
        )
    ds = DictionarySet(
        f1=f1,
        f2=f2,
        f3=f3,
        a1_eff=tr.w_tx.T @ f1,
        a2_eff=tr.w_rx.T @ f2,
        a3_eff=tr.w_ris.T @ f3,
        n_grid=cfg.n_grid,
    )
    if log.isEnabledFor(logging.DEBUG):
        log.debug("a3_eff mutual coherence %.4f", mutual_coherence(ds.a3_eff))
    return ds


def column_for_pair(ds, i_g, i_h):
    return ds.f3[:, ds.col_index(i_g, i_h)]


def true_support(ch, ds):
    """F3 columns of all true (g-path, h-path) RIS pairs, g-major order."""
    p = ch.paths
    return [ds.col_index(ig, ih) for ig in p.ris_g_idx for ih in p.ris_h_idx]


def mutual_coherence(a):
    """Largest normalized inner product between distinct columns."""
    a = a / np.linalg.norm(a, axis=0, keepdims=True)
    gram = np.abs(a.conj().T @ a)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())
