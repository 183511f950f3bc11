"""
Ground-truth channels, training design and noisy measurements.

Geometry is a uniform linear array everywhere, with steering entries
``exp(+j 2 pi k g / n_grid)`` for element ``k`` and (possibly fractional)
grid bin ``g``. The BS-RIS channel ``G`` (N x K) and UE-RIS channel ``H``
(M x K) each carry ``P`` paths; ``G = U_G diag(gains_g) V_G^H`` and likewise
for ``H``.

Training beams are applied by plain transpose, ``W_tx^T G`` and ``W_rx^T H``,
so every frame is::

    Y_l = sum_q (W_rx^T H_q) W_ris^(q,l) (W_tx^T G_q)^T        (M_rx x N_tx)

and the measurement tensor stores ``Y_l^T`` as slice ``l`` of an
``(N_tx, M_rx, K_ris)`` array.
"""

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .tensor_core import block_kron, mode3_unfold, vec


# "unitary-symmetric" blocks satisfy x^T W y = y^T W x, so RIS pairs (a, b) and
# (b, a) produce identical measurements and the support is only identifiable
# up to that swap; "unitary" (lossless, non-reciprocal) is the default.
RIS_CONSTRAINTS = ("unitary", "unitary-symmetric", "unconstrained")


@dataclass(frozen=True)
class ScenarioConfig:
    n_bs: int = 32
    m_ue: int = 32
    k_ris_elems: int = 64
    k_bar: int = 8
    q_groups: int = 8
    n_tx: int = 16
    m_rx: int = 16
    n_frames: int | None = None
    meas_fraction: float = 0.5
    p_paths: int = 2
    n_grid: int = 64
    snr_db: float = 20.0
    sparsity: int | None = None
    seed: int = 0
    ris_constraint: str = "unitary"
    off_grid: bool = False

    @property
    def n_unknowns(self):
        """Q * K_bar^2, the length of a vectorized BD-RIS configuration."""
        return self.q_groups * self.k_bar ** 2

    @property
    def frames(self):
        if self.n_frames is not None:
            return int(self.n_frames)
        return max(1, int(round(self.meas_fraction * self.n_unknowns)))

    @property
    def s(self):
        return self.sparsity if self.sparsity is not None else self.p_paths ** 2

    @property
    def noiseless(self):
        return math.isinf(self.snr_db) and self.snr_db > 0

    def with_groups(self, k_bar):
        """Same surface size split into groups of ``k_bar`` elements."""
        if self.k_ris_elems % k_bar:
            raise InvalidArgument(f"K={self.k_ris_elems} not divisible by K_bar={k_bar}")
        return dataclasses.replace(self, k_bar=k_bar, q_groups=self.k_ris_elems // k_bar)

    def validate(self):
        for name in ("n_bs", "m_ue", "k_ris_elems", "k_bar", "q_groups", "n_tx",
                     "m_rx", "p_paths", "n_grid"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be positive")
        if self.k_ris_elems != self.k_bar * self.q_groups:
            raise InvalidArgument(
                f"K={self.k_ris_elems} must equal K_bar*Q={self.k_bar * self.q_groups}"
            )
        if self.ris_constraint not in RIS_CONSTRAINTS:
            raise InvalidArgument(f"unknown ris_constraint {self.ris_constraint!r}")
        if self.p_paths > self.n_grid:
            raise InvalidArgument("p_paths must not exceed n_grid")
        if not 1 <= self.s <= self.n_grid ** 2:
            raise InvalidArgument(f"sparsity {self.s} outside [1, n_grid^2]")
        if self.n_frames is None and not 0 < self.meas_fraction <= 1:
            raise InvalidArgument("meas_fraction must lie in (0, 1]")
        if self.frames < self.s:
            raise InvalidArgument(
                f"{self.frames} frames cannot resolve sparsity {self.s}"
            )
        if self.frames > self.n_unknowns:
            warnings.warn(
                f"{self.frames} frames exceed Q*K_bar^2={self.n_unknowns}; "
                "plain least squares is already identifiable in this regime",
                stacklevel=2,
            )
        return self


@dataclass
class PathSet:
    tx_idx: np.ndarray
    rx_idx: np.ndarray
    ris_g_idx: np.ndarray
    ris_h_idx: np.ndarray
    gains_g: np.ndarray
    gains_h: np.ndarray
    # fractional bin offsets, rows ordered (tx, rx, ris_g, ris_h); zero when on-grid
    offsets: np.ndarray = None

    def __post_init__(self):
        if self.offsets is None:
            self.offsets = np.zeros((4, len(self.tx_idx)))

    @property
    def p(self):
        return len(self.tx_idx)

    @property
    def on_grid(self):
        return not np.any(self.offsets)


@dataclass
class ChannelInstance:
    h: np.ndarray
    g: np.ndarray
    u_h: np.ndarray
    v_h: np.ndarray
    u_g: np.ndarray
    v_g: np.ndarray
    paths: PathSet
    q_groups: int = 1


@dataclass
class TrainingDesign:
    w_tx: np.ndarray
    w_rx: np.ndarray
    w_ris: np.ndarray
    # (K_ris, Q, K_bar, K_bar): block of group q in frame l
    per_frame_blocks: np.ndarray

    @property
    def n_frames(self):
        return self.per_frame_blocks.shape[0]

    @property
    def q_groups(self):
        return self.per_frame_blocks.shape[1]

    @property
    def k_bar(self):
        return self.per_frame_blocks.shape[2]


@dataclass
class MeasurementSet:
    y: np.ndarray
    x_clean: np.ndarray
    noise_var: float
    unfolded: np.ndarray = field(repr=False)


def steering_matrix(n_elems, bins, n_grid):
    """Columns are ULA steering vectors at the (possibly fractional) ``bins``."""
    k = np.arange(n_elems)[:, None]
    return np.exp(2j * np.pi * k * np.asarray(bins, dtype=float)[None, :] / n_grid)


def steering_vector(n_elems, grid_idx, n_grid):
    if not 0 <= grid_idx < n_grid:
        raise InvalidArgument(f"grid index {grid_idx} outside [0, {n_grid})")
    return steering_matrix(n_elems, [grid_idx], n_grid)[:, 0]


def crandn(rng, *shape):
    """Circular complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def gen_paths(cfg, rng):
    p, n = cfg.p_paths, cfg.n_grid
    if p > n:
        raise InvalidArgument("p_paths must not exceed n_grid")
    idx = [rng.choice(n, size=p, replace=False) for _ in range(4)]
    gains_g = crandn(rng, p)
    gains_h = crandn(rng, p)
    offsets = rng.uniform(-0.5, 0.5, size=(4, p)) if cfg.off_grid else None
    return PathSet(*idx, gains_g=gains_g, gains_h=gains_h, offsets=offsets)


def build_channels(paths, cfg):
    n = cfg.n_grid
    off = paths.offsets
    u_g = steering_matrix(cfg.n_bs, paths.tx_idx + off[0], n)
    u_h = steering_matrix(cfg.m_ue, paths.rx_idx + off[1], n)
    v_g = steering_matrix(cfg.k_ris_elems, paths.ris_g_idx + off[2], n)
    v_h = steering_matrix(cfg.k_ris_elems, paths.ris_h_idx + off[3], n)
    g = (u_g * paths.gains_g) @ v_g.conj().T
    h = (u_h * paths.gains_h) @ v_h.conj().T
    return ChannelInstance(h=h, g=g, u_h=u_h, v_h=v_h, u_g=u_g, v_g=v_g, paths=paths,
                           q_groups=cfg.q_groups)


def random_unitary(n, rng):
    """Haar-distributed unitary via QR with the usual phase fix."""
    z = crandn(rng, n, n)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_symmetric_unitary(n, rng):
    """``U U^T`` for Haar ``U``: unitary and complex symmetric."""
    u = random_unitary(n, rng)
    return u @ u.T


def stack_ris_config(blocks):
    """Per-group blocks (Q, K_bar, K_bar) of one frame -> stacked vec column."""
    return np.concatenate([vec(b) for b in blocks])


def gen_training(cfg, rng):
    n, m = cfg.n_bs, cfg.m_ue
    w_tx = np.exp(2j * np.pi * rng.random((n, cfg.n_tx))) / np.sqrt(n)
    w_rx = np.exp(2j * np.pi * rng.random((m, cfg.m_rx))) / np.sqrt(m)
    kb, q, frames = cfg.k_bar, cfg.q_groups, cfg.frames
    blocks = np.empty((frames, q, kb, kb), dtype=np.complex128)
    for l in range(frames):
        for g in range(q):
            if cfg.ris_constraint == "unitary":
                blocks[l, g] = random_unitary(kb, rng)
            elif cfg.ris_constraint == "unitary-symmetric":
                blocks[l, g] = random_symmetric_unitary(kb, rng)
            else:
                blocks[l, g] = crandn(rng, kb, kb) / np.sqrt(kb)
    w_ris = np.stack([stack_ris_config(blocks[l]) for l in range(frames)], axis=1)
    return TrainingDesign(w_tx=w_tx, w_rx=w_rx, w_ris=w_ris, per_frame_blocks=blocks)


def group_slice(mat, q, k_bar):
    return mat[:, q * k_bar:(q + 1) * k_bar]


def synthesize_frame(ch, tr, l):
    """Noise-free frame ``l`` (M_rx x N_tx) by the literal per-group sum."""
    if not 0 <= l < tr.n_frames:
        raise InvalidArgument(f"frame {l} outside [0, {tr.n_frames})")
    kb = tr.k_bar
    y = np.zeros((tr.w_rx.shape[1], tr.w_tx.shape[1]), dtype=np.complex128)
    for q in range(tr.q_groups):
        h_bar = tr.w_rx.T @ group_slice(ch.h, q, kb)
        g_bar = tr.w_tx.T @ group_slice(ch.g, q, kb)
        y += h_bar @ tr.per_frame_blocks[l, q] @ g_bar.T
    return y


def synthesize_measurements(ch, tr, cfg, rng):
    x = np.stack([synthesize_frame(ch, tr, l).T for l in range(tr.n_frames)], axis=2)
    if cfg.noiseless:
        noise_var = 0.0
        y = x.copy()
    else:
        noise_var = float(np.sum(np.abs(x) ** 2) / (x.size * 10 ** (cfg.snr_db / 10)))
        y = x + np.sqrt(noise_var) * crandn(rng, *x.shape)
    return MeasurementSet(y=y, x_clean=x, noise_var=noise_var, unfolded=mode3_unfold(y))


def ris_pair_atoms(v_g, v_h, q):
    """RIS-side atoms for every (g-column, h-column) pair, g-major.

    Column ``a * v_h.shape[1] + b`` stacks, over groups, the Kronecker product
    ``conj(v_g[group, a]) (x) conj(v_h[group, b])``; this is the transpose of
    ``V_G^H |x| V_H^H`` and pairs with the column-major vec of a RIS block.
    """
    return block_kron(v_g.conj().T, v_h.conj().T, q).T


def true_core_unfolding(ch):
    return np.diag(np.kron(ch.paths.gains_g, ch.paths.gains_h))


def tucker_factors(ch, tr):
    """``(A1, A2, A3)`` of the noise-free Tucker model, A3 columns g-major."""
    a1 = tr.w_tx.T @ ch.u_g
    a2 = tr.w_rx.T @ ch.u_h
    a3 = tr.w_ris.T @ ris_pair_atoms(ch.v_g, ch.v_h, tr.q_groups)
    return a1, a2, a3


def pair_beam_factor(a1, a2):
    """``(A2 (x) A1)`` with columns reordered g-major to match ``A3`` and the
    diagonal core; column ``pG * P + pH`` is ``a2[:, pH] (x) a1[:, pG]``."""
    p_g, p_h = a1.shape[1], a2.shape[1]
    cols = [np.kron(a2[:, j], a1[:, i]) for i in range(p_g) for j in range(p_h)]
    return np.stack(cols, axis=1)


def tucker_synthesis(ch, tr):
    """Mode-3 unfolding of the clean tensor from the Tucker factors."""
    a1, a2, a3 = tucker_factors(ch, tr)
    return a3 @ true_core_unfolding(ch) @ pair_beam_factor(a1, a2).T


def true_composite_channel(ch):
    """Composite channel (Q K_bar^2 x N M); column index ``n * M + m``."""
    v3 = ris_pair_atoms(ch.v_g, ch.v_h, ch.q_groups)
    d = np.kron(ch.paths.gains_g, ch.paths.gains_h)
    beams = np.stack(
        [np.kron(ch.u_g[:, i], ch.u_h[:, j])
         for i in range(ch.u_g.shape[1]) for j in range(ch.u_h.shape[1])],
        axis=1,
    )
    return (v3 * d) @ beams.T


def draw_instance(cfg, rng):
    """Paths, channels, training and measurements for one trial, in that RNG order."""
    paths = gen_paths(cfg, rng)
    ch = build_channels(paths, cfg)
    tr = gen_training(cfg, rng)
    ms = synthesize_measurements(ch, tr, cfg, rng)
    return ch, tr, ms
