import numpy as np

from bdris_cs.dictionary import build_dictionaries
from bdris_cs.scenario import ScenarioConfig, draw_instance, true_composite_channel


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def small_cfg(**kw):
    """A fast configuration: 8-element arrays, 16-element surface."""
    base = dict(n_bs=8, m_ue=8, k_ris_elems=16, k_bar=4, q_groups=4, n_tx=6, m_rx=6,
                n_grid=16, p_paths=1, snr_db=float("inf"))
    base.update(kw)
    return ScenarioConfig(**base)


def tiny_cfg(**kw):
    base = dict(n_bs=4, m_ue=4, k_ris_elems=4, k_bar=2, q_groups=2, n_tx=4, m_rx=4,
                n_grid=4, p_paths=1, snr_db=float("inf"), meas_fraction=0.5)
    base.update(kw)
    return ScenarioConfig(**base)


def instance(cfg, seed=0, trial=0):
    """One trial draw plus its dictionaries and true composite channel."""
    rng = np.random.default_rng([seed, trial])
    ch, tr, ms = draw_instance(cfg, rng)
    return ch, tr, ms, build_dictionaries(cfg, tr), true_composite_channel(ch)
