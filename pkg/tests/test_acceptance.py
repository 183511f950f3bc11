"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (collected in the terminal summary) and
then asserts. Master seeds are fixed in advance; nothing here is tuned to a
particular draw.
"""

import time
import warnings

import numpy as np
import pytest

from bdris_cs import estimators as est
from bdris_cs.dictionary import build_dictionaries
from bdris_cs.harness import SweepSpec, run_sweep, run_trial
from bdris_cs.scenario import ScenarioConfig, draw_instance, gen_training, tucker_synthesis
from bdris_cs.tensor_core import mode3_unfold, rel_error

from helpers import crand, instance, tiny_cfg

pytestmark = pytest.mark.slow

MASTER_SEED = 0
METHODS = ("storm", "star", "oracle_ls")


def db(x):
    return 10 * np.log10(x)


@pytest.fixture(scope="module")
def snr_sweeps():
    """Shared SNR sweeps at K_bar 4 and 8, 50% measurements, 200 trials."""
    out = {}
    for k_bar in (4, 8):
        spec = SweepSpec("snr", base=ScenarioConfig().with_groups(k_bar),
                         sweep_values=[0.0, 10.0, 20.0, 30.0], methods=METHODS,
                         n_trials=200, master_seed=MASTER_SEED)
        out[k_bar] = run_sweep(spec)
    return out


def test_synthesis_identity(report):
    rng = np.random.default_rng(MASTER_SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        q = int(rng.choice([1, 2, 8]))
        k_bar = int(rng.choice([2, 4, 8]))
        p = int(rng.choice([1, 2, 3]))
        cfg = ScenarioConfig(n_bs=int(rng.integers(4, 33)), m_ue=int(rng.integers(4, 33)),
                             k_ris_elems=q * k_bar, k_bar=k_bar, q_groups=q,
                             n_tx=int(rng.integers(2, 17)), m_rx=int(rng.integers(2, 17)),
                             n_grid=64, p_paths=p, meas_fraction=0.5,
                             n_frames=max(p * p, (q * k_bar ** 2) // 2),
                             snr_db=float("inf"))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ch, tr, ms = draw_instance(cfg, rng)
        worst = max(worst, rel_error(tucker_synthesis(ch, tr), mode3_unfold(ms.x_clean)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10
    report("1 synthesis identity", ok, f"max rel err {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_noiseless_exact_recovery(report):
    cfg = ScenarioConfig(snr_db=float("inf"), seed=MASTER_SEED)
    t0 = time.perf_counter()
    hits = {"storm": 0, "star": 0}
    for t in range(100):
        for m, res in run_trial(cfg, tuple(hits), t).items():
            hits[m] += bool(res.support_exact and res.nmse <= 1e-8)
    elapsed = time.perf_counter() - t0
    ok = min(hits.values()) >= 95 and elapsed < 300
    report("2 noiseless exact recovery", ok,
           f"storm {hits['storm']}/100, star {hits['star']}/100, {elapsed:.0f} s")
    assert ok


def test_oracle_bound(snr_sweeps, report):
    violations = []
    for k_bar, res in snr_sweeps.items():
        for snr in res_values(res):
            oracle = res.cell(snr, "oracle_ls").nmse_mean
            for m in ("storm", "star"):
                mine = res.cell(snr, m).nmse_mean
                if not oracle <= mine:
                    violations.append(f"Kbar={k_bar} snr={snr:g} {m}: "
                                      f"oracle {db(oracle):.3f} dB > {db(mine):.3f} dB")
    ok = not violations
    report("3 oracle lower bound", ok, "; ".join(violations) or "8 points x 2 methods")
    assert ok, violations


def res_values(res):
    return sorted({c.sweep_value for c in res.cells})


def test_star_reaches_bound_storm_saturates(snr_sweeps, report):
    gaps = {}
    for k_bar, res in snr_sweeps.items():
        o = db(res.cell(30.0, "oracle_ls").nmse_mean)
        gaps[k_bar] = {m: db(res.cell(30.0, m).nmse_mean) - o for m in ("storm", "star")}
    g4, g8 = gaps[4], gaps[8]
    ok = (g4["star"] <= 2.0 and g4["storm"] >= g4["star"] + 3.0
          and g8["star"] <= 2.0 and g8["storm"] <= 2.0)
    report("4 STAR reaches bound, STORM saturates", ok,
           f"gap to oracle at 30 dB: Kbar=4 storm {g4['storm']:.2f} star {g4['star']:.2f}; "
           f"Kbar=8 storm {g8['storm']:.2f} star {g8['star']:.2f} dB")
    assert ok, gaps


def test_paths_degradation(report):
    spec = SweepSpec("n_paths", base=ScenarioConfig(snr_db=20.0),
                     sweep_values=[1, 2, 3, 4, 5, 6], methods=("storm", "star"),
                     n_trials=100, master_seed=MASTER_SEED)
    res = run_sweep(spec)
    curves = {m: res.series(m, "nmse_db") for m in spec.methods}
    problems = []
    for m, c in curves.items():
        if not all(v < -20 for v in c[:4]):
            problems.append(f"{m} above -20 dB for P<=4")
        if not all(b >= a - 1.0 for a, b in zip(c, c[1:])):
            problems.append(f"{m} not non-decreasing")
    drop = {m: c[5] - c[1] for m, c in curves.items()}
    if not drop["star"] > drop["storm"]:
        problems.append("STAR degradation P=2->6 not steeper than STORM's")
    ok = not problems
    detail = "; ".join(f"{m} " + " ".join(f"{v:.1f}" for v in c) for m, c in curves.items())
    report("5 paths degradation", ok, detail + ("; " + "; ".join(problems) if problems else ""))
    assert ok, (curves, problems)


def total_time(cell):
    return cell.t_stage1_s + cell.t_stage2_s


def test_runtime_ordering(report):
    spec = SweepSpec("timing_kbar", base=ScenarioConfig(snr_db=20.0),
                     sweep_values=[2, 4, 8, 16], methods=("storm", "star"),
                     n_trials=20, master_seed=MASTER_SEED)
    res = run_sweep(spec)
    order_ok = all(total_time(res.cell(k, "star")) <= total_time(res.cell(k, "storm"))
                   for k in spec.sweep_values)

    n_grid = est.largest_grid_within(est.VCS_ATOM_BUDGET)
    cfg = ScenarioConfig(snr_db=20.0, n_grid=n_grid, seed=MASTER_SEED).with_groups(2)
    out = run_trial(cfg, ("storm", "star", "vectorized_cs"), 0)
    t = {m: r.stage1_time + r.stage2_time for m, r in out.items()}
    factor = t["vectorized_cs"] / max(t["storm"], t["star"])
    ok = order_ok and factor >= 10
    timing = " ".join(f"Kbar={k}: storm {total_time(res.cell(k, 'storm')) * 1e3:.0f} ms "
                      f"star {total_time(res.cell(k, 'star')) * 1e3:.0f} ms"
                      for k in spec.sweep_values)
    report("6 runtime ordering", ok,
           f"{timing}; vectorized CS (n_grid={n_grid}) {t['vectorized_cs']:.1f} s, "
           f"{factor:.0f}x the slower two-stage method")
    assert ok


def test_stage2_oracle_equivalence(report):
    cfg = ScenarioConfig()
    rng = np.random.default_rng(MASTER_SEED)
    ds = build_dictionaries(cfg, gen_training(cfg, rng))
    exact, worst = 0, 0.0
    for _ in range(100):
        i, j = rng.integers(cfg.n_grid, size=2)
        alpha = complex(crand(rng))
        m_s = alpha * np.outer(ds.a1_eff[:, i], ds.a2_eff[:, j])
        ii, jj, gain, _ = est.factorize_rank_one(m_s, ds.a1_eff, ds.a2_eff)
        exact += (ii, jj) == (i, j)
        worst = max(worst, abs(gain - alpha) / abs(alpha))
    ok = exact == 100 and worst <= 1e-10
    report("7 stage-2 oracle equivalence", ok, f"{exact}/100 exact, max gain rel err {worst:.1e}")
    assert ok


def test_cross_method_micro_equivalence(report):
    cfg = tiny_cfg()
    bad = []
    for t in range(100):
        ch, _, ms, ds, c_true = instance(cfg, seed=MASTER_SEED, trial=t)
        res = [est.vectorized_cs(ms, ds, cfg, c_true), est.storm(ms, ds, cfg, c_true),
               est.star(ms, ds, cfg, c_true)]
        # vectorized CS reports (tx, rx, RIS pair) bins; compare all three coordinates
        keys = [sorted((c.support_idx, c.p_tx_hat, c.p_rx_hat) for c in r.components)
                for r in res]
        same_support = keys[0] == keys[1] == keys[2]
        close = all(np.max(np.abs(r.c_hat - res[0].c_hat)) <= 1e-8 for r in res[1:])
        if not (same_support and close):
            bad.append(t)
    ok = not bad
    report("8 cross-method micro-equivalence", ok, f"{100 - len(bad)}/100 trials agree")
    assert ok, bad
