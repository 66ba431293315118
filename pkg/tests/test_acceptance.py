"""End-to-end acceptance checks at the project's stated tolerances.

Each test records a one-line verdict; the terminal summary lists them all.
"""
import filecmp
import time

import numpy as np
import pytest
import scipy.linalg as sla

from issadapt import cli
from issadapt.gpucb import GpDataset, Kernel, SearchGrid, gp_posterior_many, minimize
from issadapt.harness.config import ExperimentConfig
from issadapt.harness.episode import expand_estimate, run_episode
from issadapt.harness.learning import (decay_violations, learn_gpucb, learn_mes, run_sweep)
from issadapt.linalg import solve_lyapunov

pytestmark = pytest.mark.slow

CFG = ExperimentConfig()
TRUE = np.array([0.3, 0.6])


@pytest.fixture(scope="module")
def mes_trace():
    t0 = time.perf_counter()
    trace = learn_mes(CFG, iters=300)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="module")
def gp_trace():
    t0 = time.perf_counter()
    trace = learn_gpucb(CFG, iters=150)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="module")
def perfect_J():
    return run_episode(expand_estimate(TRUE, CFG), CFG).J


def random_companion(rng, n):
    roots = -rng.uniform(0.5, 5.0, size=n)
    c = np.poly(roots)[1:]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1] = -c[::-1]
    return A


@pytest.mark.criterion("1 Lyapunov")
def test_lyapunov_solver(criterion):
    rng = np.random.default_rng(0)
    systems = [random_companion(rng, int(rng.integers(1, 9))) for _ in range(100)]
    t0 = time.perf_counter()
    Ps = [solve_lyapunov(A) for A in systems]
    elapsed = time.perf_counter() - t0
    resid = max(np.linalg.norm(A.T @ P + P @ A + np.eye(len(A))) for A, P in zip(systems, Ps))
    min_eig = min(np.linalg.eigvalsh(P).min() for P in Ps)
    oracle = max(np.abs(P - sla.solve_continuous_lyapunov(A.T, -np.eye(len(A)))).max()
                 for A, P in zip(systems, Ps))
    ok = resid <= 1e-10 and min_eig > 0 and oracle <= 1e-8 and elapsed < 1.0
    assert criterion(ok, f"residual {resid:.1e}, min eig {min_eig:.2e}, oracle {oracle:.1e}, {elapsed:.2f} s")


@pytest.mark.criterion("2 nominal tracking")
def test_nominal_tracking(criterion):
    cfg = CFG.updated("plant", true_E=(0.0,) * 4)
    t0 = time.perf_counter()
    ep = run_episode(np.zeros(4), cfg)
    elapsed = time.perf_counter() - t0
    zmax = ep.z_norm.max()
    ok = not ep.failed and zmax < 1e-3 and ep.J < 1e-4 and elapsed < 1.0
    assert criterion(ok, f"max |z| {zmax:.1e}, J {ep.J:.1e}, {elapsed:.2f} s")


@pytest.mark.criterion("3 decay bound")
def test_decay_bound(criterion):
    rng = np.random.default_rng(1)
    violations = checked = 0
    for _ in range(20):
        e = rng.normal(size=2)
        e *= rng.uniform(0.05, 1.0) / np.linalg.norm(e)
        offset = tuple(rng.uniform(-1.0, 1.0, size=2))
        cfg = CFG.updated("plant", initial_offset=offset)
        ep = run_episode(expand_estimate(TRUE - e, cfg), cfg)
        assert not ep.failed
        v, c = decay_violations(ep, float(np.linalg.norm(e)))
        violations += v
        checked += c
    ok = violations == 0 and checked > 0
    assert criterion(ok, f"{violations} violations over {checked} active samples in 20 runs")


@pytest.mark.criterion("4 ISS monotonicity")
def test_iss_monotonicity(criterion):
    points = run_sweep(CFG)
    z = [p.steady_z for p in points]
    ok = all(b >= a for a, b in zip(z, z[1:]))
    assert criterion(ok, "steady |z| " + ", ".join(f"{p.error_norm:g}->{p.steady_z:.3g}" for p in points))


@pytest.mark.criterion("5 MES convergence")
def test_mes_convergence(criterion, mes_trace):
    trace, elapsed = mes_trace
    ratio = trace.Jmin[-1] / trace.J[0]
    mean = trace.estimate_array[-20:].mean(axis=0)
    ok = (ratio <= 0.05 and abs(mean[0] - 0.3) <= 0.05 and abs(mean[1] - 0.6) <= 0.1
          and elapsed < 300)
    assert criterion(ok, f"Jmin/J0 {ratio:.1e}, final mean ({mean[0]:.3f}, {mean[1]:.3f}), {elapsed:.0f} s")


@pytest.mark.criterion("6 GP-UCB convergence")
def test_gpucb_convergence(criterion, gp_trace, mes_trace):
    trace, elapsed = gp_trace
    rec = np.asarray(trace.final_estimate)
    gp_var = np.asarray(trace.recommendations)[-20:].var(axis=0).sum()
    mes_var = mes_trace[0].estimate_array[-20:].var(axis=0).sum()
    ok = np.all(np.abs(rec - TRUE) <= 0.02 + 1e-12) and gp_var < mes_var and elapsed < 600
    assert criterion(ok, f"estimate ({rec[0]:.3f}, {rec[1]:.3f}), final variance "
                         f"{gp_var:.1e} vs MES {mes_var:.1e}, {elapsed:.0f} s")


@pytest.mark.criterion("7 GP oracle")
def test_gp_oracle(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    var_lo, var_hi = np.inf, -np.inf
    for _ in range(100):
        n, d = int(rng.integers(1, 25)), int(rng.integers(1, 4))
        X, y = rng.uniform(size=(n, d)), rng.normal(size=n)
        sigma, l = rng.uniform(0.05, 0.5), rng.uniform(0.1, 0.5)
        data = GpDataset(points=X, y=y, sigma=sigma, kernel=Kernel(l))
        Xs = rng.uniform(size=(8, d))
        mu, var = gp_posterior_many(data, Xs)
        k = Kernel(l)
        K = k(X, X) + sigma ** 2 * np.eye(n)
        ks = k(X, Xs)
        mu_ref = ks.T @ np.linalg.solve(K, y)
        var_ref = 1.0 - np.sum(ks * np.linalg.solve(K, ks), axis=0)
        worst = max(worst, np.abs(mu - mu_ref).max(), np.abs(var - var_ref).max())
        var_lo, var_hi = min(var_lo, var.min()), max(var_hi, var.max())
    ok = worst <= 1e-8 and var_lo >= -1e-12 and var_hi <= 1 + 1e-12
    assert criterion(ok, f"max deviation {worst:.1e}, variance range [{var_lo:.1e}, {var_hi:.3f}]")


@pytest.mark.criterion("8 regret sublinearity")
def test_regret_sublinear(criterion):
    grid = SearchGrid.box(0.0, 1.0, 0.01, 1)
    f = lambda x: float(4.0 * (x[0] - 0.5) ** 2)
    r10, r100 = [], []
    for seed in range(10):
        run = minimize(f, grid, 100, noise_std=0.05, rng=np.random.default_rng(seed), J_star=0.0)
        R = run.regret.running()
        r10.append(R[9] / 10)
        r100.append(R[99] / 100)
    ratio = np.mean(r100) / np.mean(r10)
    assert criterion(ratio < 0.25, f"mean R_100/100 over mean R_10/10 = {ratio:.3f}")


@pytest.mark.criterion("9a recovery GP-UCB")
def test_recovery_gpucb(criterion, gp_trace, perfect_J):
    J = run_episode(expand_estimate(gp_trace[0].final_estimate, CFG), CFG).J
    assert criterion(J <= 2 * perfect_J, f"J {J:.2e} vs perfect {perfect_J:.2e}")


@pytest.mark.criterion("9b recovery MES")
def test_recovery_mes(criterion, mes_trace, perfect_J):
    J = run_episode(expand_estimate(mes_trace[0].final_estimate, CFG), CFG).J
    J_zero = run_episode(np.zeros(4), CFG).J
    ok = J <= 2 * perfect_J
    assert criterion(ok, f"J {J:.2e} vs perfect {perfect_J:.2e} "
                         f"(zero estimate {J_zero:.2e})")


@pytest.mark.criterion("10 determinism")
def test_determinism(criterion, tmp_path):
    noisy = tmp_path / "noisy.ini"
    noisy.write_text("[gpucb]\nnoise_std = 0.01\n[run]\nseed = 5\n")
    runs = [["simulate", "--estimate", "0.2,0.5"],
            ["learn-mes", "--iters", "4"],
            ["learn-gpucb", "--iters", "4", "--config", str(noisy)]]
    same = []
    for args in runs:
        outs = [tmp_path / f"{args[0]}-{k}" for k in range(2)]
        for out in outs:
            assert cli.main(args + ["--out", str(out)]) == 0
        # config.ini and manifest.json record the output path, so compare the data files
        names = sorted(p.name for p in outs[0].glob("*.csv"))
        match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
        same.append(bool(match) and not mismatch and not errors)
    assert criterion(all(same), f"{sum(same)}/{len(runs)} commands byte-identical")
