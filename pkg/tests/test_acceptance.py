"""Acceptance criteria 1-9, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""

import contextlib
import resource
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from conftest import dense_sym_normalize, random_connected_adjacency, random_kg  # noqa: E402
from tfpdecode import (  # noqa: E402
    DecodeConfig,
    SeedMask,
    SparseMatrix,
    build_distal,
    build_integral,
    build_proximal,
    build_tri_rel,
    cosine_sim,
    decode,
    direct_solve,
    generate_kg,
    greedy_match,
    hits_at_k,
    iterate_fp,
    make_pair,
    mrr,
    sinkhorn,
    sinkhorn_match,
    sym_normalize,
)
from tfpdecode.kg import DATASET_FILES  # noqa: E402

_capsys = None


@pytest.fixture(autouse=True)
def _bind_capsys(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def report(number, title, ok, detail):
    line = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'} ({detail})"
    ctx = _capsys.disabled() if _capsys is not None else contextlib.nullcontext()
    with ctx:
        print(line, flush=True)
    assert ok, line


def _laplacian_pair(a):
    a_sp = SparseMatrix.from_dense(a)
    a_t = sym_normalize(a_sp)
    lap = SparseMatrix.from_dense(np.eye(len(a)) - a_t.to_dense())
    return a_t, lap


def _flow_graphs():
    """The 50 connected graphs shared by criteria 1 and 3."""
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(10, 51))
        a = random_connected_adjacency(rng, n, extra_edge_prob=float(rng.uniform(0.02, 0.3)))
        seeds = rng.choice(n, max(1, round(0.2 * n)), replace=False)
        yield a, SeedMask.from_indices(n, seeds), rng.standard_normal((n, 1))


def test_criterion_1_iteration_matches_direct_solve():
    t0 = time.perf_counter()
    worst = 0.0
    for a, mask, x in _flow_graphs():
        a_t, lap = _laplacian_pair(a)
        gap = np.abs(iterate_fp(a_t, x, mask, 2000) - direct_solve(lap, x, mask)).max()
        worst = max(worst, gap)
    seconds = time.perf_counter() - t0
    report(1, "iterate_fp vs direct_solve", worst <= 1e-6 and seconds < 5,
           f"max gap {worst:.2e} <= 1e-6, {seconds:.2f}s < 5s")


def test_criterion_2_spectral_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    lo, hi, rho_max = np.inf, -np.inf, 0.0
    for _ in range(20):
        n = int(rng.integers(2, 21))
        a = np.triu(rng.random((n, n)) < rng.uniform(0.05, 0.6), 1).astype(float)
        a = a + a.T
        _, lap = _laplacian_pair(a)
        ev = np.linalg.eigvalsh(lap.to_dense())
        lo, hi = min(lo, ev.min()), max(hi, ev.max())
        o = np.flatnonzero(rng.random(n) >= 0.2)
        if o.size:
            a_oo = dense_sym_normalize(a)[np.ix_(o, o)]
            rho_max = max(rho_max, np.abs(np.linalg.eigvalsh(a_oo)).max())
    seconds = time.perf_counter() - t0
    margin = 1e-9
    ok = lo >= -margin and hi <= 2 - margin and rho_max <= 1 - margin and seconds < 2
    report(2, "spectrum of the Laplacian", ok,
           f"eigenvalues in [{lo:.3e}, {hi:.6f}], max rho(A_oo) {rho_max:.6f}, {seconds:.2f}s < 2s")


def test_criterion_3_contraction():
    violations = 0
    steps = 0
    for a, mask, x in _flow_graphs():
        a_t, lap = _laplacian_pair(a)
        o = mask.others
        star = direct_solve(lap, x, mask)[o]
        xk = x.copy()
        gap = np.linalg.norm(xk[o] - star)
        for _ in range(2000):
            xk = iterate_fp(a_t, xk, mask, 1)
            new_gap = np.linalg.norm(xk[o] - star)
            violations += new_gap > gap + 1e-12
            steps += 1
            gap = new_gap
    report(3, "per-step contraction", violations == 0, f"{violations} violations in {steps} steps")


def _unique_optimum(sim, margin):
    """Exact assignment if it beats every other permutation by ``margin``, else None.

    The runner-up must drop at least one optimal edge, so it is the best of
    the n re-solves that each forbid one optimal edge.
    """
    rows, cols = linear_sum_assignment(sim, maximize=True)
    best = sim[rows, cols].sum()
    second = -np.inf
    for i, j in zip(rows, cols):
        banned = sim.copy()
        banned[i, j] = -1e9
        r2, c2 = linear_sum_assignment(banned, maximize=True)
        second = max(second, banned[r2, c2].sum())
    return cols if best - second >= margin else None


def test_criterion_4_sinkhorn_recovers_exact_assignment():
    rng = np.random.default_rng(4)
    cases = []
    while len(cases) < 100:
        sim = rng.uniform(-1, 1, (10, 10))
        cols = _unique_optimum(sim, 0.1)
        if cols is not None:
            cases.append((sim, cols))
    t0 = time.perf_counter()
    hits = sum(np.array_equal(np.argmax(sinkhorn(s, 0.02, 50), axis=1), c) for s, c in cases)
    seconds = time.perf_counter() - t0
    report(4, "Sinkhorn vs exact assignment", hits >= 95 and seconds < 1,
           f"{hits}/100 recovered >= 95, {seconds:.3f}s < 1s")


def test_criterion_5_views_match_brute_force():
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(200):
        kg = random_kg(rng, max_entities=12, max_relations=4, max_triples=40)
        mismatches += not np.array_equal(build_proximal(kg).to_dense(), oracles.proximal(kg))
        mismatches += not np.array_equal(build_distal(kg).to_dense(), oracles.distal(kg))
        mismatches += not np.array_equal(build_integral(kg).to_dense(), oracles.integral(kg))
        mismatches += not np.array_equal(build_tri_rel(kg).to_dense(), oracles.tri_rel(kg))
    report(5, "adjacency views", mismatches == 0, f"{mismatches} mismatches over 200 KGs x 4 views")


def test_criterion_6_decoder_lift():
    t0 = time.perf_counter()
    cfg = DecodeConfig()
    raw_greedy, raw_sk, tfp_sk = [], [], []
    for seed in range(10):
        ds = make_pair(generate_kg(500, 20, 2500, seed), dropout=0.1, noise_sigma=0.6, embed_dim=32, rng_seed=seed)
        test = ds.alignment.test_pairs
        truth = np.arange(len(test))
        raw = cosine_sim(ds.source_embeddings[test[:, 0]], ds.target_embeddings[test[:, 1]])
        raw_greedy.append(np.mean(greedy_match(raw).match == truth))
        raw_sk.append(np.mean(sinkhorn_match(raw, cfg.sinkhorn_tau, cfg.sinkhorn_iters).match == truth))
        out_src, out_tgt = decode(ds, cfg)
        sim = cosine_sim(out_src[test[:, 0]], out_tgt[test[:, 1]])
        tfp_sk.append(np.mean(sinkhorn_match(sim, cfg.sinkhorn_tau, cfg.sinkhorn_iters).match == truth))
    seconds = time.perf_counter() - t0
    wins = int(np.sum(np.array(tfp_sk) >= np.array(raw_sk)))
    ok = np.mean(tfp_sk) >= np.mean(raw_greedy) and wins >= 7 and seconds < 60
    report(6, "decoder lift on synthetic pairs", ok,
           f"mean H@1 TFP+Sinkhorn {np.mean(tfp_sk):.4f} vs raw greedy {np.mean(raw_greedy):.4f}, "
           f"beats raw+Sinkhorn in {wins}/10 seeds >= 7, {seconds:.1f}s < 60s")


def _cli(*args):
    return [sys.executable, "-m", "tfpdecode", *map(str, args)]


def _decode_cmd(data, out_src, out_tgt):
    f = {k: data / v for k, v in DATASET_FILES.items()}
    return _cli("decode", "--src-triples", f["src_triples"], "--tgt-triples", f["tgt_triples"],
                "--train-pairs", f["train_pairs"], "--src-emb", f["src_emb"], "--tgt-emb", f["tgt_emb"],
                "--out-src", out_src, "--out-tgt", out_tgt,
                "--iters", 10, "--dr", 512, "--de", 16, "--seed", 0)


@pytest.mark.slow
def test_criterion_7_scale(tmp_path):
    data = tmp_path / "big"
    subprocess.run(_cli("synth", "--entities", 15000, "--relations", 1000, "--triples", 100000,
                        "--dropout", 0.1, "--noise", 0.3, "--dim", 300, "--seed", 1, "--out-dir", data),
                   check=True, capture_output=True)
    before = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    t0 = time.perf_counter()
    proc = subprocess.run(_decode_cmd(data, tmp_path / "s.bin", tmp_path / "t.bin"), capture_output=True, text=True)
    seconds = time.perf_counter() - t0
    # ru_maxrss is the peak of the largest child so far, in KiB on Linux
    peak_gb = max(before, resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss) / 2**20
    ok = proc.returncode == 0 and seconds < 120 and peak_gb < 16
    report(7, "DBP15K-scale decode", ok,
           f"exit {proc.returncode}, {seconds:.1f}s < 120s, peak RSS {peak_gb:.2f} GB < 16 GB")


def test_criterion_8_metrics():
    examples = [
        hits_at_k([1, 1, 1], 1) == 1.0,
        hits_at_k([1, 2, 3], 1) == 1 / 3,
        hits_at_k([1, 2, 3], 10) == 1.0,
        mrr([1, 1]) == 1.0,
        mrr([1, 2]) == 0.75,
        abs(mrr([2, 4, 5]) - (0.5 + 0.25 + 0.2) / 3) < 1e-15,
    ]
    rng = np.random.default_rng(8)
    non_monotone = 0
    for _ in range(1000):
        r = rng.integers(1, 100, int(rng.integers(1, 200)))
        h = [hits_at_k(r, k) for k in range(1, 101)]
        non_monotone += any(a > b for a, b in zip(h, h[1:]))
    report(8, "metric unit suite", all(examples) and non_monotone == 0,
           f"{sum(examples)}/{len(examples)} examples, {non_monotone}/1000 non-monotone rank vectors")


def test_criterion_9_decode_deterministic(tmp_path):
    data = tmp_path / "ds"
    subprocess.run(_cli("synth", "--entities", 300, "--relations", 10, "--triples", 1500, "--dropout", 0.1,
                        "--noise", 0.5, "--dim", 32, "--seed", 9, "--out-dir", data),
                   check=True, capture_output=True)
    outs = []
    for run in ("a", "b"):
        src, tgt = tmp_path / f"{run}_src.bin", tmp_path / f"{run}_tgt.bin"
        subprocess.run(_decode_cmd(data, src, tgt), check=True, capture_output=True)
        outs.append((src.read_bytes(), tgt.read_bytes()))
    same = outs[0] == outs[1]
    report(9, "byte-identical decode", same, f"{len(outs[0][0]) + len(outs[0][1])} bytes compared")


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
