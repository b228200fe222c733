"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
pass. Heavy workloads (the 100-target oracle census, the beam sweep, the
defense sweep) are shared across criteria through session fixtures.
"""

import time

import numpy as np
import pytest

from invlab.config import AttackSweep, DefenseSweep, ExperimentConfig
from invlab.corpus import save_jsonl_corpus
from invlab.datagen import (
    bijective_dictionary,
    language_tokens,
    parallel_corpora,
    synthetic_retrieval_task,
)
from invlab.defenses import DefenseConfig, assign_language_ids, compute_group_means, language_agnostic
from invlab.eaas import eaas_serve
from invlab.embeddings import NgramConfig, NgramEmbedder
from invlab.experiments import run_crosslingual, run_defense_sweep, run_reconstruction
from invlab.inversion import AttackConfig, EditMutationGenerator, exhaustive_oracle, invert
from invlab.metrics import bleu, exact_match, ndcg_at_k, rouge1_recall, token_f1
from invlab.report import csv_rows_without_wall, emit_report
from invlab.retrieval import evaluate_task
from invlab.seeding import derive_rng
from invlab.translate import bleu_gain_pct, save_dictionary_tsv

from test_metrics import naive_bleu


def check(name: str, passed: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"{name}: {detail}"


# ---------------------------------------------------------------- criterion 1


@pytest.fixture(scope="session")
def oracle_runs():
    """100 seeded random targets over a 3-token vocabulary, length <= 4."""
    embedder = NgramEmbedder(n=3, dim=512, seed=11)
    vocab = ("a", "b", "c")
    runs = []
    start = time.perf_counter()
    for trial in range(100):
        rng = derive_rng("acceptance-oracle", trial)
        length = int(rng.integers(0, 5))
        text = " ".join(vocab[int(i)] for i in rng.integers(0, 3, size=length))
        target = embedder.embed(text)
        oracle = exhaustive_oracle(target, embedder, vocab, max_len=4)
        gen = EditMutationGenerator(vocab, max_tokens=4, seed=trial)
        result = invert(
            target, embedder, gen,
            AttackConfig(vocab=vocab, steps=50, beam_width=8, max_tokens=4),
        )
        runs.append((trial, oracle, result))
    return runs, time.perf_counter() - start


def test_criterion_1_oracle_equivalence(oracle_runs):
    runs, runtime = oracle_runs
    failures = [trial for trial, oracle, result in runs if result.best.score < oracle.score - 1e-9]
    check(
        "1 oracle equivalence",
        len(runs) - len(failures) >= 95 and runtime < 60.0,
        f"{len(runs) - len(failures)}/100 within 1e-9 of the oracle in {runtime:.1f}s"
        + (f"; failing seeds {failures}" if failures else ""),
    )


# ---------------------------------------------------------------- criterion 3


@pytest.fixture(scope="session")
def beam_runs():
    """50 shared-seed targets attacked at beam widths 1, 4, and 8."""
    embedder = NgramEmbedder(n=3, dim=128, seed=3)
    vocab = tuple(language_tokens("en", 6))
    runs = {1: [], 4: [], 8: []}
    for beam in runs:
        for trial in range(50):
            rng = derive_rng("acceptance-beam", trial)
            text = " ".join(vocab[int(i)] for i in rng.integers(0, 6, size=5))
            target = embedder.embed(text)
            gen = EditMutationGenerator(vocab, max_tokens=5, seed=trial)
            runs[beam].append(
                invert(
                    target, embedder, gen,
                    AttackConfig(vocab=vocab, steps=50, beam_width=beam, max_tokens=5),
                )
            )
    return runs


def test_criterion_3_beam_width_dominance(beam_runs):
    means = {b: float(np.mean([r.best.score for r in results])) for b, results in beam_runs.items()}
    check(
        "3 beam-width dominance",
        means[8] >= means[4] >= means[1],
        f"mean cosine b=8 {means[8]:.6f} >= b=4 {means[4]:.6f} >= b=1 {means[1]:.6f}",
    )


# ---------------------------------------------------------------- criterion 2


def test_criterion_2_monotone_correction(oracle_runs, beam_runs):
    runs = [result for _, _, result in oracle_runs[0]]
    for results in beam_runs.values():
        runs.extend(results)
    monotone = all(
        all(x <= y for x, y in zip(r.beam_history, r.beam_history[1:])) for r in runs
    )
    improved = all(
        r.beam_history[-1] >= r.beam_history[min(1, len(r.beam_history) - 1)] for r in runs
    )
    check(
        "2 monotone correction",
        monotone and improved,
        f"{len(runs)} runs: histories non-decreasing={monotone}, 50-step >= 1-step={improved}",
    )


# ------------------------------------------------------- criteria 4, 5, and 6


SWEEP_EMBEDDER = NgramConfig(n=3, dim=64, seed=5)
SWEEP_LANGS = ["en", "fr"]


@pytest.fixture(scope="session")
def sweep_report(tmp_path_factory):
    """Defense sweep on the toy suite: 2 languages x 24 samples, attack fixed
    at 10 correction steps."""
    tmp_path = tmp_path_factory.mktemp("sweep")
    corpora = parallel_corpora(SWEEP_LANGS, 24, vocab_size=10, min_len=3, max_len=4, seed=9)
    paths = {}
    for lang, corpus in corpora.items():
        path = tmp_path / f"{lang}.jsonl"
        save_jsonl_corpus(corpus, path)
        paths[lang] = str(path)
    config = ExperimentConfig(
        corpora=paths,
        embedder=SWEEP_EMBEDDER,
        attack=AttackSweep(steps=[10], beams=[4], max_tokens=4),
        defense=DefenseSweep(
            lambdas=[0.0, 1e-3, 1e-2, 1e-1, 1.0], masking=True, language_agnostic=True
        ),
        seed=7,
        out_dir=str(tmp_path / "out"),
        test_size=24,
    )
    report = run_defense_sweep(config)
    return {row.defense: row for row in report.rows}


def test_criterion_4_noise_defense_trend(sweep_report):
    baseline = sweep_report["none"]
    lambdas = ["noise:0", "noise:0.001", "noise:0.01", "noise:0.1", "noise:1"]
    bleus = [sweep_report[label].metrics.bleu for label in lambdas]
    zero_exact = sweep_report["noise:0"].metrics == baseline.metrics
    trend = all(bleus[i + 1] <= bleus[i] + 2.0 for i in range(len(bleus) - 1))
    ndcg0 = sweep_report["noise:0"].ndcg
    small_noise_ok = abs(sweep_report["noise:0.001"].ndcg - ndcg0) <= 0.02
    heavy_noise_ok = sweep_report["noise:1"].ndcg < 0.5 * ndcg0
    check(
        "4 noise-defense trend",
        zero_exact and trend and small_noise_ok and heavy_noise_ok,
        f"lambda=0 equals baseline={zero_exact}; bleu {['%.1f' % b for b in bleus]} "
        f"non-increasing(2.0 slack)={trend}; ndcg@1e-3 delta "
        f"{abs(sweep_report['noise:0.001'].ndcg - ndcg0):.4f}<=0.02; "
        f"ndcg@1 {sweep_report['noise:1'].ndcg:.4f} < 0.5x{ndcg0:.4f}",
    )


def test_criterion_5_masking_defense_tradeoff(sweep_report):
    unmasked = sweep_report["none"].metrics.exact_match
    masked = sweep_report["mask"].metrics.exact_match
    attack_ok = unmasked > 0 and masked <= 0.5 * unmasked
    embedder = NgramEmbedder(SWEEP_EMBEDDER)
    small_ids = assign_language_ids(SWEEP_LANGS, scale=0.05)
    deltas = []
    for lang in SWEEP_LANGS:
        task = synthetic_retrieval_task(f"acc5-{lang}", lang, lang, seed=401)
        raw = evaluate_task(task, embedder)
        small = evaluate_task(task, embedder, DefenseConfig(masking=small_ids))
        deltas.append(abs(small - raw))
    retrieval_ok = all(d < 0.01 for d in deltas)
    check(
        "5 masking-defense trade-off",
        attack_ok and retrieval_ok,
        f"exact match masked {masked:.1f} <= 0.5 x unmasked {unmasked:.1f}; "
        f"small-id ndcg deltas {['%.4f' % d for d in deltas]} < 0.01",
    )


def test_criterion_6_language_agnostic_identity(sweep_report):
    embedder = NgramEmbedder(SWEEP_EMBEDDER)
    corpora = parallel_corpora(SWEEP_LANGS, 24, vocab_size=10, min_len=3, max_len=4, seed=9)
    batch = [
        embedder.embed(s.text).with_lang(lang)
        for lang in SWEEP_LANGS
        for s in corpora[lang]
    ]
    residual_means = compute_group_means(language_agnostic(batch))
    max_norm = max(float(np.linalg.norm(m)) for m in residual_means.values())
    deltas = []
    for lang in SWEEP_LANGS:
        task = synthetic_retrieval_task(f"acc6-{lang}", lang, lang, seed=402)
        raw = evaluate_task(task, embedder)
        agnostic = evaluate_task(task, embedder, DefenseConfig(language_agnostic=True))
        deltas.append(abs(agnostic - raw))
    retrieval_ok = all(d < 0.02 for d in deltas)
    check(
        "6 language-agnostic identity",
        max_norm < 1e-9 and retrieval_ok,
        f"max residual group-mean norm {max_norm:.2e} < 1e-9; "
        f"ndcg deltas {['%.4f' % d for d in deltas]} < 0.02",
    )


# ---------------------------------------------------------------- criterion 7


def test_criterion_7_metric_oracles():
    hand_value = abs(bleu("a b c d", "a b c e") - 42.045) <= 0.01
    maxima = (
        bleu("w x y z", "w x y z") == 100.0
        and rouge1_recall("w x", "w x") == 1.0
        and token_f1("w x", "w x") == 1.0
        and exact_match([("w", "w")]) == 100.0
    )
    ndcg_value = abs(ndcg_at_k(["other", "rel"], {"rel": 1}, 10) - 0.6309) <= 0.0001
    rng = derive_rng("acceptance-bleu-oracle")
    words = "a b c d e f g h North you ! 42".split()
    worst = 0.0
    for _ in range(1000):
        pred = " ".join(words[int(i)] for i in rng.integers(0, len(words), rng.integers(0, 9)))
        ref = " ".join(words[int(i)] for i in rng.integers(0, len(words), rng.integers(0, 9)))
        worst = max(worst, abs(bleu(pred, ref) - naive_bleu(pred, ref)))
    check(
        "7 metric oracles",
        hand_value and maxima and ndcg_value and worst <= 1e-9,
        f"bleu hand value ok={hand_value}; identical-input maxima ok={maxima}; "
        f"ndcg rank-2 ok={ndcg_value}; max |bleu - naive| over 1000 pairs {worst:.2e}",
    )


# ---------------------------------------------------------------- criterion 8


def test_criterion_8_translation_gain(tmp_path):
    formula = bleu_gain_pct(4.62, 12.4)
    formula_ok = abs(formula - 168.4) <= 0.5
    corpora = parallel_corpora(["en", "fr"], 10, vocab_size=10, min_len=3, max_len=4, seed=17)
    paths = {}
    for lang, corpus in corpora.items():
        path = tmp_path / f"{lang}.jsonl"
        save_jsonl_corpus(corpus, path)
        paths[lang] = str(path)
    dictionaries = {}
    for src, tgt in [("en", "fr"), ("fr", "en")]:
        dict_path = tmp_path / f"{src}-{tgt}.tsv"
        save_dictionary_tsv(bijective_dictionary(src, tgt, 10), dict_path)
        dictionaries[f"{src}-{tgt}"] = str(dict_path)
    config = ExperimentConfig(
        corpora=paths,
        embedder=NgramConfig(n=3, dim=192, seed=5),
        attack=AttackSweep(steps=[15], beams=[8], max_tokens=4),
        dictionaries=dictionaries,
        seed=19,
        out_dir=str(tmp_path / "out"),
        test_size=10,
    )
    gains = []
    for src, tgt in [("en", "fr"), ("fr", "en")]:
        report = run_crosslingual(config, src, tgt)
        pre = next(r for r in report.rows if r.experiment_id == "xling_pre").metrics.bleu
        post = next(r for r in report.rows if r.experiment_id == "xling_post").metrics.bleu
        gains.append((src, tgt, pre, post))
    sweep_ok = all(post >= pre for _, _, pre, post in gains)
    check(
        "8 translation gain",
        formula_ok and sweep_ok,
        f"gain(4.62 -> 12.4) = {formula:+.1f}% within 0.5 of +168.4%; "
        + "; ".join(f"{s}->{t} pre {pre:.1f} post {post:.1f}" for s, t, pre, post in gains),
    )


# ---------------------------------------------------------------- criterion 9


def test_criterion_9_wire_parity(tmp_path):
    corpora = parallel_corpora(["en", "fr"], 6, vocab_size=8, min_len=3, max_len=4, seed=23)
    paths = {}
    for lang, corpus in corpora.items():
        path = tmp_path / f"{lang}.jsonl"
        save_jsonl_corpus(corpus, path)
        paths[lang] = str(path)
    config = ExperimentConfig(
        corpora=paths,
        embedder=NgramConfig(n=3, dim=64, seed=29),
        attack=AttackSweep(steps=[1, 5], beams=[1, 4], max_tokens=4),
        seed=31,
        out_dir=str(tmp_path / "out"),
        test_size=6,
    )
    start = time.perf_counter()
    local_report = run_reconstruction(config)
    local_time = time.perf_counter() - start
    local_csv = emit_report(local_report, tmp_path / "local.csv")

    embedder = NgramEmbedder(config.embedder)
    server = eaas_serve(embedder)
    try:
        start = time.perf_counter()
        remote_report = run_reconstruction(config, remote=server.address)
        remote_time = time.perf_counter() - start
    finally:
        server.stop()
    remote_csv = emit_report(remote_report, tmp_path / "remote.csv")

    identical = csv_rows_without_wall(local_csv) == csv_rows_without_wall(remote_csv)
    queries_equal = [r.queries for r in local_report.rows] == [
        r.queries for r in remote_report.rows
    ]
    ratio = remote_time / local_time
    check(
        "9 wire parity",
        identical and queries_equal and ratio < 5.0,
        f"CSV identical minus wall clock={identical}; query counts equal={queries_equal}; "
        f"remote/local runtime {remote_time:.2f}s/{local_time:.2f}s = {ratio:.2f}x < 5x",
    )
