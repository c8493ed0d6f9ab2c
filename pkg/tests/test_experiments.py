import numpy as np
import pytest
from scipy import stats

from concord.constraints import ConstraintSet, cannot_link, must_link
from concord.corpus import LabelAssignment, gen_synthetic_corpus
from concord.errors import (
    InsufficientDataError,
    InvalidParameterError,
    SeedCoverageError,
)
from concord.evaluation import informativeness
from concord.experiments import (
    CurveSeries,
    ExperimentConfig,
    ExperimentData,
    make_synthetic_annotators,
    run_annotator_k_sweep,
    run_blind_test,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_experiment_4,
    run_seeding_comparison,
    sign_test_greater,
    write_curves,
    write_scatter,
)


@pytest.fixture(scope="module")
def small_data():
    corpus, truth = gen_synthetic_corpus(6, [7, 1, 3, 2, 1, 11], 20, 0.0, rng_seed=1)
    annotators = make_synthetic_annotators(truth, 2, rng_seed=5, flip_fraction=0.2)
    return ExperimentData.from_objects(corpus, truth, annotators)


def small_config(**kw):
    defaults = dict(
        constraint_grid=(10, 60, 300),
        trials=2,
        trials_seeding=4,
        metric="cosine",
        w=10.0,
        rng_seed=0,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


# --- config -----------------------------------------------------------------


def test_config_rejects_bad_grid():
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(constraint_grid=(30, 10))
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(constraint_grid=(0, 10))


def test_config_file_round_trip(tmp_path):
    cfg = small_config(corpus_ref="corpus.jsonl")
    path = tmp_path / "exp.json"
    cfg.to_file(str(path))
    again = ExperimentConfig.from_file(str(path))
    assert again == cfg


# --- seeding comparison -----------------------------------------------------


def test_seeding_comparison_direction(small_data):
    cfg = small_config(trials_seeding=30)
    result = run_seeding_comparison(cfg, small_data)
    assert result.trials == 30
    assert np.mean(result.seeded_nmi) >= np.mean(result.random_nmi)
    p = sign_test_greater(result.seeded_nmi, result.random_nmi)
    assert p < 0.05


def test_seeding_comparison_k1_zero_mi(small_data):
    cfg = small_config(k_override=1, trials_seeding=2)
    result = run_seeding_comparison(cfg, small_data)
    assert max(result.random_mi) == pytest.approx(0.0, abs=1e-12)
    assert max(result.seeded_mi) == pytest.approx(0.0, abs=1e-12)


def test_seeding_summary_shape(small_data):
    result = run_seeding_comparison(small_config(trials_seeding=3), small_data)
    summary = result.summary()
    assert set(summary) == {"k", "trials", "random", "seeded"}
    assert set(summary["random"]) == {"mi", "nmi"}
    assert "mean" in summary["random"]["mi"] and "std" in summary["random"]["mi"]


# --- k sweep ----------------------------------------------------------------


def test_k_sweep_shape_and_k(small_data):
    cfg = small_config(trials=2)
    table = run_annotator_k_sweep(cfg, small_data)
    assert set(table) == set(small_data.annotators)
    for ann, rows in table.items():
        assert rows["k"] == small_data.annotators[ann].k_declared
        for algo in ("standard", "seeded"):
            assert len(rows[algo]["mi"]["values"]) == 2


def test_k_sweep_constant_annotator_zero_mi(small_data):
    flat = LabelAssignment("flat", {d: "only" for d in small_data.corpus.doc_ids})
    data = ExperimentData.from_objects(
        small_data.corpus, small_data.truth, {"flat": flat}
    )
    table = run_annotator_k_sweep(small_config(trials=2), data)
    assert table["flat"]["standard"]["mi"]["mean"] == pytest.approx(0.0, abs=1e-12)


def test_k_sweep_truth_annotator_seeded_perfect(small_data):
    data = ExperimentData.from_objects(
        small_data.corpus, small_data.truth, {"echo": small_data.truth}
    )
    table = run_annotator_k_sweep(small_config(trials=3), data)
    assert table["echo"]["seeded"]["nmi"]["mean"] == pytest.approx(1.0)


# --- blind test ---------------------------------------------------------------


@pytest.fixture(scope="module")
def blind_data():
    corpus, truth = gen_synthetic_corpus(4, [8, 8, 8, 8], 25, 0.0, rng_seed=11)
    return ExperimentData.from_objects(corpus, truth, {}), truth


def seeds_subset(truth, per_class=2):
    picked = {}
    count = {}
    for doc_id in sorted(truth.labels):
        label = truth.labels[doc_id]
        if count.get(label, 0) < per_class:
            picked[doc_id] = label
            count[label] = count.get(label, 0) + 1
    return LabelAssignment("seeds", picked)


def test_blind_test_runs_and_alpha(blind_data):
    data, truth = blind_data
    seeds = seeds_subset(truth)
    result = run_blind_test(small_config(), data, seeds, runs=5)
    assert len(result.labelings) == 5
    assert len(result.blind_ids) == 32 - len(seeds.labels)
    assert -1.0 < result.alpha <= 1.0
    cm = result.confusion(0, 1)
    assert cm.counts.sum() == len(result.blind_ids)


def test_blind_test_single_run_insufficient(blind_data):
    data, truth = blind_data
    with pytest.raises(InsufficientDataError):
        run_blind_test(small_config(), data, seeds_subset(truth), runs=1)


def test_blind_test_seed_coverage(blind_data):
    data, truth = blind_data
    partial = seeds_subset(truth)
    partial = LabelAssignment(
        "seeds", {d: l for d, l in partial.labels.items() if l != 0}
    )
    with pytest.raises(SeedCoverageError):
        run_blind_test(small_config(), data, partial, runs=3, k=4)


def test_blind_test_identical_seeds_alpha_one(blind_data):
    # forcing every run to one representative per class makes runs identical
    data, truth = blind_data
    seeds = seeds_subset(truth, per_class=1)
    result = run_blind_test(small_config(), data, seeds, runs=3)
    assert result.alpha == pytest.approx(1.0)


# --- experiment 1 -------------------------------------------------------------


def test_experiment_1_trend(small_data):
    cfg = small_config()
    series = run_experiment_1(cfg, small_data)
    by_id = {s.series_id: s for s in series}
    for ann in small_data.annotators:
        curve = by_id[(ann, "nmi_vs_own")]
        assert curve.x == (10, 60, 300)
        assert curve.mean_y[-1] == pytest.approx(1.0)
        rho = stats.spearmanr(curve.x, curve.mean_y).statistic
        assert rho > 0
        assert all(m["w"] == 10.0 for m in curve.manifests)


def test_experiment_grid_zero_rejected():
    with pytest.raises(InvalidParameterError):
        small_config(constraint_grid=(0, 10))


# --- experiment 2 -------------------------------------------------------------


def test_experiment_2_reference_self_constraints_zero(small_data):
    from concord.clustering import kmeans
    from concord.common import derive_seed
    from concord.constraints import constraints_from_labels
    from concord.experiments import _T_EXP_REFERENCE

    cfg = small_config(trials=1, constraint_grid=(20,))
    # an annotator whose labels ARE the unconstrained partition of trial 0
    ann = "mirror"
    # the reference uses ann_idx=0 within the sorted {mirror} annotator set
    seed = derive_seed(cfg.rng_seed, _T_EXP_REFERENCE, 2, 0, 0)
    reference = kmeans(small_data.matrix, 6, metric=cfg.metric, rng_seed=seed)
    labels = LabelAssignment(
        ann,
        {d: int(reference.assignment[i]) for i, d in enumerate(small_data.corpus.doc_ids)},
    )
    data = ExperimentData.from_objects(small_data.corpus, small_data.truth, {ann: labels})
    series = run_experiment_2(cfg, data)
    info = {s.series_id: s for s in series}[(ann, "informativeness")]
    assert info.mean_y == (0.0,)


def test_experiment_2_anti_partition_full_informativeness(small_data):
    from concord.clustering import kmeans
    from concord.common import derive_seed
    from concord.evaluation import informativeness as info_fn
    from concord.experiments import _T_EXP_REFERENCE

    cfg = small_config(trials=1, constraint_grid=(20,))
    seed = derive_seed(cfg.rng_seed, _T_EXP_REFERENCE, 2, 0, 0)
    reference = kmeans(small_data.matrix, 6, metric=cfg.metric, rng_seed=seed)
    # invert every pair relation of the reference partition by hand
    assign = reference.assignment
    must = {must_link(a, b) for a in range(8) for b in range(a + 1, 8) if assign[a] != assign[b]}
    cannot = {cannot_link(a, b) for a in range(8) for b in range(a + 1, 8) if assign[a] == assign[b]}
    anti = ConstraintSet(must=must, cannot=cannot)
    assert info_fn(anti, reference) == 1.0


def test_experiment_2_emits_three_series_per_annotator(small_data):
    cfg = small_config(trials=1, constraint_grid=(10, 20))
    series = run_experiment_2(cfg, small_data)
    kinds = {s.series_id[1] for s in series}
    assert kinds == {"informativeness", "mi_vs_truth", "nmi_vs_truth"}
    assert len(series) == 3 * len(small_data.annotators)


# --- experiment 3 -------------------------------------------------------------


def test_experiment_3_identical_annotator_zero_informativeness(small_data):
    # an annotator identical to the truth, same pairs, same seeds: with the
    # full grid the reference recovers its own labels so nothing is violated
    data = ExperimentData.from_objects(
        small_data.corpus, small_data.truth, {"echo2": small_data.truth}
    )
    cfg = small_config(trials=1, constraint_grid=(300,))
    series = run_experiment_3(cfg, data)
    info = {s.series_id: s for s in series}[("echo2", "informativeness")]
    assert info.mean_y[0] == pytest.approx(0.0)


def test_experiment_3_reference_recomputed_per_grid_point(small_data):
    cfg = small_config(trials=1, constraint_grid=(10, 60))
    series = run_experiment_3(cfg, small_data)
    refs = [m["reference"] for m in series[0].manifests]
    assert refs[0] != refs[1]  # different seeds / constraint counts


# --- experiment 4 -------------------------------------------------------------


def test_experiment_4_points_and_quadrants(small_data):
    cfg = small_config(trials=1, constraint_grid=(10, 40))
    series = run_experiment_4(cfg, small_data)
    assert len(series) == 2 * len(small_data.annotators)
    for s in series:
        assert len(s.points) == 2
        assert sum(s.quadrants.values()) == 2
        assert set(s.dispersion) == {"coherence_std", "informativeness_std"}
        for coh, info in s.points:
            assert 0.0 <= coh <= 1.0
            assert 0.0 <= info <= 1.0


def test_experiment_4_all_must_link_edge(table_matrix):
    only_must = ConstraintSet(must={must_link(0, 1), must_link(2, 3)}, closed=True)
    from concord.evaluation import coherence

    assert coherence(only_must, table_matrix) == 1.0


# --- reproducibility and scheduling ------------------------------------------


def test_experiment_1_reproducible_files(tmp_path, small_data):
    cfg = small_config(trials=1, constraint_grid=(10, 30))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    write_curves(run_experiment_1(cfg, small_data), str(out_a), "exp1")
    write_curves(run_experiment_1(cfg, small_data), str(out_b), "exp1")
    for name in sorted(p.name for p in out_a.iterdir()):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_experiment_1_parallel_matches_serial(small_data):
    cfg = small_config(trials=2, constraint_grid=(10, 30))
    serial = run_experiment_1(cfg, small_data, jobs=1)
    parallel = run_experiment_1(cfg, small_data, jobs=4)
    assert [s.to_record() for s in serial] == [s.to_record() for s in parallel]


def test_nested_grid_mode_prefixes(small_data):
    cfg = small_config(grid_mode="nested", trials=1, constraint_grid=(10, 20))
    from concord.experiments import _sample_constraints

    ann = sorted(small_data.annotators)[0]
    labels = small_data.annotators[ann]
    index_of = small_data.corpus.index_of
    small = _sample_constraints(labels, 10, cfg, 0, 0, index_of)
    large = _sample_constraints(labels, 20, cfg, 0, 0, index_of)
    assert set(small.all_constraints()) <= set(large.all_constraints())


def test_scatter_files_written(tmp_path, small_data):
    cfg = small_config(trials=1, constraint_grid=(10,))
    paths = write_scatter(run_experiment_4(cfg, small_data), str(tmp_path), "exp4")
    assert any(p.endswith("exp4_records.jsonl") for p in paths)
    assert len(paths) == 1 + 2 * len(small_data.annotators)


def test_trial_schedule_shuffle_invariance(small_data):
    # results must not depend on the order cells are evaluated in
    import random

    from concord.experiments import _cells

    cfg = small_config(trials=2, constraint_grid=(10, 30))
    annotators = sorted(small_data.annotators)
    index_of = small_data.corpus.index_of

    def worker(ann_idx, ann, g_idx, g, t):
        from concord.common import derive_seed
        from concord.experiments import _T_EXP_RUN, _sample_constraints
        from concord.pckmeans import PckConfig, pckmeans

        labels = small_data.annotators[ann]
        cset = _sample_constraints(labels, g, cfg, ann_idx, t, index_of)
        seed = derive_seed(cfg.rng_seed, _T_EXP_RUN, 1, ann_idx, g, t)
        pck_cfg = PckConfig(k=labels.k_declared, w=cfg.w, metric=cfg.metric, rng_seed=seed)
        result = pckmeans(small_data.matrix, cset, pck_cfg)
        return result.objective

    cells = list(_cells(cfg, annotators))
    in_order = {cell: worker(*cell) for cell in cells}
    shuffled = cells[:]
    random.Random(99).shuffle(shuffled)
    out_of_order = {cell: worker(*cell) for cell in shuffled}
    assert in_order == out_of_order


def test_cell_records_one_per_cell(tmp_path, small_data):
    cfg = small_config(trials=2, constraint_grid=(10, 30))
    cells = []
    series = run_experiment_1(cfg, small_data, cell_sink=cells)
    n_annotators = len(small_data.annotators)
    assert len(cells) == n_annotators * 2 * 2  # annotators x grid x trials
    for record in cells:
        assert set(record) == {"experiment", "annotator", "n_constraints", "trial",
                               "values", "manifest"}
        assert set(record["values"]) == {"mi_vs_own", "nmi_vs_own"}
    paths = write_curves(series, str(tmp_path), "exp1", cells=cells)
    assert any(p.endswith("exp1_cells.jsonl") for p in paths)
    lines = (tmp_path / "exp1_cells.jsonl").read_text().splitlines()
    assert len(lines) == len(cells)


def test_cell_records_parallel_match_serial(small_data):
    cfg = small_config(trials=2, constraint_grid=(10,))
    serial, parallel = [], []
    run_experiment_2(cfg, small_data, jobs=1, cell_sink=serial)
    run_experiment_2(cfg, small_data, jobs=3, cell_sink=parallel)
    assert serial == parallel
