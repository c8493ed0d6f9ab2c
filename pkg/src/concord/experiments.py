"""Batch evaluation harness: seeding comparison, per-annotator k sweep,
automated-annotator blind test, and the four constraint-grid experiments.

Every (annotator, grid point, trial) cell derives its own seed from the
config seed and its coordinates, so cells can run in any order or in
parallel and reports come out byte-identical for a fixed config.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .clustering import Clustering, kmeans, seeded_init, SeedSet
from .common import derive_seed, stable_json
from .constraints import (
    ConstraintSet,
    cannot_link,
    constraints_from_labels,
    must_link,
    transitive_closure,
)
from .corpus import Corpus, FeatureMatrix, LabelAssignment, build_vocabulary, vectorize
from .errors import InsufficientDataError, InvalidParameterError, SeedCoverageError
from .evaluation import (
    ConfusionMatrix,
    coherence,
    confusion_matrix,
    contingency,
    informativeness,
    krippendorff_alpha,
    mutual_information,
    nmi,
)
from .pckmeans import PckConfig, pckmeans

# seed-path tags for the derivation scheme (documented in the CLI help)
_T_SEEDING_RANDOM = 1
_T_SEEDING_SEEDED = 2
_T_KSWEEP = 3
_T_BLIND = 4
_T_EXP_CONSTRAINTS = 5
_T_EXP_RUN = 6
_T_EXP_REFERENCE = 7
_T_NESTED_ORDER = 8

GRID_DEFAULT = tuple(range(10, 301, 10))


@dataclass
class ExperimentConfig:
    """Knobs for the harness; file form is a flat JSON object."""

    corpus_ref: str | None = None
    labels_ref: str | None = None
    truth_annotator: str = "truth"
    seeds_annotator: str | None = None
    constraint_grid: tuple[int, ...] = GRID_DEFAULT
    trials: int = 5
    trials_seeding: int = 10
    metric: str = "cosine"
    w: float = 1.0
    rng_seed: int = 0
    grid_mode: str = "fresh_per_trial"
    max_iters: int = 100
    k_override: int | None = None

    def __post_init__(self):
        if list(self.constraint_grid) != sorted(self.constraint_grid):
            raise InvalidParameterError("constraint grid must be ascending")
        if any(g < 1 for g in self.constraint_grid):
            raise InvalidParameterError("grid points must be >= 1")
        if self.trials < 1 or self.trials_seeding < 1:
            raise InvalidParameterError("trial counts must be >= 1")
        if self.grid_mode not in ("fresh_per_trial", "nested"):
            raise InvalidParameterError(f"unknown grid_mode {self.grid_mode!r}")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidParameterError(f"{path}: bad config json: {exc}") from exc
        if "constraint_grid" in raw:
            raw["constraint_grid"] = tuple(raw["constraint_grid"])
        try:
            return cls(**raw)
        except TypeError as exc:
            raise InvalidParameterError(f"{path}: unknown config field: {exc}") from exc

    def to_file(self, path: str) -> None:
        rec = {
            "corpus_ref": self.corpus_ref,
            "labels_ref": self.labels_ref,
            "truth_annotator": self.truth_annotator,
            "seeds_annotator": self.seeds_annotator,
            "constraint_grid": list(self.constraint_grid),
            "trials": self.trials,
            "trials_seeding": self.trials_seeding,
            "metric": self.metric,
            "w": self.w,
            "rng_seed": self.rng_seed,
            "grid_mode": self.grid_mode,
            "max_iters": self.max_iters,
            "k_override": self.k_override,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True, indent=2) + "\n")


@dataclass
class ExperimentData:
    """Resolved inputs: corpus, matrix, annotators, and the reference truth."""

    corpus: Corpus
    matrix: FeatureMatrix
    annotators: dict[str, LabelAssignment]
    truth: LabelAssignment

    @classmethod
    def load(cls, config: ExperimentConfig) -> "ExperimentData":
        from .constraints import read_labels

        if config.corpus_ref is None:
            raise InvalidParameterError("config has no corpus_ref")
        corpus = Corpus.from_jsonl(config.corpus_ref)
        matrix = vectorize(corpus, build_vocabulary(corpus))
        labelings = corpus.label_assignments()
        if config.labels_ref:
            labelings.update(read_labels(config.labels_ref))
        if config.truth_annotator not in labelings:
            raise InvalidParameterError(
                f"truth annotator {config.truth_annotator!r} not found in labels"
            )
        truth = labelings[config.truth_annotator]
        annotators = {a: l for a, l in labelings.items() if a != config.truth_annotator}
        return cls(corpus, matrix, annotators, truth)

    @classmethod
    def from_objects(
        cls, corpus: Corpus, truth: LabelAssignment, annotators: dict[str, LabelAssignment]
    ) -> "ExperimentData":
        matrix = vectorize(corpus, build_vocabulary(corpus))
        return cls(corpus, matrix, annotators, truth)


@dataclass
class CurveSeries:
    """Per-grid-point mean/std of one quantity for one annotator."""

    series_id: tuple[str, str]
    x: tuple[int, ...]
    mean_y: tuple[float, ...]
    std_y: tuple[float, ...]
    manifests: tuple[dict, ...] = ()

    def to_record(self) -> dict:
        return {
            "series": list(self.series_id),
            "x": list(self.x),
            "mean_y": list(self.mean_y),
            "std_y": list(self.std_y),
            "manifests": list(self.manifests),
        }


def _mi_nmi(labels: LabelAssignment, clustering: Clustering, index_of) -> tuple[float, float]:
    table = contingency(labels, clustering, index_of)
    mi, _, _ = mutual_information(table)
    return mi, nmi(table)


def _annotator_order(annotators: dict[str, LabelAssignment]) -> list[str]:
    return sorted(annotators)


def _sample_constraints(
    labels: LabelAssignment,
    n_pairs: int,
    config: ExperimentConfig,
    ann_idx: int,
    trial: int,
    index_of,
) -> ConstraintSet:
    """Grid sampling per grid_mode: fresh draws, or prefixes of one shuffle."""
    if config.grid_mode == "fresh_per_trial":
        seed = derive_seed(config.rng_seed, _T_EXP_CONSTRAINTS, ann_idx, n_pairs, trial)
        return constraints_from_labels(labels, n_pairs, seed, index_of)
    seed = derive_seed(config.rng_seed, _T_NESTED_ORDER, ann_idx, trial)
    total = len(labels.labels) * (len(labels.labels) - 1) // 2
    full = constraints_from_labels(labels, total, seed, index_of)
    ordered = sorted(full.all_constraints())
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    picked = [ordered[int(i)] for i in perm[:n_pairs]]
    must = {c for c in picked if c.kind == "must_link"}
    cannot = {c for c in picked if c.kind == "cannot_link"}
    return ConstraintSet(must=must, cannot=cannot, closed=False)


# --- seeding comparison ----------------------------------------------------


@dataclass
class SeedingComparison:
    k: int
    trials: int
    random_mi: tuple[float, ...]
    seeded_mi: tuple[float, ...]
    random_nmi: tuple[float, ...]
    seeded_nmi: tuple[float, ...]

    def summary(self) -> dict:
        def ms(vals):
            arr = np.asarray(vals)
            return {"mean": float(arr.mean()), "std": float(arr.std())}

        return {
            "k": self.k,
            "trials": self.trials,
            "random": {"mi": ms(self.random_mi), "nmi": ms(self.random_nmi)},
            "seeded": {"mi": ms(self.seeded_mi), "nmi": ms(self.seeded_nmi)},
        }


def run_seeding_comparison(config: ExperimentConfig, data: ExperimentData) -> SeedingComparison:
    """Paired trials of random-init vs representative-seeded K-Means.

    Both arms of trial t cluster the full corpus at the truth labeling's k
    and are scored (mi and nmi) against that labeling.
    """
    truth = data.truth
    index_of = data.corpus.index_of
    k = config.k_override or truth.k_declared
    seed_set = SeedSet.from_labels(truth, index_of) if k == truth.k_declared else None
    random_mi, seeded_mi, random_nmi, seeded_nmi = [], [], [], []
    for t in range(config.trials_seeding):
        rnd = kmeans(
            data.matrix,
            k,
            metric=config.metric,
            rng_seed=derive_seed(config.rng_seed, _T_SEEDING_RANDOM, t),
            max_iters=config.max_iters,
        )
        mi_r, nmi_r = _mi_nmi(truth, rnd, index_of)
        if seed_set is not None:
            centroids = seeded_init(
                seed_set,
                data.matrix,
                mode="representative",
                rng_seed=derive_seed(config.rng_seed, _T_SEEDING_SEEDED, t),
            )
            sdd = kmeans(
                data.matrix, k, init=centroids, metric=config.metric, max_iters=config.max_iters
            )
        else:
            sdd = rnd  # k override without matching seeds: degenerate comparison
        mi_s, nmi_s = _mi_nmi(truth, sdd, index_of)
        random_mi.append(mi_r)
        seeded_mi.append(mi_s)
        random_nmi.append(nmi_r)
        seeded_nmi.append(nmi_s)
    return SeedingComparison(
        k, config.trials_seeding,
        tuple(random_mi), tuple(seeded_mi), tuple(random_nmi), tuple(seeded_nmi),
    )


def sign_test_greater(paired_a, paired_b) -> float:
    """One-sided sign test p-value for median(a - b) > 0; ties dropped."""
    wins = sum(1 for a, b in zip(paired_a, paired_b) if a > b)
    losses = sum(1 for a, b in zip(paired_a, paired_b) if a < b)
    n = wins + losses
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)


# --- per-annotator k sweep -------------------------------------------------


def run_annotator_k_sweep(config: ExperimentConfig, data: ExperimentData) -> dict:
    """Standard vs seeded K-Means at each annotator's own cluster count.

    Scores are mi (and nmi) against the annotator's own labels, averaged
    over config.trials runs.
    """
    index_of = data.corpus.index_of
    out: dict[str, dict] = {}
    for ann_idx, ann in enumerate(_annotator_order(data.annotators)):
        labels = data.annotators[ann]
        k = labels.k_declared
        seed_set = SeedSet.from_labels(labels, index_of)
        rows = {"k": k, "standard": {"mi": [], "nmi": []}, "seeded": {"mi": [], "nmi": []}}
        for t in range(config.trials):
            seed = derive_seed(config.rng_seed, _T_KSWEEP, ann_idx, t)
            std = kmeans(data.matrix, k, metric=config.metric, rng_seed=seed,
                         max_iters=config.max_iters)
            centroids = seeded_init(seed_set, data.matrix, mode="representative", rng_seed=seed)
            sdd = kmeans(data.matrix, k, init=centroids, metric=config.metric,
                         max_iters=config.max_iters)
            for name, run in (("standard", std), ("seeded", sdd)):
                mi, nmi_v = _mi_nmi(labels, run, index_of)
                rows[name]["mi"].append(mi)
                rows[name]["nmi"].append(nmi_v)
        for name in ("standard", "seeded"):
            for q in ("mi", "nmi"):
                arr = np.asarray(rows[name][q])
                rows[name][q] = {
                    "mean": float(arr.mean()), "std": float(arr.std()), "values": arr.tolist(),
                }
        out[ann] = rows
    return out


# --- automated-annotator blind test ---------------------------------------


@dataclass
class BlindTestResult:
    labelings: list[LabelAssignment]
    alpha: float
    category_names: tuple[str, ...]
    assignments: np.ndarray  # runs x blind-docs cluster ids
    blind_ids: tuple[str, ...]

    def confusion(self, i: int, j: int) -> ConfusionMatrix:
        return confusion_matrix(
            self.assignments[i], self.assignments[j], list(self.category_names)
        )


def run_blind_test(
    config: ExperimentConfig,
    data: ExperimentData,
    seeds_from: LabelAssignment,
    runs: int = 10,
    k: int | None = None,
) -> BlindTestResult:
    """Repeated seeded K-Means runs treated as automated annotators.

    Each run draws fresh category representatives from ``seeds_from`` and
    clusters the whole corpus; the labelings of the documents *outside* the
    seed set are compared across runs with Krippendorff's alpha.
    """
    if runs < 2:
        raise InsufficientDataError("agreement needs at least two runs")
    k = k or seeds_from.k_declared
    if seeds_from.k_declared < k:
        raise SeedCoverageError(
            f"seed labels cover {seeds_from.k_declared} categories, need {k}"
        )
    index_of = data.corpus.index_of
    seed_set = SeedSet.from_labels(seeds_from, index_of)
    seed_docs = set(seeds_from.labels)
    blind_ids = tuple(d for d in data.corpus.doc_ids if d not in seed_docs)
    if not blind_ids:
        raise InvalidParameterError("no blind documents outside the seed set")
    cats = tuple(str(c) for c in seeds_from.categories)
    labelings = []
    rows = []
    for r in range(runs):
        centroids = seeded_init(
            seed_set, data.matrix, mode="representative",
            rng_seed=derive_seed(config.rng_seed, _T_BLIND, r),
        )
        run = kmeans(data.matrix, k, init=centroids, metric=config.metric,
                     max_iters=config.max_iters)
        assigned = {d: int(run.assignment[index_of[d]]) for d in blind_ids}
        labelings.append(LabelAssignment(f"auto{r}", assigned))
        rows.append([assigned[d] for d in blind_ids])
    alpha = krippendorff_alpha(labelings)
    return BlindTestResult(labelings, alpha, cats, np.asarray(rows), blind_ids)


# --- constraint-grid experiments ------------------------------------------


def _run_manifest(config: ExperimentConfig, extra: dict) -> dict:
    base = {
        "metric": config.metric,
        "w": config.w,
        "grid_mode": config.grid_mode,
        "rng_seed": config.rng_seed,
    }
    base.update(extra)
    return base


def _cells(config, annotators):
    for ann_idx, ann in enumerate(annotators):
        for g_idx, g in enumerate(config.constraint_grid):
            for t in range(config.trials):
                yield ann_idx, ann, g_idx, g, t


def _run_cells(config: ExperimentConfig, annotators, worker, jobs: int = 1) -> dict:
    """Evaluate every (annotator, grid, trial) cell; order-independent."""
    cells = list(_cells(config, annotators))
    results: dict[tuple, dict] = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, value in pool.map(lambda c: (c, worker(*c)), cells):
                results[key] = value
    else:
        for cell in cells:
            results[cell] = worker(*cell)
    return results


def _collect_cells(config: ExperimentConfig, results: dict, tag: str, sink) -> None:
    """Flatten per-cell results into report records, one per cell."""
    if sink is None:
        return
    for (ann_idx, ann, g_idx, g, t), values in sorted(results.items()):
        record = {
            "experiment": tag,
            "annotator": ann,
            "n_constraints": g,
            "trial": t,
            "values": {
                k: v for k, v in values.items() if isinstance(v, (int, float))
            },
            "manifest": _run_manifest(config, {"experiment": tag, "annotator": ann,
                                               "n_constraints": g, "trial": t}),
        }
        sink.append(record)


def _aggregate_curves(
    config: ExperimentConfig, annotators, results: dict, quantities: list[str], tag: str
) -> list[CurveSeries]:
    series = []
    for ann_idx, ann in enumerate(annotators):
        for q in quantities:
            means, stds, manifests = [], [], []
            for g_idx, g in enumerate(config.constraint_grid):
                vals = [
                    results[(ann_idx, ann, g_idx, g, t)][q] for t in range(config.trials)
                ]
                arr = np.asarray(vals)
                means.append(float(arr.mean()))
                stds.append(float(arr.std()))
                manifests.append(
                    _run_manifest(config, {"experiment": tag, "annotator": ann, "n_constraints": g})
                )
            series.append(
                CurveSeries((ann, q), tuple(config.constraint_grid),
                            tuple(means), tuple(stds), tuple(manifests))
            )
    return series


def run_experiment_1(
    config: ExperimentConfig, data: ExperimentData, jobs: int = 1, cell_sink: list | None = None
) -> list[CurveSeries]:
    """Replication curves: constrained clustering scored against the
    annotator's own labels across the constraint grid."""
    index_of = data.corpus.index_of
    annotators = _annotator_order(data.annotators)

    def worker(ann_idx, ann, g_idx, g, t):
        labels = data.annotators[ann]
        cset = _sample_constraints(labels, g, config, ann_idx, t, index_of)
        run_seed = derive_seed(config.rng_seed, _T_EXP_RUN, 1, ann_idx, g, t)
        cfg = PckConfig(k=labels.k_declared, w=config.w, metric=config.metric,
                        max_iters=config.max_iters, rng_seed=run_seed)
        result = pckmeans(data.matrix, cset, cfg)
        mi, nmi_v = _mi_nmi(labels, result.clustering, index_of)
        return {"mi_vs_own": mi, "nmi_vs_own": nmi_v}

    results = _run_cells(config, annotators, worker, jobs)
    _collect_cells(config, results, "exp1", cell_sink)
    return _aggregate_curves(config, annotators, results, ["mi_vs_own", "nmi_vs_own"], "exp1")


def run_experiment_2(
    config: ExperimentConfig, data: ExperimentData, jobs: int = 1, cell_sink: list | None = None
) -> list[CurveSeries]:
    """Informativeness against the unconstrained baseline, plus accuracy
    against the reference truth labeling.

    The unconstrained reference partition for trial t is computed once per
    (annotator, trial) with the same derived seed, k, and metric as that
    trial's constrained runs, and shared across the grid.
    """
    index_of = data.corpus.index_of
    annotators = _annotator_order(data.annotators)
    reference_cache: dict[tuple[int, int], Clustering] = {}

    def reference_for(ann_idx: int, ann: str, t: int) -> Clustering:
        key = (ann_idx, t)
        if key not in reference_cache:
            seed = derive_seed(config.rng_seed, _T_EXP_REFERENCE, 2, ann_idx, t)
            k = data.annotators[ann].k_declared
            reference_cache[key] = kmeans(
                data.matrix, k, metric=config.metric, rng_seed=seed, max_iters=config.max_iters
            )
        return reference_cache[key]

    def worker(ann_idx, ann, g_idx, g, t):
        labels = data.annotators[ann]
        cset = _sample_constraints(labels, g, config, ann_idx, t, index_of)
        closed = transitive_closure(cset)
        reference = reference_for(ann_idx, ann, t)
        info = informativeness(cset, reference)
        run_seed = derive_seed(config.rng_seed, _T_EXP_REFERENCE, 2, ann_idx, t)
        cfg = PckConfig(k=labels.k_declared, w=config.w, metric=config.metric,
                        max_iters=config.max_iters, rng_seed=run_seed)
        result = pckmeans(data.matrix, closed, cfg)
        mi, nmi_v = _mi_nmi(data.truth, result.clustering, index_of)
        return {"informativeness": info, "mi_vs_truth": mi, "nmi_vs_truth": nmi_v}

    # precompute references sequentially so parallel cells share them safely
    for ann_idx, ann in enumerate(annotators):
        for t in range(config.trials):
            reference_for(ann_idx, ann, t)
    results = _run_cells(config, annotators, worker, jobs)
    _collect_cells(config, results, "exp2", cell_sink)
    return _aggregate_curves(
        config, annotators, results, ["informativeness", "mi_vs_truth", "nmi_vs_truth"], "exp2"
    )


def run_experiment_3(
    config: ExperimentConfig, data: ExperimentData, jobs: int = 1, cell_sink: list | None = None
) -> list[CurveSeries]:
    """Informativeness against a constrained reference built from the truth
    labeling with the same number of constraints, recomputed per grid point."""
    index_of = data.corpus.index_of
    annotators = _annotator_order(data.annotators)
    reference_cache: dict[tuple[int, int], tuple[Clustering, dict]] = {}

    def reference_for(g: int, t: int) -> tuple[Clustering, dict]:
        key = (g, t)
        if key not in reference_cache:
            c_seed = derive_seed(config.rng_seed, _T_EXP_CONSTRAINTS, 3, g, t)
            truth_cset = constraints_from_labels(data.truth, g, c_seed, index_of)
            run_seed = derive_seed(config.rng_seed, _T_EXP_REFERENCE, 3, g, t)
            cfg = PckConfig(k=data.truth.k_declared, w=config.w, metric=config.metric,
                            max_iters=config.max_iters, rng_seed=run_seed)
            result = pckmeans(data.matrix, truth_cset, cfg)
            reference_cache[key] = (result.clustering, result.manifest())
        return reference_cache[key]

    def worker(ann_idx, ann, g_idx, g, t):
        labels = data.annotators[ann]
        cset = _sample_constraints(labels, g, config, ann_idx, t, index_of)
        reference, manifest = reference_for(g, t)
        return {"informativeness": informativeness(cset, reference),
                "reference_manifest": manifest}

    for g in config.constraint_grid:
        for t in range(config.trials):
            reference_for(g, t)
    results = _run_cells(config, annotators, worker, jobs)
    _collect_cells(config, results, "exp3", cell_sink)
    series = _aggregate_curves(config, annotators, results, ["informativeness"], "exp3")
    for ann_idx, (s, ann) in enumerate(zip(series, annotators)):
        enriched = []
        for g_idx, g in enumerate(config.constraint_grid):
            ref = results[(ann_idx, ann, g_idx, g, 0)]["reference_manifest"]
            enriched.append({**s.manifests[g_idx], "reference": ref})
        s.manifests = tuple(enriched)
    return series


@dataclass
class ScatterSeries:
    series_id: tuple[str, str]
    points: tuple[tuple[float, float], ...]  # (coherence, mean informativeness)
    quadrants: dict[str, int] = field(default_factory=dict)
    dispersion: dict[str, float] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "series": list(self.series_id),
            "points": [list(p) for p in self.points],
            "quadrants": self.quadrants,
            "dispersion": self.dispersion,
        }


def _quadrants(points) -> dict[str, int]:
    names = {
        (True, True): "high_info_high_coh",
        (True, False): "high_info_low_coh",
        (False, True): "low_info_high_coh",
        (False, False): "low_info_low_coh",
    }
    out = {v: 0 for v in names.values()}
    for coh, info in points:
        out[names[(info >= 0.5, coh >= 0.5)]] += 1
    return out


def run_experiment_4(config: ExperimentConfig, data: ExperimentData, jobs: int = 1) -> list[ScatterSeries]:
    """Coherence vs informativeness scatter, for both reference kinds."""
    index_of = data.corpus.index_of
    annotators = _annotator_order(data.annotators)
    exp2 = {s.series_id: s for s in run_experiment_2(config, data, jobs)}
    exp3 = {s.series_id: s for s in run_experiment_3(config, data, jobs)}

    coh_cache: dict[tuple[int, int, int], float] = {}

    def coherence_at(ann_idx, ann, g_idx, g) -> float:
        key = (ann_idx, g_idx, 0)
        if key not in coh_cache:
            vals = []
            for t in range(config.trials):
                cset = _sample_constraints(
                    data.annotators[ann], g, config, ann_idx, t, index_of
                )
                vals.append(coherence(cset, data.matrix))
            coh_cache[key] = float(np.mean(vals))
        return coh_cache[key]

    series = []
    for ann_idx, ann in enumerate(annotators):
        cohs = [
            coherence_at(ann_idx, ann, g_idx, g)
            for g_idx, g in enumerate(config.constraint_grid)
        ]
        for tag, curves in (("vs_kmeans_reference", exp2), ("vs_pck_truth_reference", exp3)):
            infos = curves[(ann, "informativeness")].mean_y
            points = tuple(zip(cohs, infos))
            arr = np.asarray(points)
            series.append(
                ScatterSeries(
                    (ann, tag),
                    points,
                    _quadrants(points),
                    {
                        "coherence_std": float(arr[:, 0].std()),
                        "informativeness_std": float(arr[:, 1].std()),
                    },
                )
            )
    return series


# --- report files ----------------------------------------------------------


def write_curves(
    series: list[CurveSeries], out_dir: str, prefix: str, cells: list | None = None
) -> list[str]:
    """One plot-data file per series plus records files; returns paths.

    ``cells`` (from the runners' cell_sink) adds a one-record-per-cell file
    alongside the per-series summary records.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    records_path = os.path.join(out_dir, f"{prefix}_records.jsonl")
    with open(records_path, "w", encoding="utf-8") as fh:
        for s in series:
            fh.write(stable_json(s.to_record()) + "\n")
    paths.append(records_path)
    if cells is not None:
        cells_path = os.path.join(out_dir, f"{prefix}_cells.jsonl")
        with open(cells_path, "w", encoding="utf-8") as fh:
            for record in cells:
                fh.write(stable_json(record) + "\n")
        paths.append(cells_path)
    for s in series:
        ann, quantity = s.series_id
        path = os.path.join(out_dir, f"{prefix}_{ann}_{quantity}.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            for x, y in zip(s.x, s.mean_y):
                fh.write(f"{x}\t{repr(float(y))}\n")
        paths.append(path)
    return paths


def write_scatter(series: list[ScatterSeries], out_dir: str, prefix: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    records_path = os.path.join(out_dir, f"{prefix}_records.jsonl")
    with open(records_path, "w", encoding="utf-8") as fh:
        for s in series:
            fh.write(stable_json(s.to_record()) + "\n")
    paths.append(records_path)
    for s in series:
        ann, tag = s.series_id
        path = os.path.join(out_dir, f"{prefix}_{ann}_{tag}.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            for coh, info in s.points:
                fh.write(f"{repr(float(coh))}\t{repr(float(info))}\n")
        paths.append(path)
    return paths


# --- synthetic annotators ---------------------------------------------------


def make_synthetic_annotators(
    truth: LabelAssignment, count: int, rng_seed: int, flip_fraction: float = 0.2
) -> dict[str, LabelAssignment]:
    """Derive noisy annotators from a reference labeling.

    Each annotator relabels a fraction of documents to a uniformly chosen
    other category; the first annotator also splits the largest category in
    two, so declared cluster counts vary like real annotators' do.
    """
    if not 0.0 <= flip_fraction < 1.0:
        raise InvalidParameterError("flip_fraction must be in [0, 1)")
    cats = truth.categories
    out = {}
    for a in range(count):
        rng = np.random.default_rng(derive_seed(rng_seed, 9, a))
        labels = dict(truth.labels)
        doc_ids = sorted(labels)
        n_flip = int(round(flip_fraction * len(doc_ids)))
        flip = rng.choice(len(doc_ids), size=n_flip, replace=False)
        for i in flip:
            doc = doc_ids[int(i)]
            others = [c for c in cats if c != labels[doc]]
            labels[doc] = others[int(rng.integers(len(others)))]
        if a == 0:
            largest = max(cats, key=lambda c: sum(1 for v in labels.values() if v == c))
            members = [d for d in doc_ids if labels[d] == largest]
            for d in members[: len(members) // 2]:
                labels[d] = f"{largest}_split"
        name = f"ann{a + 1}"
        out[name] = LabelAssignment(name, labels)
    return out
