"""Command-line entry point.

Subcommands cover the whole pipeline: prep (corpus -> matrix + vocab),
synth (generate a labeled corpus), cluster (K-Means / seeded), pck
(constrained K-Means), metrics (mi, nmi, informativeness, coherence,
alpha, confusion), experiment (the batch harness), and serve (the steering
service). Every invocation takes one --seed; internal sub-seeds derive
from it through a fixed counter scheme (SeedSequence([seed, *counters])),
so outputs are pure functions of inputs plus flags.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from types import SimpleNamespace

import numpy as np

from . import __version__
from .clustering import (
    SeedSet,
    kmeans,
    read_clustering,
    seeded_init,
    write_clustering,
)
from .common import stable_json
from .constraints import read_constraints, read_labels, write_constraints
from .corpus import (
    Corpus,
    build_vocabulary,
    gen_synthetic_corpus,
    load_stopwords,
    read_matrix,
    vectorize,
    write_matrix,
    write_vocabulary,
)
from .errors import ConcordError, InvalidParameterError
from .evaluation import (
    coherence,
    confusion_matrix,
    contingency,
    informativeness,
    krippendorff_alpha,
    mutual_information,
    nmi,
)
from .experiments import (
    ExperimentConfig,
    ExperimentData,
    run_annotator_k_sweep,
    run_blind_test,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_experiment_4,
    run_seeding_comparison,
    write_curves,
    write_scatter,
)
from .pckmeans import PckConfig, pckmeans


def _load_matrix_and_ids(args):
    """Resolve the feature matrix and document ids from --corpus / --matrix."""
    if getattr(args, "corpus", None):
        corpus = Corpus.from_jsonl(args.corpus)
        matrix = vectorize(corpus, build_vocabulary(corpus))
        return matrix, corpus.doc_ids, corpus
    if getattr(args, "matrix", None):
        matrix = read_matrix(args.matrix)
        return matrix, [str(i) for i in range(matrix.n)], None
    raise InvalidParameterError("need --corpus or --matrix")


def _index_of(doc_ids):
    return {d: i for i, d in enumerate(doc_ids)}


def _clustering_from_file(path):
    """Rebuild an assignment view from a clustering export.

    Rows are ordered by sorted doc_id; the returned namespace carries the
    assignment, k, and the id -> row mapping used to align other files.
    """
    mapping, meta = read_clustering(path)
    doc_ids = sorted(mapping)
    assignment = np.array([mapping[d] for d in doc_ids], dtype=int)
    k = int(meta.get("k", assignment.max() + 1))
    return SimpleNamespace(
        assignment=assignment, k=k, doc_ids=doc_ids, index_of=_index_of(doc_ids)
    )


def _emit(args, payload: dict, default_key: str | None = None):
    """Write a report as json or tsv to --out or stdout."""
    if args.format == "json":
        text = stable_json(payload) + "\n"
    else:
        if default_key is not None and default_key in payload:
            value = payload[default_key]
            rows = value if isinstance(value, list) else [[value]]
        else:
            rows = [[k, v] for k, v in sorted(payload.items())]
        text = "\n".join("\t".join(str(x) for x in row) for row in rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommand implementations ---------------------------------------------


def cmd_prep(args) -> int:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    corpus = Corpus.from_jsonl(args.corpus, stopwords=stopwords)
    vocab = build_vocabulary(corpus)
    matrix = vectorize(corpus, vocab)
    write_matrix(matrix, args.out_matrix)
    write_vocabulary(vocab, args.out_vocab)
    sys.stdout.write(f"{matrix.n} docs, {matrix.d} terms, {matrix.nnz} weights\n")
    return 0


def cmd_synth(args) -> int:
    sizes = [int(x) for x in args.sizes.split(",")]
    corpus, truth = gen_synthetic_corpus(
        args.k,
        sizes,
        args.terms_per_class,
        args.overlap,
        rng_seed=args.seed,
        noisy_last_class=args.noisy_last,
        name=args.name,
    )
    corpus.to_jsonl(args.out)
    sys.stdout.write(f"{len(corpus)} docs in {truth.k_declared} classes -> {args.out}\n")
    return 0


def _seed_set_from_file(path, index_of, k):
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            doc_id, cluster = line.split("\t") if "\t" in line else line.split()
            row = index_of[doc_id] if doc_id in index_of else int(doc_id)
            entries.append((row, int(cluster)))
    return SeedSet(entries, k)


def cmd_cluster(args) -> int:
    matrix, doc_ids, _ = _load_matrix_and_ids(args)
    init = None
    if args.seeds_file:
        seed_set = _seed_set_from_file(args.seeds_file, _index_of(doc_ids), args.k)
        init = seeded_init(seed_set, matrix, mode=args.seed_mode, rng_seed=args.seed)
    result = kmeans(
        matrix, args.k, init=init, metric=args.metric,
        rng_seed=args.seed, max_iters=args.max_iters,
    )
    write_clustering(args.out, result, doc_ids)
    sys.stdout.write(
        f"k={args.k} potential={result.potential!r} iterations={result.iterations} "
        f"converged={result.converged}\n"
    )
    return 0


def cmd_pck(args) -> int:
    matrix, doc_ids, _ = _load_matrix_and_ids(args)
    cset = read_constraints(args.constraints, index_of=_index_of(doc_ids))
    config = PckConfig(
        k=args.k, w=args.w, metric=args.metric,
        max_iters=args.max_iters, rng_seed=args.seed,
    )
    result = pckmeans(matrix, cset, config)
    write_clustering(args.out, result.clustering, doc_ids)
    if args.violations_out:
        from .constraints import ConstraintSet

        violated = ConstraintSet(
            must={c for c in result.violated if c.kind == "must_link"},
            cannot={c for c in result.violated if c.kind == "cannot_link"},
            closed=True,
        )
        write_constraints(violated, args.violations_out, ids=doc_ids)
    if args.manifest_out:
        with open(args.manifest_out, "w", encoding="utf-8") as fh:
            fh.write(stable_json(result.manifest()) + "\n")
    sys.stdout.write(
        f"k={args.k} w={args.w!r} objective={result.objective!r} "
        f"violations={len(result.violated)}\n"
    )
    return 0


def cmd_metrics(args) -> int:
    kind = args.kind
    if kind in ("mi", "nmi"):
        if not args.labels or not args.clustering:
            raise InvalidParameterError(f"{kind} needs --labels and --clustering")
        labelings = read_labels(args.labels)
        name = args.annotator or sorted(labelings)[0]
        if name not in labelings:
            raise InvalidParameterError(f"annotator {name!r} not in {args.labels}")
        run = _clustering_from_file(args.clustering)
        table = contingency(labelings[name], run, run.index_of)
        if kind == "mi":
            mi, h_c, h_c_given_k = mutual_information(table)
            _emit(args, {"mi": mi, "h_c": h_c, "h_c_given_k": h_c_given_k}, "mi")
        else:
            _emit(args, {"nmi": nmi(table)}, "nmi")
    elif kind == "informativeness":
        if not args.constraints or not args.reference:
            raise InvalidParameterError("informativeness needs --constraints and --reference")
        run = _clustering_from_file(args.reference)
        cset = read_constraints(args.constraints, index_of=run.index_of)
        _emit(args, {"informativeness": informativeness(cset, run)}, "informativeness")
    elif kind == "coherence":
        if not args.constraints:
            raise InvalidParameterError("coherence needs --constraints and a feature space")
        matrix, doc_ids, _ = _load_matrix_and_ids(args)
        cset = read_constraints(args.constraints, index_of=_index_of(doc_ids))
        _emit(args, {"coherence": coherence(cset, matrix)}, "coherence")
    elif kind == "alpha":
        if not args.labels:
            raise InvalidParameterError("alpha needs --labels with >= 2 annotators")
        labelings = list(read_labels(args.labels).values())
        _emit(args, {"alpha": krippendorff_alpha(labelings)}, "alpha")
    elif kind == "confusion":
        if not args.run_a or not args.run_b:
            raise InvalidParameterError("confusion needs --run-a and --run-b")
        run_a = _clustering_from_file(args.run_a)
        run_b = _clustering_from_file(args.run_b)
        if run_a.doc_ids != run_b.doc_ids:
            raise InvalidParameterError("the two runs cover different documents")
        categories = (
            args.categories.split(",") if args.categories else [str(i) for i in range(run_a.k)]
        )
        cm = confusion_matrix(run_a, run_b, categories)
        _emit(
            args,
            {
                "categories": list(cm.category_names),
                "counts": cm.counts.tolist(),
                "row_totals": cm.row_totals.tolist(),
                "agreement_rate": cm.agreement_rate,
            },
            "counts",
        )
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidParameterError(f"unknown metrics kind {kind!r}")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.__dict__, "rng_seed": args.seed})
    data = ExperimentData.load(config)
    name = args.name
    if name == "seeding":
        result = run_seeding_comparison(config, data)
        os.makedirs(args.out_dir, exist_ok=True)
        path = f"{args.out_dir}/seeding.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(stable_json(result.summary()) + "\n")
        sys.stdout.write(f"seeding report -> {path}\n")
    elif name == "ksweep":
        table = run_annotator_k_sweep(config, data)
        os.makedirs(args.out_dir, exist_ok=True)
        path = f"{args.out_dir}/ksweep.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(stable_json(table) + "\n")
        sys.stdout.write(f"k-sweep report -> {path}\n")
    elif name == "blind":
        seeds_name = config.seeds_annotator or config.truth_annotator
        if seeds_name == config.truth_annotator:
            seeds_from = data.truth
        elif seeds_name in data.annotators:
            seeds_from = data.annotators[seeds_name]
        else:
            raise InvalidParameterError(f"seeds annotator {seeds_name!r} not found")
        result = run_blind_test(config, data, seeds_from, runs=config.trials_seeding)
        os.makedirs(args.out_dir, exist_ok=True)
        path = f"{args.out_dir}/blind.json"
        payload = {
            "alpha": result.alpha,
            "runs": len(result.labelings),
            "blind_documents": len(result.blind_ids),
            "confusion_0_1": result.confusion(0, 1).counts.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(stable_json(payload) + "\n")
        sys.stdout.write(f"blind-test report -> {path}\n")
    elif name in ("exp1", "exp2", "exp3"):
        runner = {"exp1": run_experiment_1, "exp2": run_experiment_2, "exp3": run_experiment_3}[name]
        cells: list = []
        series = runner(config, data, jobs=args.jobs, cell_sink=cells)
        paths = write_curves(series, args.out_dir, name, cells=cells)
        sys.stdout.write(f"{len(paths)} files -> {args.out_dir}\n")
    elif name == "exp4":
        series = run_experiment_4(config, data, jobs=args.jobs)
        paths = write_scatter(series, args.out_dir, "exp4")
        sys.stdout.write(f"{len(paths)} files -> {args.out_dir}\n")
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown experiment {name!r}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionConfig, create_app

    app = create_app(
        default_corpus=args.corpus,
        log_dir=args.sessions_dir,
        defaults=SessionConfig(
            k=args.k, w=args.w, metric=args.metric, seed=args.seed,
            max_iters=args.max_iters, warm_start=args.warm_start,
        ),
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concord",
        description="Semi-supervised document clustering with pairwise constraints.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"concord {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, matrix_input=False):
        p.add_argument("--seed", type=int, default=0, help="root random seed")
        if matrix_input:
            p.add_argument("--corpus", help="corpus jsonl (vectorized on the fly)")
            p.add_argument("--matrix", help="precomputed matrix file")
            p.add_argument("--metric", choices=["cosine", "squared_euclidean"],
                           default="cosine", help="distance metric")
            p.add_argument("--max-iters", type=int, default=100, help="iteration cap")

    p = sub.add_parser("prep", help="corpus jsonl -> tf-idf matrix + vocabulary",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--corpus", required=True, help="corpus jsonl file")
    p.add_argument("--out-matrix", required=True, help="matrix output path")
    p.add_argument("--out-vocab", required=True, help="vocabulary output path")
    p.add_argument("--stopwords", default=None,
                   help="stopword file override (also via CONCORD_STOPWORDS)")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--k", type=int, default=6, help="number of classes")
    p.add_argument("--sizes", default="7,1,3,2,1,11",
                   help="comma-separated docs per class")
    p.add_argument("--terms-per-class", type=int, default=20, help="terms per class pool")
    p.add_argument("--overlap", type=float, default=0.0,
                   help="fraction of each pool shared across classes")
    p.add_argument("--noisy-last", action="store_true",
                   help="make the last class a mixed-topic catch-all")
    p.add_argument("--name", default="synthetic", help="corpus name")
    p.add_argument("--seed", type=int, default=0, help="root random seed")
    p.add_argument("--out", required=True, help="corpus jsonl output path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="k-means / seeded k-means",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, matrix_input=True)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--seeds-file", default=None,
                   help="seed file (doc_id, cluster_id) for seeded init")
    p.add_argument("--seed-mode", choices=["representative", "seed_mean"],
                   default="representative", help="seeded init mode")
    p.add_argument("--out", required=True, help="clustering output path")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("pck", help="pairwise-constrained k-means",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, matrix_input=True)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--w", type=float, default=1.0, help="constraint violation weight")
    p.add_argument("--constraints", required=True, help="constraint file (ML/CL doc_a doc_b)")
    p.add_argument("--out", required=True, help="clustering output path")
    p.add_argument("--violations-out", default=None, help="violated-constraints output path")
    p.add_argument("--manifest-out", default=None, help="run manifest output path")
    p.set_defaults(func=cmd_pck)

    p = sub.add_parser("metrics", help="compute a measure from files",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--kind", required=True,
                   choices=["mi", "nmi", "informativeness", "coherence", "alpha", "confusion"],
                   help="which measure to compute")
    p.add_argument("--labels", default=None, help="label file (annotator doc_id label)")
    p.add_argument("--annotator", default=None, help="annotator id within --labels")
    p.add_argument("--clustering", default=None, help="clustering file to score")
    p.add_argument("--constraints", default=None, help="constraint file")
    p.add_argument("--reference", default=None, help="reference clustering file")
    p.add_argument("--corpus", default=None, help="corpus jsonl (for coherence)")
    p.add_argument("--matrix", default=None, help="matrix file (for coherence)")
    p.add_argument("--run-a", default=None, help="first clustering file (confusion)")
    p.add_argument("--run-b", default=None, help="second clustering file (confusion)")
    p.add_argument("--categories", default=None, help="comma-separated category names")
    p.add_argument("--format", choices=["json", "tsv"], default="json", help="output encoding")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("experiment", help="run a named batch experiment",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--name", required=True,
                   choices=["exp1", "exp2", "exp3", "exp4", "seeding", "ksweep", "blind"],
                   help="experiment to run")
    p.add_argument("--config", required=True, help="experiment config json file")
    p.add_argument("--out-dir", required=True, help="report output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel cells")
    p.add_argument("--seed", type=int, default=None, help="override the config rng_seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="start the steering service",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--corpus", default=None, help="default corpus jsonl for new sessions")
    p.add_argument("--host", default="127.0.0.1", help="bind host")
    p.add_argument("--port", type=int, default=8747, help="bind port")
    p.add_argument("--k", type=int, default=6, help="default cluster count")
    p.add_argument("--w", type=float, default=1.0, help="default constraint weight")
    p.add_argument("--metric", choices=["cosine", "squared_euclidean"], default="cosine",
                   help="default distance metric")
    p.add_argument("--seed", type=int, default=0, help="default session seed")
    p.add_argument("--max-iters", type=int, default=100, help="default iteration cap")
    p.add_argument("--warm-start", action="store_true",
                   help="re-cluster from the previous centroids by default")
    p.add_argument("--sessions-dir", default=None, help="directory for append-only action logs")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConcordError as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error [io]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
