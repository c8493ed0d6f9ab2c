"""Session service for interactive constraint steering over HTTP.

A session pins a corpus and clustering config, records an append-only
action log, and exposes the loop: inspect clusters, stage must-link /
cannot-link pairs (with metric previews against the initial unconstrained
partition), re-cluster, read metrics. Sessions are replayable: rerunning
the exported action log reproduces every run manifest byte-identically.
"""

from __future__ import annotations

import os
import threading
import uuid
import zlib
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .clustering import Clustering, kmeans
from .common import derive_seed, stable_json
from .constraints import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintSet,
    cannot_link,
    must_link,
    transitive_closure,
)
from .corpus import Corpus, FeatureMatrix, build_vocabulary, vectorize
from .errors import (
    ConcordError,
    CorpusNotFoundError,
    DuplicateConstraintError,
    InconsistencyError,
    InvalidParameterError,
    UnknownDocumentError,
    UnknownSessionError,
)
from .evaluation import coherence, contingency, informativeness, mutual_information, nmi
from .pckmeans import PckConfig, pckmeans

SNIPPET_CHARS = 400

_KIND_CODE = {MUST_LINK: "ML", CANNOT_LINK: "CL"}
_CODE_KIND = {"ML": MUST_LINK, "CL": CANNOT_LINK}


@dataclass
class SessionConfig:
    k: int = 6
    w: float = 1.0
    metric: str = "cosine"
    seed: int = 0
    max_iters: int = 100
    warm_start: bool = False  # re-cluster from the previous centroids

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "w": self.w,
            "metric": self.metric,
            "seed": self.seed,
            "max_iters": self.max_iters,
            "warm_start": self.warm_start,
        }


@dataclass
class Session:
    session_id: str
    corpus_path: str
    corpus: Corpus
    matrix: FeatureMatrix
    config: SessionConfig
    staged: list[Constraint] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    actions: list[dict] = field(default_factory=list)
    reference: Clustering | None = None
    current: Clustering | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def run_count(self) -> int:
        return len(self.history)


def _load_corpus(path: str) -> tuple[Corpus, FeatureMatrix]:
    if not os.path.exists(path):
        raise CorpusNotFoundError(f"corpus file not found: {path}")
    corpus = Corpus.from_jsonl(path)
    if len(corpus) == 0:
        raise InvalidParameterError(f"corpus {path} is empty")
    matrix = vectorize(corpus, build_vocabulary(corpus))
    return corpus, matrix


def _staged_set(staged: list[Constraint]) -> ConstraintSet:
    must = {c for c in staged if c.kind == MUST_LINK}
    cannot = {c for c in staged if c.kind == CANNOT_LINK}
    return ConstraintSet(must=must, cannot=cannot, closed=False)


class SteeringService:
    """Holds sessions and applies actions; the HTTP layer is a thin shim."""

    def __init__(self, default_corpus: str | None = None, log_dir: str | None = None):
        self.default_corpus = default_corpus
        self.log_dir = log_dir
        self.sessions: dict[str, Session] = {}
        self._corpus_cache: dict[str, tuple[Corpus, FeatureMatrix]] = {}
        self._registry_lock = threading.Lock()
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    # -- internals ----------------------------------------------------------

    def _corpus(self, path: str) -> tuple[Corpus, FeatureMatrix]:
        if path not in self._corpus_cache:
            self._corpus_cache[path] = _load_corpus(path)
        return self._corpus_cache[path]

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"no session {session_id!r}") from None

    def _append_log(self, session: Session, action: dict) -> None:
        session.actions.append(action)
        if self.log_dir:
            path = os.path.join(self.log_dir, f"{session.session_id}.jsonl")
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(stable_json(action) + "\n")

    def _metrics_snapshot(self, session: Session, clustering: Clustering) -> dict:
        cset = _staged_set(session.staged)
        index_of = session.corpus.index_of
        out: dict = {"informativeness": None, "coherence": None, "mi": {}, "nmi": {}}
        if len(cset) > 0 and session.reference is not None:
            out["informativeness"] = informativeness(cset, session.reference)
            out["coherence"] = coherence(cset, session.matrix)
        for ann, labels in session.corpus.label_assignments().items():
            table = contingency(labels, clustering, index_of)
            out["mi"][ann] = mutual_information(table)[0]
            out["nmi"][ann] = nmi(table)
        return out

    def _run(self, session: Session, action_name: str) -> dict:
        run_index = session.run_count
        # The run seed hashes the staged set, so re-running with unchanged
        # constraints (or with none, matching the initial reference run)
        # reproduces the same clustering; the seed moves when the set does.
        canon = stable_json(
            [[_KIND_CODE[c.kind], c.a, c.b] for c in sorted(session.staged)]
        )
        run_seed = derive_seed(session.config.seed, zlib.crc32(canon.encode()))
        cset = _staged_set(session.staged)
        if len(cset) == 0:
            clustering = kmeans(
                session.matrix,
                session.config.k,
                metric=session.config.metric,
                rng_seed=run_seed,
                max_iters=session.config.max_iters,
            )
            manifest = {
                "algorithm": "kmeans",
                "k": session.config.k,
                "metric": session.config.metric,
                "seed": run_seed,
                "iterations": clustering.iterations,
                "converged": clustering.converged,
                "potential": clustering.potential,
                "run_index": run_index,
            }
        else:
            config = PckConfig(
                k=session.config.k,
                w=session.config.w,
                metric=session.config.metric,
                max_iters=session.config.max_iters,
                rng_seed=run_seed,
            )
            warm = (
                session.current.centroids
                if session.config.warm_start and session.current is not None
                else None
            )
            result = pckmeans(session.matrix, cset, config, init_centroids=warm)
            clustering = result.clustering
            manifest = result.manifest()
            manifest["run_index"] = run_index
            manifest["init"] = result.init_provenance[0] if warm is not None else "cold"
        if run_index == 0:
            session.reference = clustering
        session.current = clustering
        metrics = self._metrics_snapshot(session, clustering)
        record = {
            "action": action_name,
            "run_index": run_index,
            "manifest": manifest,
            "metrics": metrics,
            "constraints": [self._constraint_payload(session, c) for c in session.staged],
        }
        session.history.append(record)
        return record

    def _constraint_payload(self, session: Session, c: Constraint) -> dict:
        ids = session.corpus.doc_ids
        return {"kind": _KIND_CODE[c.kind], "a": ids[c.a], "b": ids[c.b]}

    def _resolve_doc(self, session: Session, doc_id: str) -> int:
        index_of = session.corpus.index_of
        if doc_id not in index_of:
            raise UnknownDocumentError(f"unknown document {doc_id!r}")
        return index_of[doc_id]

    # -- operations ----------------------------------------------------------

    def create_session(self, corpus_path: str | None, config: SessionConfig) -> dict:
        path = corpus_path or self.default_corpus
        if path is None:
            raise InvalidParameterError("no corpus given and the service has no default")
        corpus, matrix = self._corpus(path)
        session = Session(
            session_id=uuid.uuid4().hex,
            corpus_path=path,
            corpus=corpus,
            matrix=matrix,
            config=config,
        )
        with self._registry_lock:
            self.sessions[session.session_id] = session
        with session.lock:
            self._append_log(
                session,
                {"action": "create", "corpus": path, "config": config.to_dict()},
            )
            self._run(session, "create")
        return self.get_state(session.session_id)

    def get_state(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            clustering = session.current
            documents = []
            for i, doc in enumerate(session.corpus.documents):
                documents.append(
                    {
                        "doc_id": doc.doc_id,
                        "snippet": doc.raw_text[:SNIPPET_CHARS],
                        "cluster": int(clustering.assignment[i]),
                    }
                )
            return {
                "session_id": session.session_id,
                "corpus": session.corpus.name,
                "config": session.config.to_dict(),
                "documents": documents,
                "constraints": [
                    self._constraint_payload(session, c) for c in session.staged
                ],
                "metrics": session.history[-1]["metrics"],
                "history": session.history,
            }

    def add_constraint(self, session_id: str, kind_code: str, a_id: str, b_id: str) -> dict:
        session = self._session(session_id)
        if kind_code not in _CODE_KIND:
            raise InvalidParameterError(f"kind must be ML or CL, got {kind_code!r}")
        with session.lock:
            a = self._resolve_doc(session, a_id)
            b = self._resolve_doc(session, b_id)
            if a == b:
                raise InvalidParameterError("a constraint needs two distinct documents")
            for c in session.staged:
                if {c.a, c.b} == {a, b}:
                    raise DuplicateConstraintError(
                        f"pair ({a_id}, {b_id}) is already constrained"
                    )
            kind = _CODE_KIND[kind_code]
            new = must_link(a, b) if kind == MUST_LINK else cannot_link(a, b)
            candidate = session.staged + [new]
            transitive_closure(_staged_set(candidate))  # raises on inconsistency
            session.staged = candidate
            self._append_log(
                session, {"action": "add_constraint", "kind": kind_code, "a": a_id, "b": b_id}
            )
            cset = _staged_set(session.staged)
            reference = session.reference
            assign = reference.assignment
            same = assign[a] == assign[b]
            unsat = (kind == MUST_LINK and not same) or (kind == CANNOT_LINK and same)
            preview = {
                "informativeness": informativeness(cset, reference),
                "coherence": coherence(cset, session.matrix),
                "unsat_vs_reference": bool(unsat),
            }
            return {
                "constraint": self._constraint_payload(session, new),
                "preview": preview,
                "constraints": [
                    self._constraint_payload(session, c) for c in session.staged
                ],
            }

    def remove_constraint(self, session_id: str, index: int) -> dict:
        session = self._session(session_id)
        with session.lock:
            if not 0 <= index < len(session.staged):
                raise InvalidParameterError(f"no staged constraint at index {index}")
            removed = session.staged.pop(index)
            self._append_log(session, {"action": "remove_constraint", "index": index})
            return {
                "removed": self._constraint_payload(session, removed),
                "constraints": [
                    self._constraint_payload(session, c) for c in session.staged
                ],
            }

    def recluster(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            self._append_log(session, {"action": "recluster"})
            record = self._run(session, "recluster")
            clustering = session.current
            return {
                "manifest": record["manifest"],
                "metrics": record["metrics"],
                "clustering": {
                    doc.doc_id: int(clustering.assignment[i])
                    for i, doc in enumerate(session.corpus.documents)
                },
            }

    def metrics_history(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            return {
                "history": [
                    {
                        "run_index": h["run_index"],
                        "action": h["action"],
                        "metrics": h["metrics"],
                        "manifest": h["manifest"],
                    }
                    for h in session.history
                ]
            }

    def export_log(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            return {"session_id": session.session_id, "actions": list(session.actions)}

    def replay(self, actions: list[dict]) -> str:
        """Rebuild a session from an exported action log; returns the new id."""
        if not actions or actions[0].get("action") != "create":
            raise InvalidParameterError("action log must start with a create action")
        head = actions[0]
        state = self.create_session(head.get("corpus"), SessionConfig(**head["config"]))
        session_id = state["session_id"]
        for action in actions[1:]:
            name = action.get("action")
            if name == "add_constraint":
                self.add_constraint(session_id, action["kind"], action["a"], action["b"])
            elif name == "remove_constraint":
                self.remove_constraint(session_id, action["index"])
            elif name == "recluster":
                self.recluster(session_id)
            else:
                raise InvalidParameterError(f"unknown action {name!r} in log")
        return session_id


_STATUS = {
    "corpus_not_found": 404,
    "unknown_session": 404,
    "unknown_document": 404,
    "duplicate_pair": 409,
    "inconsistent_constraints": 409,
}


def _error_response(exc: ConcordError) -> JSONResponse:
    payload = {"code": exc.code, "message": str(exc)}
    if isinstance(exc, InconsistencyError):
        payload["chain"] = exc.chain
        payload["pair"] = list(exc.pair) if exc.pair else None
    return JSONResponse(status_code=_STATUS.get(exc.code, 400), content=payload)


def create_app(
    default_corpus: str | None = None,
    log_dir: str | None = None,
    defaults: SessionConfig | None = None,
) -> FastAPI:
    """Wire the steering service into a FastAPI app."""
    service = SteeringService(default_corpus=default_corpus, log_dir=log_dir)
    base = defaults or SessionConfig()
    app = FastAPI(title="concord steering service")
    app.state.service = service

    @app.exception_handler(ConcordError)
    async def handle_domain_error(request, exc: ConcordError):
        return _error_response(exc)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict | None = None):
        body = body or {}
        config = SessionConfig(
            k=int(body.get("k", base.k)),
            w=float(body.get("w", base.w)),
            metric=str(body.get("metric", base.metric)),
            seed=int(body.get("seed", base.seed)),
            max_iters=int(body.get("max_iters", base.max_iters)),
            warm_start=bool(body.get("warm_start", base.warm_start)),
        )
        return service.create_session(body.get("corpus"), config)

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return service.get_state(session_id)

    @app.post("/sessions/{session_id}/constraints")
    def add_constraint(session_id: str, body: dict):
        for key in ("kind", "a", "b"):
            if key not in body:
                raise InvalidParameterError(f"constraint body needs {key!r}")
        return service.add_constraint(session_id, body["kind"], body["a"], body["b"])

    @app.delete("/sessions/{session_id}/constraints/{index}")
    def remove_constraint(session_id: str, index: int):
        return service.remove_constraint(session_id, index)

    @app.post("/sessions/{session_id}/recluster")
    def recluster(session_id: str):
        return service.recluster(session_id)

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        return service.metrics_history(session_id)

    @app.get("/sessions/{session_id}/export")
    def export_log(session_id: str):
        return service.export_log(session_id)

    return app
