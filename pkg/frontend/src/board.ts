// Board view-model. Pure functions from service payloads to the structures
// the renderer draws; the UI keeps no derived numbers of its own.

import { ServiceError, SteerClient } from './api.js';
import type {
  ConstraintChip,
  ConstraintPreview,
  CreateSessionOptions,
  MetricsSnapshot,
  SessionState,
} from './types.js';

export interface BoardCard {
  id: string;
  headline: string;
  snippet: string;
  selected: boolean;
  highlighted: boolean;
  inConflict: boolean;
}

export interface BoardColumn {
  clusterId: number;
  size: number;
  cards: BoardCard[];
}

export interface MetricsStrip {
  informativeness: number | null;
  coherence: number | null;
  labeling: string | null;
  nmi: number | null;
  sparkline: Array<number | null>;
}

export interface TrayChip extends ConstraintChip {
  index: number;
  pending: boolean;
}

export interface BoardView {
  columns: BoardColumn[];
  tray: TrayChip[];
  strip: MetricsStrip;
  runCount: number;
}

export function headlineOf(snippet: string): string {
  const firstLine = snippet.split('\n')[0] ?? '';
  return firstLine.length > 60 ? firstLine.slice(0, 57) + '...' : firstLine;
}

export interface BoardOptions {
  selected?: ReadonlySet<string>;
  highlighted?: ReadonlySet<string>;
  conflict?: ReadonlySet<string>;
  labeling?: string;
  pendingTray?: ConstraintChip[];
}

function pickLabeling(metrics: MetricsSnapshot, wanted?: string): string | null {
  const names = Object.keys(metrics.nmi).sort();
  if (wanted && names.includes(wanted)) return wanted;
  return names[0] ?? null;
}

// One sparkline point per re-cluster: the nmi-vs-selected-labeling of each
// run after the initial one (falls back to informativeness when the corpus
// carries no labelings).
function sparklineOf(state: SessionState, labeling: string | null): Array<number | null> {
  return state.history.slice(1).map((run) => {
    if (labeling !== null) return run.metrics.nmi[labeling] ?? null;
    return run.metrics.informativeness;
  });
}

export function buildBoard(state: SessionState, options: BoardOptions = {}): BoardView {
  const selected = options.selected ?? new Set<string>();
  const highlighted = options.highlighted ?? new Set<string>();
  const conflict = options.conflict ?? new Set<string>();

  const byCluster = new Map<number, BoardCard[]>();
  for (const doc of state.documents) {
    const card: BoardCard = {
      id: doc.doc_id,
      headline: headlineOf(doc.snippet),
      snippet: doc.snippet,
      selected: selected.has(doc.doc_id),
      highlighted: highlighted.has(doc.doc_id),
      inConflict: conflict.has(doc.doc_id),
    };
    const cards = byCluster.get(doc.cluster);
    if (cards) cards.push(card);
    else byCluster.set(doc.cluster, [card]);
  }
  const columns: BoardColumn[] = [...byCluster.entries()]
    .map(([clusterId, cards]) => ({ clusterId, size: cards.length, cards }))
    .sort((x, y) => y.size - x.size || x.clusterId - y.clusterId);

  const tray: TrayChip[] = (options.pendingTray ?? state.constraints).map((c, index) => ({
    ...c,
    index,
    pending: options.pendingTray !== undefined,
  }));

  const labeling = pickLabeling(state.metrics, options.labeling);
  const strip: MetricsStrip = {
    informativeness: state.metrics.informativeness,
    coherence: state.metrics.coherence,
    labeling,
    nmi: labeling === null ? null : state.metrics.nmi[labeling] ?? null,
    sparkline: sparklineOf(state, labeling),
  };
  return { columns, tray, strip, runCount: state.history.length };
}

export function clusterOf(state: SessionState, docId: string): number | undefined {
  return state.documents.find((d) => d.doc_id === docId)?.cluster;
}

// Cards whose cluster changed between two states (for move highlighting).
export function diffBoards(prev: SessionState, next: SessionState): Set<string> {
  const before = new Map(prev.documents.map((d) => [d.doc_id, d.cluster]));
  const moved = new Set<string>();
  for (const doc of next.documents) {
    const old = before.get(doc.doc_id);
    if (old !== undefined && old !== doc.cluster) moved.add(doc.doc_id);
  }
  return moved;
}

export interface ConflictInfo {
  chain: string[];
  message: string;
}

// Drives the interactive loop: select two cards, stage a pair, re-cluster.
// Staging is optimistic (chip shows immediately) and reconciled against the
// server's authoritative constraint list; at most one recluster is in
// flight at a time. Every user gesture bumps `interactions`.
export class SteeringFlow {
  state: SessionState | null = null;
  selected: string[] = [];
  highlighted = new Set<string>();
  conflict: ConflictInfo | null = null;
  lastPreview: ConstraintPreview | null = null;
  interactions = 0;
  private reclusterInFlight = false;
  private optimisticTray: ConstraintChip[] | null = null;

  constructor(
    private readonly client: SteerClient,
    private readonly labeling?: string,
  ) {}

  get sessionId(): string {
    if (!this.state) throw new Error('no session loaded');
    return this.state.session_id;
  }

  async load(options: CreateSessionOptions = {}): Promise<void> {
    this.state = await this.client.createSession(options);
    this.selected = [];
    this.highlighted.clear();
    this.conflict = null;
  }

  board(): BoardView {
    if (!this.state) throw new Error('no session loaded');
    return buildBoard(this.state, {
      selected: new Set(this.selected),
      highlighted: this.highlighted,
      conflict: new Set(this.conflict?.chain ?? []),
      labeling: this.labeling,
      pendingTray: this.optimisticTray ?? undefined,
    });
  }

  selectCard(docId: string): void {
    this.interactions += 1;
    this.conflict = null;
    const already = this.selected.indexOf(docId);
    if (already >= 0) {
      this.selected.splice(already, 1);
      return;
    }
    this.selected.push(docId);
    if (this.selected.length > 2) this.selected.shift();
  }

  async stageSelected(kind: 'ML' | 'CL'): Promise<ConstraintPreview | null> {
    if (!this.state) throw new Error('no session loaded');
    if (this.selected.length !== 2) throw new Error('select exactly two cards first');
    this.interactions += 1;
    const [a, b] = this.selected as [string, string];
    this.optimisticTray = [...this.state.constraints, { kind, a, b }];
    try {
      const response = await this.client.addConstraint(this.sessionId, kind, a, b);
      this.state.constraints = response.constraints;
      this.lastPreview = response.preview;
      this.selected = [];
      return response.preview;
    } catch (error) {
      if (error instanceof ServiceError) {
        const ids = this.state.documents.map((d) => d.doc_id);
        const chain = (error.payload.chain ?? []).map((i) => ids[i] ?? String(i));
        this.conflict = { chain, message: error.payload.message };
        return null;
      }
      throw error;
    } finally {
      this.optimisticTray = null;
    }
  }

  async unstage(index: number): Promise<void> {
    if (!this.state) throw new Error('no session loaded');
    this.interactions += 1;
    const response = await this.client.removeConstraint(this.sessionId, index);
    this.state.constraints = response.constraints;
  }

  async recluster(): Promise<Set<string>> {
    if (!this.state) throw new Error('no session loaded');
    if (this.reclusterInFlight) throw new Error('a recluster is already running');
    this.interactions += 1;
    this.reclusterInFlight = true;
    try {
      const previous = this.state;
      await this.client.recluster(this.sessionId);
      const next = await this.client.getState(this.sessionId);
      this.state = next;
      this.highlighted = diffBoards(previous, next);
      return this.highlighted;
    } finally {
      this.reclusterInFlight = false;
    }
  }
}
