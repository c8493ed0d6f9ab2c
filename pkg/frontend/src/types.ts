// Wire types for the steering service payloads. The UI never invents
// numbers: everything rendered traces back to one of these fields.

export interface SessionConfig {
  k: number;
  w: number;
  metric: string;
  seed: number;
  max_iters: number;
  warm_start: boolean;
}

export interface DocumentEntry {
  doc_id: string;
  snippet: string;
  cluster: number;
}

export interface ConstraintChip {
  kind: 'ML' | 'CL';
  a: string;
  b: string;
}

export interface MetricsSnapshot {
  informativeness: number | null;
  coherence: number | null;
  mi: Record<string, number>;
  nmi: Record<string, number>;
}

export interface RunRecord {
  action: string;
  run_index: number;
  manifest: Record<string, unknown>;
  metrics: MetricsSnapshot;
  constraints: ConstraintChip[];
}

export interface SessionState {
  session_id: string;
  corpus: string;
  config: SessionConfig;
  documents: DocumentEntry[];
  constraints: ConstraintChip[];
  metrics: MetricsSnapshot;
  history: RunRecord[];
}

export interface ConstraintPreview {
  informativeness: number;
  coherence: number;
  unsat_vs_reference: boolean;
}

export interface AddConstraintResponse {
  constraint: ConstraintChip;
  preview: ConstraintPreview;
  constraints: ConstraintChip[];
}

export interface RemoveConstraintResponse {
  removed: ConstraintChip;
  constraints: ConstraintChip[];
}

export interface ReclusterResponse {
  manifest: Record<string, unknown>;
  metrics: MetricsSnapshot;
  clustering: Record<string, number>;
}

export interface ServiceErrorPayload {
  code: string;
  message: string;
  chain?: number[];
  pair?: number[] | null;
}

export interface CreateSessionOptions {
  corpus?: string;
  k?: number;
  w?: number;
  metric?: string;
  seed?: number;
  max_iters?: number;
  warm_start?: boolean;
}
