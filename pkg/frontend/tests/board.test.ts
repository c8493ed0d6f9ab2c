// Model tests against a recorded service payload: every number the strip
// shows must equal the corresponding payload field, and the board must
// place each document in exactly one column.

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { buildBoard, diffBoards, headlineOf } from '../src/board.ts';
import type { SessionState } from '../src/types.ts';

const here = dirname(fileURLToPath(import.meta.url));
const state: SessionState = JSON.parse(
  readFileSync(join(here, '..', 'fixtures', 'state.json'), 'utf-8'),
);

describe('buildBoard', () => {
  it('places every document in exactly one column', () => {
    const view = buildBoard(state);
    const seen = new Map<string, number>();
    for (const column of view.columns) {
      expect(column.cards.length).toBe(column.size);
      for (const card of column.cards) {
        seen.set(card.id, (seen.get(card.id) ?? 0) + 1);
      }
    }
    expect(seen.size).toBe(state.documents.length);
    for (const count of seen.values()) expect(count).toBe(1);
  });

  it('orders columns by size descending', () => {
    const view = buildBoard(state);
    const sizes = view.columns.map((c) => c.size);
    const sorted = [...sizes].sort((a, b) => b - a);
    expect(sizes).toEqual(sorted);
  });

  it('metrics strip values equal the payload fields verbatim', () => {
    const view = buildBoard(state);
    expect(view.strip.informativeness).toBe(state.metrics.informativeness);
    expect(view.strip.coherence).toBe(state.metrics.coherence);
    expect(view.strip.labeling).toBe('truth');
    expect(view.strip.nmi).toBe(state.metrics.nmi['truth']);
  });

  it('sparkline has one point per run after the first', () => {
    const view = buildBoard(state);
    expect(view.strip.sparkline.length).toBe(state.history.length - 1);
    const last = state.history[state.history.length - 1]!;
    expect(view.strip.sparkline[view.strip.sparkline.length - 1]).toBe(
      last.metrics.nmi['truth'],
    );
  });

  it('tray mirrors the staged constraints with indices', () => {
    const view = buildBoard(state);
    expect(view.tray.map(({ kind, a, b }) => ({ kind, a, b }))).toEqual(state.constraints);
    expect(view.tray.map((c) => c.index)).toEqual(state.constraints.map((_, i) => i));
    expect(view.tray.every((c) => !c.pending)).toBe(true);
  });

  it('marks selected, highlighted, and conflict cards', () => {
    const docs = state.documents.map((d) => d.doc_id);
    const view = buildBoard(state, {
      selected: new Set([docs[0]!]),
      highlighted: new Set([docs[1]!]),
      conflict: new Set([docs[2]!]),
    });
    const cards = new Map(view.columns.flatMap((c) => c.cards).map((c) => [c.id, c]));
    expect(cards.get(docs[0]!)!.selected).toBe(true);
    expect(cards.get(docs[1]!)!.highlighted).toBe(true);
    expect(cards.get(docs[2]!)!.inConflict).toBe(true);
  });

  it('optimistic tray shows pending chips', () => {
    const pending = [...state.constraints, { kind: 'ML' as const, a: 'x', b: 'y' }];
    const view = buildBoard(state, { pendingTray: pending });
    expect(view.tray.length).toBe(pending.length);
    expect(view.tray.every((c) => c.pending)).toBe(true);
  });
});

describe('headlineOf', () => {
  it('takes the first line, truncated to 60 chars', () => {
    expect(headlineOf('short headline\nrest of text')).toBe('short headline');
    const long = 'x'.repeat(80);
    expect(headlineOf(long).length).toBe(60);
    expect(headlineOf(long).endsWith('...')).toBe(true);
  });
});

describe('diffBoards', () => {
  it('reports exactly the cards whose cluster changed', () => {
    const moved: SessionState = JSON.parse(JSON.stringify(state));
    moved.documents[0]!.cluster = (moved.documents[0]!.cluster + 1) % 4;
    moved.documents[5]!.cluster = (moved.documents[5]!.cluster + 2) % 4;
    const diff = diffBoards(state, moved);
    expect(diff).toEqual(
      new Set([moved.documents[0]!.doc_id, moved.documents[5]!.doc_id]),
    );
    expect(diffBoards(state, state).size).toBe(0);
  });
});
