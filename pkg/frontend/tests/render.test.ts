import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { buildBoard } from '../src/board.ts';
import { boardToHtml, escapeHtml, fmt, stripToHtml } from '../src/render.ts';
import type { SessionState } from '../src/types.ts';

const here = dirname(fileURLToPath(import.meta.url));
const state: SessionState = JSON.parse(
  readFileSync(join(here, '..', 'fixtures', 'state.json'), 'utf-8'),
);

describe('boardToHtml', () => {
  it('renders every card exactly once', () => {
    const html = boardToHtml(buildBoard(state));
    for (const doc of state.documents) {
      const occurrences = html.split(`data-doc="${doc.doc_id}"`).length - 1;
      expect(occurrences).toBe(1);
    }
  });

  it('renders strip numbers from the payload', () => {
    const html = boardToHtml(buildBoard(state));
    expect(html).toContain(fmt(state.metrics.informativeness));
    expect(html).toContain(fmt(state.metrics.coherence));
    expect(html).toContain(fmt(state.metrics.nmi['truth']!));
    expect(html).toContain('nmi vs truth');
  });

  it('renders tray chips and controls', () => {
    const html = boardToHtml(buildBoard(state));
    for (const chip of state.constraints) {
      expect(html).toContain(`${chip.kind} ${chip.a}&harr;${chip.b}`);
    }
    for (const action of ['stage-ml', 'stage-cl', 'recluster']) {
      expect(html).toContain(`data-action="${action}"`);
    }
  });

  it('shows an empty tray message when nothing is staged', () => {
    const bare: SessionState = { ...state, constraints: [] };
    expect(boardToHtml(buildBoard(bare))).toContain('no staged constraints');
  });
});

describe('stripToHtml', () => {
  it('handles missing metrics as n/a', () => {
    const html = stripToHtml({
      informativeness: null,
      coherence: null,
      labeling: null,
      nmi: null,
      sparkline: [],
    });
    expect(html.split('n/a').length - 1).toBe(3);
  });
});

describe('escapeHtml', () => {
  it('neutralizes markup in snippets', () => {
    expect(escapeHtml('<b x="1">&')).toBe('&lt;b x=&quot;1&quot;&gt;&amp;');
  });
});
