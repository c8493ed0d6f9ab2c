// HTML string renderers for the board. Kept DOM-free so the same code is
// exercised by node tests and by the browser shell.

import type { BoardView, MetricsStrip, TrayChip } from './board.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function fmt(value: number | null): string {
  return value === null ? 'n/a' : value.toFixed(4);
}

function sparklineSvg(values: Array<number | null>): string {
  const points = values
    .map((v, i) => (v === null ? null : ([i, v] as const)))
    .filter((p): p is readonly [number, number] => p !== null);
  if (points.length === 0) return '<svg class="spark" width="120" height="24"></svg>';
  const maxX = Math.max(values.length - 1, 1);
  const coords = points
    .map(([i, v]) => `${(i / maxX) * 116 + 2},${22 - v * 20}`)
    .join(' ');
  return (
    `<svg class="spark" width="120" height="24" viewBox="0 0 120 24">` +
    `<polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${coords}"/>` +
    `</svg>`
  );
}

export function stripToHtml(strip: MetricsStrip): string {
  const nmiLabel = strip.labeling === null ? 'nmi' : `nmi vs ${escapeHtml(strip.labeling)}`;
  return (
    `<div class="metrics-strip">` +
    `<span class="metric" data-metric="informativeness">informativeness ` +
    `<b>${fmt(strip.informativeness)}</b></span>` +
    `<span class="metric" data-metric="coherence">coherence <b>${fmt(strip.coherence)}</b></span>` +
    `<span class="metric" data-metric="nmi">${nmiLabel} <b>${fmt(strip.nmi)}</b></span>` +
    sparklineSvg(strip.sparkline) +
    `</div>`
  );
}

function trayToHtml(tray: TrayChip[]): string {
  if (tray.length === 0) {
    return `<div class="tray empty">no staged constraints</div>`;
  }
  const chips = tray
    .map(
      (chip) =>
        `<span class="chip ${chip.kind.toLowerCase()}${chip.pending ? ' pending' : ''}" ` +
        `data-index="${chip.index}">` +
        `${chip.kind} ${escapeHtml(chip.a)}&harr;${escapeHtml(chip.b)}` +
        `<button class="unstage" data-action="unstage" data-index="${chip.index}">x</button>` +
        `</span>`,
    )
    .join('');
  return `<div class="tray">${chips}</div>`;
}

export function boardToHtml(view: BoardView): string {
  const columns = view.columns
    .map((column) => {
      const cards = column.cards
        .map((card) => {
          const classes = ['card'];
          if (card.selected) classes.push('selected');
          if (card.highlighted) classes.push('moved');
          if (card.inConflict) classes.push('conflict');
          return (
            `<div class="${classes.join(' ')}" data-action="select" data-doc="${escapeHtml(card.id)}">` +
            `<div class="headline">${escapeHtml(card.headline)}</div>` +
            `<div class="snippet">${escapeHtml(card.snippet)}</div>` +
            `</div>`
          );
        })
        .join('');
      return (
        `<div class="column" data-cluster="${column.clusterId}">` +
        `<div class="column-head">cluster ${column.clusterId} (${column.size})</div>` +
        cards +
        `</div>`
      );
    })
    .join('');
  return (
    stripToHtml(view.strip) +
    trayToHtml(view.tray) +
    `<div class="controls">` +
    `<button data-action="stage-ml">must-link</button>` +
    `<button data-action="stage-cl">cannot-link</button>` +
    `<button data-action="recluster">recluster</button>` +
    `</div>` +
    `<div class="board">${columns}</div>`
  );
}
