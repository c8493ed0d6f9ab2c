// Browser shell: wires the flow controller to the DOM. The session is
// created automatically on page load, so the whole loop (select, select,
// stage, recluster) stays within four clicks.

import { SteerClient } from './api.js';
import { SteeringFlow } from './board.js';
import { boardToHtml, escapeHtml } from './render.js';

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('service') ?? 'http://127.0.0.1:8747';
const client = new SteerClient(baseUrl);
const flow = new SteeringFlow(client, params.get('labeling') ?? undefined);

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

function draw(): void {
  const view = flow.board();
  root!.innerHTML = boardToHtml(view);
  if (flow.conflict) {
    const banner = document.createElement('div');
    banner.className = 'conflict-banner';
    banner.innerHTML =
      `conflicting chain: ${flow.conflict.chain.map(escapeHtml).join(' &ndash; ')}` +
      ` <span class="detail">${escapeHtml(flow.conflict.message)}</span>`;
    root!.prepend(banner);
  }
}

async function dispatch(action: string, target: HTMLElement): Promise<void> {
  if (action === 'select') {
    flow.selectCard(target.dataset.doc ?? '');
  } else if (action === 'stage-ml' || action === 'stage-cl') {
    await flow.stageSelected(action === 'stage-ml' ? 'ML' : 'CL');
  } else if (action === 'unstage') {
    await flow.unstage(Number(target.dataset.index));
  } else if (action === 'recluster') {
    await flow.recluster();
  }
  draw();
}

root.addEventListener('click', (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>('[data-action]');
  if (!target) return;
  const action = target.dataset.action ?? '';
  void dispatch(action, target).catch((error) => {
    const banner = document.createElement('div');
    banner.className = 'error-banner';
    banner.textContent = String(error);
    root!.prepend(banner);
  });
});

void (async () => {
  const wParam = params.get('w');
  await flow.load(wParam === null ? {} : { w: Number(wParam) });
  draw();
})();
