import { getCoherence, putChosenK } from '../api.js';
import { formatNumber } from '../format.js';
import { showToast } from '../toast.js';
import type { CoherencePoint } from '../types.js';

const SVGNS = 'http://www.w3.org/2000/svg';
const W = 640;
const H = 280;
const PAD = 40;

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K, attrs: Record<string, string>): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVGNS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

function scales(points: CoherencePoint[]) {
  const ks = points.map((p) => p.k);
  const cvs = points.filter((p) => p.mean_cv !== null).map((p) => p.mean_cv as number);
  const kMin = Math.min(...ks);
  const kMax = Math.max(...ks);
  const cvMin = Math.min(...cvs);
  const cvMax = Math.max(...cvs);
  const cvSpan = cvMax - cvMin || 1;
  return {
    x: (k: number) => PAD + ((k - kMin) / Math.max(kMax - kMin, 1)) * (W - 2 * PAD),
    y: (cv: number) => H - PAD - ((cv - cvMin) / cvSpan) * (H - 2 * PAD),
  };
}

export async function renderCoherenceView(root: HTMLElement, projectId: string): Promise<void> {
  root.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'Coherence curve';
  root.appendChild(heading);

  const curve = await getCoherence(projectId);
  const chosen = document.createElement('p');
  chosen.className = 'chosen-k';
  chosen.textContent = curve.chosen_k === null ? 'No k chosen yet. Click a point to record one.' : `Chosen k = ${curve.chosen_k}`;
  root.appendChild(chosen);

  const ok = curve.points.filter((p) => p.mean_cv !== null);
  if (ok.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No successful sweep points.';
    root.appendChild(empty);
    return;
  }

  const { x, y } = scales(curve.points);
  const svg = svgEl('svg', { viewBox: `0 0 ${W} ${H}`, class: 'curve' });
  svg.appendChild(svgEl('line', { x1: String(PAD), y1: String(H - PAD), x2: String(W - PAD), y2: String(H - PAD), class: 'axis' }));
  svg.appendChild(svgEl('line', { x1: String(PAD), y1: String(PAD), x2: String(PAD), y2: String(H - PAD), class: 'axis' }));

  const path = ok.map((p, i) => `${i === 0 ? 'M' : 'L'}${x(p.k)},${y(p.mean_cv as number)}`).join(' ');
  svg.appendChild(svgEl('path', { d: path, class: 'curve-line' }));

  for (const p of ok) {
    const cx = x(p.k);
    const cy = y(p.mean_cv as number);
    // error bars at +/- one std over the per-k runs
    if (p.std_cv !== null && p.std_cv > 0) {
      const half = Math.abs(y(p.mean_cv as number) - y((p.mean_cv as number) + p.std_cv));
      svg.appendChild(svgEl('line', { x1: String(cx), y1: String(cy - half), x2: String(cx), y2: String(cy + half), class: 'errbar' }));
    }
    const dot = svgEl('circle', {
      cx: String(cx),
      cy: String(cy),
      r: '6',
      class: p.k === curve.chosen_k ? 'k-dot k-dot-chosen' : 'k-dot',
      'data-k': String(p.k),
    });
    dot.addEventListener('click', () => {
      void putChosenK(projectId, p.k)
        .then(() => renderCoherenceView(root, projectId))
        .catch((err: unknown) => showToast(`could not record k=${p.k}: ${String(err)}`, 'error'));
    });
    svg.appendChild(dot);

    const label = svgEl('text', { x: String(cx), y: String(H - PAD + 18), class: 'tick' });
    label.textContent = String(p.k);
    svg.appendChild(label);
  }
  root.appendChild(svg);

  const table = document.createElement('table');
  table.className = 'curve-table';
  table.innerHTML = '<thead><tr><th>k</th><th>mean C_v</th><th>std</th><th></th></tr></thead>';
  const tbody = document.createElement('tbody');
  for (const p of curve.points) {
    const tr = document.createElement('tr');
    const note = p.error !== null ? p.error : p.k === curve.chosen_k ? 'chosen' : '';
    tr.innerHTML =
      `<td>${p.k}</td>` +
      `<td>${p.mean_cv === null ? 'n/a' : formatNumber(p.mean_cv)}</td>` +
      `<td>${p.std_cv === null ? 'n/a' : formatNumber(p.std_cv)}</td>` +
      `<td>${note}</td>`;
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  root.appendChild(table);
}
