import { getCenters2d } from '../api.js';

const SVGNS = 'http://www.w3.org/2000/svg';
const W = 640;
const H = 480;
const PAD = 50;

/** Scatter of topic centers projected to the plane. Distances between
 * nearby markers hint at specs competing for the same sentences. */
export async function renderMapView(root: HTMLElement, projectId: string): Promise<void> {
  root.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'Topic map';
  root.appendChild(heading);

  const { topics } = await getCenters2d(projectId);
  if (topics.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No topic centers to plot.';
    root.appendChild(empty);
    return;
  }

  const xs = topics.map((t) => t.x);
  const ys = topics.map((t) => t.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) => PAD + ((x - xMin) / (xMax - xMin || 1)) * (W - 2 * PAD);
  const sy = (y: number) => H - PAD - ((y - yMin) / (yMax - yMin || 1)) * (H - 2 * PAD);

  const svg = document.createElementNS(SVGNS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${W} ${H}`);
  svg.setAttribute('class', 'topic-map');
  for (const t of topics) {
    const dot = document.createElementNS(SVGNS, 'circle');
    dot.setAttribute('cx', String(sx(t.x)));
    dot.setAttribute('cy', String(sy(t.y)));
    dot.setAttribute('r', '7');
    dot.setAttribute('class', 'map-dot');
    dot.setAttribute('data-topic-id', String(t.topic_id));
    svg.appendChild(dot);

    const label = document.createElementNS(SVGNS, 'text');
    label.setAttribute('x', String(sx(t.x) + 10));
    label.setAttribute('y', String(sy(t.y) + 4));
    label.setAttribute('class', 'map-label');
    label.textContent = t.name;
    svg.appendChild(label);
  }
  root.appendChild(svg);
}
