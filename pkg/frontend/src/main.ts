import { showToast } from './toast.js';
import { renderCoherenceView } from './views/coherence.js';
import { renderCurationView } from './views/curation.js';
import { renderMapView } from './views/map.js';
import { renderTablesView } from './views/tables.js';
import { renderTopicsView } from './views/topics.js';

type ViewName = 'coherence' | 'topics' | 'curation' | 'tables' | 'map';

const VIEWS: Record<ViewName, (root: HTMLElement, projectId: string) => Promise<void>> = {
  coherence: renderCoherenceView,
  topics: renderTopicsView,
  curation: renderCurationView,
  tables: renderTablesView,
  map: renderMapView,
};

function currentView(): ViewName {
  const name = window.location.hash.replace(/^#\/?/, '');
  return name in VIEWS ? (name as ViewName) : 'coherence';
}

function projectFromUrl(): string {
  return new URLSearchParams(window.location.search).get('project') ?? 'demo';
}

async function route(): Promise<void> {
  const root = document.getElementById('view');
  if (!root) return;
  const view = currentView();
  for (const link of document.querySelectorAll<HTMLAnchorElement>('nav a')) {
    link.classList.toggle('active', link.dataset['view'] === view);
  }
  try {
    await VIEWS[view](root, projectFromUrl());
  } catch (err) {
    root.innerHTML = '';
    const msg = document.createElement('p');
    msg.className = 'load-error';
    msg.textContent = `failed to load ${view}: ${String(err)}`;
    root.appendChild(msg);
    showToast(String(err), 'error');
  }
}

window.addEventListener('hashchange', () => void route());
window.addEventListener('DOMContentLoaded', () => void route());
