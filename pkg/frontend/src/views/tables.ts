import { ApiError, getTables } from '../api.js';
import { formatDiffPoints, formatPercent } from '../format.js';
import { showToast } from '../toast.js';
import type { DiffTableOut } from '../types.js';

const FACETS = ['gender', 'nationality', 'income', 'education'];

function renderTable(table: DiffTableOut): HTMLElement {
  const wrap = document.createElement('div');
  wrap.className = 'diff-table';

  const caption = document.createElement('h3');
  caption.textContent = table.within
    ? `${table.facet} within ${table.within[0]} = ${table.within[1]}`
    : table.facet;
  wrap.appendChild(caption);

  const el = document.createElement('table');
  const head = document.createElement('thead');
  const hr = document.createElement('tr');
  const cols = ['topic', ...table.groups.map((g) => `${g} (n=${table.group_sizes[g] ?? 0})`)];
  for (const row of table.rows[0]?.cells ?? []) {
    cols.push(`${row.pair[0]} - ${row.pair[1]}`);
  }
  for (const c of cols) {
    const th = document.createElement('th');
    th.textContent = c;
    hr.appendChild(th);
  }
  head.appendChild(hr);
  el.appendChild(head);

  const body = document.createElement('tbody');
  for (const row of table.rows) {
    const tr = document.createElement('tr');
    const name = document.createElement('td');
    name.className = 'topic-name';
    name.textContent = row.topic_name;
    tr.appendChild(name);
    for (const g of table.groups) {
      const td = document.createElement('td');
      const prop = row.proportions[g] ?? 0;
      td.textContent = `${formatPercent(prop)} (${row.mentions[g] ?? 0})`;
      tr.appendChild(td);
    }
    for (const cell of row.cells) {
      const td = document.createElement('td');
      td.className = 'diff-cell';
      // stars arrive from the service; the UI renders them untouched
      td.textContent = cell.degenerate
        ? `${formatDiffPoints(cell.difference)} n/a`
        : `${formatDiffPoints(cell.difference)}${cell.stars}`;
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
  el.appendChild(body);
  wrap.appendChild(el);
  return wrap;
}

export async function renderTablesView(root: HTMLElement, projectId: string): Promise<void> {
  root.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'Cohort difference tables';
  root.appendChild(heading);

  const bar = document.createElement('div');
  bar.className = 'tables-bar';
  const facetSel = document.createElement('select');
  facetSel.id = 'facet-select';
  for (const f of FACETS) {
    const opt = document.createElement('option');
    opt.value = f;
    opt.textContent = f;
    facetSel.appendChild(opt);
  }
  const withinSel = document.createElement('select');
  withinSel.id = 'within-select';
  const none = document.createElement('option');
  none.value = '';
  none.textContent = '(no nesting)';
  withinSel.appendChild(none);
  for (const f of FACETS) {
    const opt = document.createElement('option');
    opt.value = f;
    opt.textContent = `within ${f}`;
    withinSel.appendChild(opt);
  }
  bar.appendChild(facetSel);
  bar.appendChild(withinSel);
  root.appendChild(bar);

  const legend = document.createElement('p');
  legend.className = 'legend';
  root.appendChild(legend);

  const host = document.createElement('div');
  host.id = 'tables-host';
  root.appendChild(host);

  const refresh = async (): Promise<void> => {
    host.innerHTML = '';
    legend.textContent = '';
    try {
      const payload = await getTables(projectId, facetSel.value, withinSel.value || undefined);
      legend.textContent = payload.legend;
      const note = document.createElement('p');
      note.className = 'snapshot-note';
      note.textContent = `snapshot ${payload.snapshot}`;
      host.appendChild(note);
      for (const t of payload.tables) {
        host.appendChild(renderTable(t));
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        const msg = document.createElement('p');
        msg.textContent = `No snapshot yet: ${String(err.detail)}. Run a recompute from the Curation view.`;
        host.appendChild(msg);
        return;
      }
      if (err instanceof ApiError && err.status === 422) {
        showToast(`tables request rejected: ${JSON.stringify(err.detail)}`, 'error');
        return;
      }
      throw err;
    }
  };

  facetSel.addEventListener('change', () => void refresh());
  withinSel.addEventListener('change', () => void refresh());
  await refresh();
}
