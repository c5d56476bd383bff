import { getLdaTopics, getProject } from '../api.js';
import { formatNumber } from '../format.js';

async function renderWordLists(host: HTMLElement, projectId: string, k: number): Promise<void> {
  host.innerHTML = '';
  const data = await getLdaTopics(projectId, k);
  for (const topic of data.topics) {
    const card = document.createElement('div');
    card.className = 'topic-card';
    const title = document.createElement('h3');
    title.textContent = `Topic ${topic.topic}`;
    card.appendChild(title);
    const ol = document.createElement('ol');
    for (const w of topic.words) {
      const li = document.createElement('li');
      li.innerHTML = `<span class="token">${w.token}</span> <span class="phi">${formatNumber(w.phi, 4)}</span>`;
      ol.appendChild(li);
    }
    card.appendChild(ol);
    host.appendChild(card);
  }
}

/** Top-10 word lists per LDA topic for a fitted k. The analyst reads
 * these to decide which LDA topics to split or merge into curated specs
 * (done over in the Curation view). */
export async function renderTopicsView(root: HTMLElement, projectId: string): Promise<void> {
  root.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'LDA topics';
  root.appendChild(heading);

  const summary = await getProject(projectId);
  if (summary.models.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No fitted models in this project.';
    root.appendChild(empty);
    return;
  }

  const picker = document.createElement('label');
  picker.textContent = 'k ';
  const select = document.createElement('select');
  select.id = 'k-select';
  for (const k of summary.models) {
    const opt = document.createElement('option');
    opt.value = String(k);
    opt.textContent = String(k);
    select.appendChild(opt);
  }
  const initial = summary.chosen_k !== null && summary.models.includes(summary.chosen_k)
    ? summary.chosen_k
    : summary.models[0]!;
  select.value = String(initial);
  picker.appendChild(select);
  root.appendChild(picker);

  const cards = document.createElement('div');
  cards.className = 'topic-cards';
  root.appendChild(cards);

  select.addEventListener('change', () => {
    void renderWordLists(cards, projectId, Number(select.value));
  });
  await renderWordLists(cards, projectId, initial);
}
