import { ApiError, getPreview, getSpecs, postAssignments, putSpec } from '../api.js';
import { debounce, type Debounced } from '../debounce.js';
import { formatSimilarity } from '../format.js';
import { canSave, clearDraft, isDirty, resolveDraft, saveDraft, type UiTopicDraft } from '../state.js';
import { showToast } from '../toast.js';
import type { FieldError, TopicSpecOut, VersionConflict } from '../types.js';

// Debounce preview refreshes so a burst of keystrokes or a slider drag
// lands on the service as one request.
const PREVIEW_DEBOUNCE_MS = 300;

// The service defaults to 20 sampled sentences, too few for borderline
// cases to show up reliably; ask for the cap instead (exhaustive at demo
// scale, still bounded on a large corpus).
const PREVIEW_SAMPLE = 500;

let pendingPreview: Debounced<[]> | null = null;

function parseKeywords(text: string): string[] {
  return text
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

function fieldErrorText(errors: FieldError[]): string {
  return errors.map((e) => `${e.loc.join('.')}: ${e.msg}`).join('; ');
}

function renderPreview(host: HTMLElement, sentences: { doc_id: string; sentence_index: number; tokens: string[]; similarity: number; accepted: boolean }[]): void {
  host.innerHTML = '';
  if (sentences.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No sentences in sample.';
    host.appendChild(empty);
    return;
  }
  const ul = document.createElement('ul');
  ul.className = 'preview-list';
  for (const s of sentences) {
    const li = document.createElement('li');
    li.className = s.accepted ? 'preview-sentence accepted' : 'preview-sentence rejected';
    li.dataset['docId'] = s.doc_id;
    li.dataset['sentenceIndex'] = String(s.sentence_index);
    li.innerHTML =
      `<span class="sim">${formatSimilarity(s.similarity)}</span> ` +
      `<span class="sentence-tokens">${s.tokens.join(' ')}</span>`;
    ul.appendChild(li);
  }
  host.appendChild(ul);
}

function renderEditor(root: HTMLElement, projectId: string, spec: TopicSpecOut): void {
  pendingPreview?.cancel();
  root.innerHTML = '';
  const draft: UiTopicDraft = resolveDraft(projectId, spec);

  const header = document.createElement('h3');
  header.textContent = `${spec.name} (topic ${spec.topic_id}, version ${spec.version})`;
  root.appendChild(header);

  const dirtyFlag = document.createElement('span');
  dirtyFlag.id = 'dirty-flag';
  dirtyFlag.className = 'dirty-flag';
  root.appendChild(dirtyFlag);

  const kwLabel = document.createElement('label');
  kwLabel.textContent = 'Keywords (one per line)';
  const kwInput = document.createElement('textarea');
  kwInput.id = 'keywords-input';
  kwInput.rows = 8;
  kwInput.value = draft.keywords.join('\n');
  kwLabel.appendChild(kwInput);
  root.appendChild(kwLabel);

  const tauLabel = document.createElement('label');
  tauLabel.textContent = 'Threshold ';
  const slider = document.createElement('input');
  slider.type = 'range';
  slider.id = 'threshold-slider';
  slider.min = '-0.99';
  slider.max = '0.99';
  slider.step = '0.01';
  slider.value = String(draft.threshold);
  const tauValue = document.createElement('span');
  tauValue.id = 'threshold-value';
  tauValue.textContent = draft.threshold.toFixed(2);
  tauLabel.appendChild(slider);
  tauLabel.appendChild(tauValue);
  root.appendChild(tauLabel);

  const saveBtn = document.createElement('button');
  saveBtn.id = 'save-btn';
  saveBtn.textContent = 'Save';
  root.appendChild(saveBtn);

  const errs = document.createElement('div');
  errs.id = 'field-errors';
  errs.className = 'field-errors';
  root.appendChild(errs);

  const previewHost = document.createElement('div');
  previewHost.id = 'preview';
  root.appendChild(previewHost);

  const syncControls = (): void => {
    dirtyFlag.textContent = isDirty(draft, spec) ? 'unsaved changes' : '';
    saveBtn.disabled = !canSave(draft);
    tauValue.textContent = draft.threshold.toFixed(2);
  };

  const refreshPreview = async (): Promise<void> => {
    if (!canSave(draft)) {
      previewHost.innerHTML = '<p>Add a keyword to preview.</p>';
      return;
    }
    errs.textContent = '';
    try {
      const preview = await getPreview(projectId, spec.topic_id, {
        keywords: draft.keywords,
        threshold: draft.threshold,
        sample: PREVIEW_SAMPLE,
        seed: 0,
      });
      // accepted flags come back computed at the draft threshold
      renderPreview(previewHost, preview.sentences);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        errs.textContent = fieldErrorText(err.detail as FieldError[]);
        return;
      }
      showToast(`preview failed: ${String(err)}`, 'error');
    }
  };

  pendingPreview = debounce(() => void refreshPreview(), PREVIEW_DEBOUNCE_MS);

  const onEdit = (): void => {
    saveDraft(projectId, draft);
    syncControls();
    pendingPreview?.();
  };

  kwInput.addEventListener('input', () => {
    draft.keywords = parseKeywords(kwInput.value);
    onEdit();
  });
  slider.addEventListener('input', () => {
    draft.threshold = Number(slider.value);
    onEdit();
  });

  saveBtn.addEventListener('click', () => {
    void (async () => {
      try {
        const saved = await putSpec(projectId, spec.topic_id, {
          keywords: draft.keywords,
          threshold: draft.threshold,
          base_version: draft.serverVersion,
        });
        clearDraft(projectId, spec.topic_id);
        showToast(`saved topic ${saved.topic_id} at version ${saved.version}`);
        const viewRoot = (root.closest('.curation-root') as HTMLElement | null) ?? root;
        await renderCurationView(viewRoot, projectId, spec.topic_id);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          const conflict = err.detail as VersionConflict;
          showToast(`${conflict.message}; server is at version ${conflict.current_version}`, 'error');
        } else if (err instanceof ApiError && err.status === 422) {
          errs.textContent = fieldErrorText(err.detail as FieldError[]);
        } else {
          showToast(`save failed: ${String(err)}`, 'error');
        }
      }
    })();
  });

  syncControls();
  void refreshPreview();
}

export async function renderCurationView(root: HTMLElement, projectId: string, selectTopic?: number): Promise<void> {
  pendingPreview?.cancel();
  root.innerHTML = '';
  root.classList.add('curation-root');
  const heading = document.createElement('h2');
  heading.textContent = 'Curate topic specs';
  root.appendChild(heading);

  const specs = await getSpecs(projectId);
  if (specs.specs.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No topic specs in this project.';
    root.appendChild(empty);
    return;
  }

  const bar = document.createElement('div');
  bar.className = 'curation-bar';
  const picker = document.createElement('select');
  picker.id = 'topic-select';
  for (const s of specs.specs) {
    const opt = document.createElement('option');
    opt.value = String(s.topic_id);
    opt.textContent = `${s.topic_id}: ${s.name}`;
    picker.appendChild(opt);
  }
  bar.appendChild(picker);

  const recompute = document.createElement('button');
  recompute.id = 'recompute-btn';
  recompute.textContent = 'Recompute assignments';
  recompute.addEventListener('click', () => {
    void postAssignments(projectId)
      .then((meta) => showToast(`snapshot ${meta.snapshot_id} written at spec version ${meta.spec_version}`))
      .catch((err: unknown) => {
        if (err instanceof ApiError && err.status === 409) {
          showToast(String(err.detail), 'error');
        } else {
          showToast(`recompute failed: ${String(err)}`, 'error');
        }
      });
  });
  bar.appendChild(recompute);
  root.appendChild(bar);

  const editorHost = document.createElement('div');
  editorHost.id = 'editor';
  root.appendChild(editorHost);

  const byId = new Map(specs.specs.map((s) => [s.topic_id, s]));
  const initial = selectTopic !== undefined && byId.has(selectTopic) ? selectTopic : specs.specs[0]!.topic_id;
  picker.value = String(initial);
  picker.addEventListener('change', () => {
    const spec = byId.get(Number(picker.value));
    if (spec) renderEditor(editorHost, projectId, spec);
  });
  renderEditor(editorHost, projectId, byId.get(initial)!);
}
