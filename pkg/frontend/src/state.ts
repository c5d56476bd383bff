import type { TopicSpecOut } from './types.js';

/** Client-side mirror of a topic spec under edit. `serverVersion` is the
 * per-topic version the draft was forked from; saves send it as
 * base_version so concurrent edits surface as 409s instead of clobbers. */
export interface UiTopicDraft {
  topicId: number;
  keywords: string[];
  threshold: number;
  serverVersion: number;
}

export function draftFromSpec(spec: TopicSpecOut): UiTopicDraft {
  return {
    topicId: spec.topic_id,
    keywords: [...spec.keywords],
    threshold: spec.threshold,
    serverVersion: spec.version,
  };
}

/** Dirty is derived, never stored: a draft is dirty exactly when it
 * differs from the spec it was forked from. */
export function isDirty(draft: UiTopicDraft, spec: TopicSpecOut): boolean {
  if (draft.threshold !== spec.threshold) return true;
  if (draft.keywords.length !== spec.keywords.length) return true;
  return draft.keywords.some((kw, i) => kw !== spec.keywords[i]);
}

/** Save is allowed only with at least one non-blank keyword. */
export function canSave(draft: UiTopicDraft): boolean {
  return draft.keywords.some((kw) => kw.trim().length > 0);
}

// ---------------------------------------------------------------------------
// draft persistence: sessionStorage only, so drafts survive view
// navigation within a session and nothing outlives the tab
// ---------------------------------------------------------------------------

const STORAGE_KEY = 'topicforge.drafts';

type DraftMap = Record<string, UiTopicDraft>;

function draftKey(projectId: string, topicId: number): string {
  return `${projectId}:${topicId}`;
}

function readAll(): DraftMap {
  const raw = sessionStorage.getItem(STORAGE_KEY);
  if (!raw) return {};
  try {
    return JSON.parse(raw) as DraftMap;
  } catch {
    return {};
  }
}

function writeAll(drafts: DraftMap): void {
  sessionStorage.setItem(STORAGE_KEY, JSON.stringify(drafts));
}

export function loadDraft(projectId: string, topicId: number): UiTopicDraft | null {
  return readAll()[draftKey(projectId, topicId)] ?? null;
}

export function saveDraft(projectId: string, draft: UiTopicDraft): void {
  const all = readAll();
  all[draftKey(projectId, draft.topicId)] = draft;
  writeAll(all);
}

export function clearDraft(projectId: string, topicId: number): void {
  const all = readAll();
  delete all[draftKey(projectId, topicId)];
  writeAll(all);
}

/** Stored draft if it still differs from the committed spec, else a fresh
 * fork. Drops stale drafts: if the spec moved underneath (version bump)
 * and the draft no longer differs, there is nothing worth keeping. */
export function resolveDraft(projectId: string, spec: TopicSpecOut): UiTopicDraft {
  const stored = loadDraft(projectId, spec.topic_id);
  if (stored && isDirty(stored, spec)) {
    return stored;
  }
  if (stored) clearDraft(projectId, spec.topic_id);
  return draftFromSpec(spec);
}
