// Shapes of the /v1 JSON payloads. These mirror the service responses
// field-for-field; the UI renders them as-is and never derives numbers
// of its own.

export interface ProjectSummary {
  project_id: string;
  spec_version: number;
  topics: number[];
  models: number[];
  snapshots: string[];
  chosen_k: number | null;
  corpus_sha256: string | null;
}

export interface CoherencePoint {
  k: number;
  mean_cv: number | null;
  std_cv: number | null;
  error: string | null;
}

export interface CoherenceCurve {
  points: CoherencePoint[];
  chosen_k: number | null;
}

export interface ChosenKAck {
  k: number;
  recorded: boolean;
}

export interface LdaWord {
  token: string;
  phi: number;
}

export interface LdaTopic {
  topic: number;
  words: LdaWord[];
}

export interface LdaTopics {
  k: number;
  topics: LdaTopic[];
}

export interface TopicSpecOut {
  topic_id: number;
  name: string;
  keywords: string[];
  threshold: number;
  version: number;
}

export interface SpecsOut {
  version: number;
  specs: TopicSpecOut[];
}

export interface SpecUpdate {
  keywords: string[];
  threshold: number;
  base_version?: number;
}

export interface SpecSaved {
  topic_id: number;
  version: number;
  spec: { name: string; keywords: string[]; threshold: number };
}

export interface PreviewSentence {
  doc_id: string;
  sentence_index: number;
  tokens: string[];
  similarity: number;
  accepted: boolean;
}

export interface Preview {
  topic_id: number;
  threshold: number;
  keywords: string[];
  draft: boolean;
  sentences: PreviewSentence[];
}

export interface SnapshotMeta {
  snapshot_id: string;
  spec_version: number;
  topics: [number, string][];
}

export interface DiffCellOut {
  pair: [string, string];
  difference: number;
  z: number;
  p: number;
  stars: string;
  degenerate: boolean;
}

export interface DiffRowOut {
  topic_id: number;
  topic_name: string;
  mentions: Record<string, number>;
  proportions: Record<string, number>;
  cells: DiffCellOut[];
}

export interface DiffTableOut {
  facet: string;
  within: [string, string] | null;
  groups: string[];
  group_sizes: Record<string, number>;
  rows: DiffRowOut[];
}

export interface TablesOut {
  snapshot: string;
  facet: string;
  within: string | null;
  legend: string;
  tables: DiffTableOut[];
}

export interface Center2d {
  topic_id: number;
  name: string;
  x: number;
  y: number;
}

export interface Centers2dOut {
  topics: Center2d[];
}

// 422 detail entries (field errors) and the 409 conflict body.
export interface FieldError {
  loc: (string | number)[];
  msg: string;
  type: string;
}

export interface VersionConflict {
  message: string;
  current_version: number;
}
