/** Mirrors of the review server's JSON payloads. The UI renders these as
 * delivered; boxes in particular are never re-parsed from text. */

export interface BoxView {
  label: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface TurnView {
  role: string;
  text: string;
  boxes: BoxView[];
}

export interface ReviewItemView {
  record_id: string;
  frame_id: string;
  paradigm: string;
  subtask: string;
  turns: TurnView[];
  image_url: string | null;
  image_size: [number, number] | null;
  decided: boolean;
  progress: { decided: number; total: number };
}

export interface SessionInfo {
  ratio: number;
  seed: number;
  sample_size: number;
  decided: number;
  remaining: number;
  corpus_size: number;
  finalized: boolean;
}

export interface NextItemResponse {
  done: boolean;
  item: ReviewItemView | null;
}

export type Verdict = 'accept' | 'edit' | 'flag';

export const ISSUE_TAGS = ['completeness', 'relevance', 'clarity'] as const;
export type IssueTag = (typeof ISSUE_TAGS)[number];

export interface DecisionBody {
  verdict: Verdict;
  issues: IssueTag[];
  edited_text?: string;
  note?: string;
}

export interface FinalizeSummary {
  changes: ChangeEntry[];
  conflicts: ConflictEntry[];
  rules: number;
  kept: number;
  dropped: number;
}

export interface ChangeEntry {
  record_id: string;
  action: 'edit-decision' | 'drop-decision' | 'replace-rule' | 'drop-rule';
  rule_ids: string[];
  before: string | null;
  after: string | null;
}

export interface ConflictEntry {
  record_id: string;
  rule_ids: string[];
  reason: string;
}
