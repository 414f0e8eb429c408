/** Review session state: the current item, the decision form, and the
 * submit flow. DOM-free so it can be driven from tests; main.ts subscribes
 * and renders.
 *
 * POSTs are serialized: one decision in flight at a time, and a rejected
 * submission keeps the form contents so nothing the reviewer typed is lost.
 */

import { ApiError, type ReviewApi } from './api.js';
import type { FinalizeSummary, IssueTag, ReviewItemView, SessionInfo, Verdict } from './types.js';

export interface DecisionForm {
  verdict: Verdict;
  issues: IssueTag[];
  editedText: string;
  note: string;
}

export function emptyForm(): DecisionForm {
  return { verdict: 'accept', issues: [], editedText: '', note: '' };
}

/** Client-side check mirroring the server's decision invariants.
 * Returns null when the form is submittable. */
export function validateForm(form: DecisionForm): string | null {
  if (form.verdict === 'edit' && form.editedText.trim() === '') {
    return 'an edit needs the corrected text';
  }
  if (form.verdict === 'flag' && form.issues.length === 0) {
    return 'a flag needs at least one issue tag';
  }
  return null;
}

export interface ReviewState {
  session: SessionInfo | null;
  item: ReviewItemView | null;
  form: DecisionForm;
  error: string | null;
  submitting: boolean;
  done: boolean;
  summary: FinalizeSummary | null;
}

export class ReviewController {
  readonly state: ReviewState = {
    session: null,
    item: null,
    form: emptyForm(),
    error: null,
    submitting: false,
    done: false,
    summary: null,
  };

  private readonly api: ReviewApi;
  private readonly listeners: Array<() => void> = [];

  constructor(api: ReviewApi) {
    this.api = api;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async start(): Promise<void> {
    this.state.session = await this.api.session();
    await this.advance();
  }

  async advance(): Promise<void> {
    const next = await this.api.nextItem();
    this.state.done = next.done;
    this.state.item = next.item;
    this.state.form = emptyForm();
    if (next.item !== null) {
      // Editing starts from the answer under review.
      this.state.form.editedText = lastAnswer(next.item);
    }
    this.notify();
  }

  setVerdict(verdict: Verdict): void {
    this.state.form.verdict = verdict;
    this.state.error = null;
    this.notify();
  }

  toggleIssue(tag: IssueTag): void {
    const issues = this.state.form.issues;
    const at = issues.indexOf(tag);
    if (at === -1) issues.push(tag);
    else issues.splice(at, 1);
    this.notify();
  }

  setEditedText(text: string): void {
    this.state.form.editedText = text;
  }

  setNote(note: string): void {
    this.state.form.note = note;
  }

  /** Submit the current form; resolves true when the decision was stored
   * and the queue advanced. Validation failures and server rejections leave
   * the form intact. */
  async submit(): Promise<boolean> {
    const { item, form } = this.state;
    if (item === null || this.state.submitting) return false;
    const problem = validateForm(form);
    if (problem !== null) {
      this.state.error = problem;
      this.notify();
      return false;
    }
    this.state.submitting = true;
    this.notify();
    try {
      await this.api.decide(item.record_id, {
        verdict: form.verdict,
        issues: form.issues,
        edited_text: form.verdict === 'edit' ? form.editedText : undefined,
        note: form.note || undefined,
      });
    } catch (err) {
      this.state.error = err instanceof ApiError ? err.message : String(err);
      this.state.submitting = false;
      this.notify();
      return false;
    }
    this.state.submitting = false;
    this.state.error = null;
    this.state.session = await this.api.session();
    await this.advance();
    return true;
  }

  async finalize(): Promise<void> {
    this.state.summary = await this.api.finalize();
    this.state.session = await this.api.session();
    this.notify();
  }
}

export function lastAnswer(item: ReviewItemView): string {
  for (let i = item.turns.length - 1; i >= 0; i--) {
    const turn = item.turns[i];
    if (turn !== undefined && turn.role !== 'human') return turn.text;
  }
  return '';
}
