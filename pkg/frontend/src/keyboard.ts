/** Keyboard shortcuts for the review loop: a / e / f pick the verdict,
 * Enter submits. Returns the action taken so callers (and tests) can tell
 * whether the event was consumed. */

import type { Verdict } from './types.js';

export interface KeyActions {
  setVerdict: (verdict: Verdict) => void;
  submit: () => void;
}

interface KeyEventLike {
  key: string;
  target: unknown;
  preventDefault: () => void;
}

const VERDICT_KEYS: Record<string, Verdict> = {
  a: 'accept',
  e: 'edit',
  f: 'flag',
};

function isTypingTarget(target: unknown): boolean {
  if (typeof HTMLElement === 'undefined' || !(target instanceof HTMLElement)) {
    return false;
  }
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    target.isContentEditable
  );
}

export function handleReviewKey(event: KeyEventLike, actions: KeyActions): string | null {
  if (isTypingTarget(event.target)) return null;
  const verdict = VERDICT_KEYS[event.key];
  if (verdict !== undefined) {
    event.preventDefault();
    actions.setVerdict(verdict);
    return verdict;
  }
  if (event.key === 'Enter') {
    event.preventDefault();
    actions.submit();
    return 'submit';
  }
  return null;
}

export function bindReviewKeys(actions: KeyActions): () => void {
  const listener = (event: KeyboardEvent) => {
    handleReviewKey(event, actions);
  };
  window.addEventListener('keydown', listener);
  return () => window.removeEventListener('keydown', listener);
}
