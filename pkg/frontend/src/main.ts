/** Single-screen review app. The server that owns the session also serves
 * this page, so the API lives at the same origin under /api/. */

import { ReviewApi } from './api.js';
import { bindReviewKeys } from './keyboard.js';
import { overlayColor, toDisplayRect } from './overlay.js';
import { ReviewController, validateForm } from './state.js';
import { ISSUE_TAGS, type ReviewItemView } from './types.js';

const api = new ReviewApi('');
const controller = new ReviewController(api);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderImage(item: ReviewItemView): HTMLElement {
  const panel = el('div', 'image-panel');
  const url = api.imageUrl(item);
  if (url === null) {
    panel.appendChild(el('div', 'image-placeholder', 'no image for this record'));
    return panel;
  }

  const stage = el('div', 'image-stage');
  const img = el('img');
  img.alt = item.frame_id;
  img.src = url;

  const drawOverlays = () => {
    stage.querySelectorAll('.overlay').forEach((node) => node.remove());
    const width = img.clientWidth;
    const height = img.clientHeight;
    if (width === 0 || height === 0) return;
    let index = 0;
    for (const turn of item.turns) {
      for (const box of turn.boxes) {
        const rect = toDisplayRect(box, width, height);
        const overlay = el('div', 'overlay');
        overlay.style.left = `${rect.left}px`;
        overlay.style.top = `${rect.top}px`;
        overlay.style.width = `${rect.width}px`;
        overlay.style.height = `${rect.height}px`;
        overlay.style.borderColor = overlayColor(index);
        const tag = el('span', 'overlay-label', box.label || '(unlabeled)');
        tag.style.background = overlayColor(index);
        overlay.appendChild(tag);
        stage.appendChild(overlay);
        index += 1;
      }
    }
  };

  img.addEventListener('load', drawOverlays);
  img.addEventListener('error', () => {
    stage.replaceChildren();
    const placeholder = el('div', 'image-placeholder', 'image failed to load');
    const retry = el('button', 'retry', 'retry');
    retry.addEventListener('click', () => {
      render();
    });
    placeholder.appendChild(retry);
    stage.appendChild(placeholder);
  });
  window.addEventListener('resize', drawOverlays);

  stage.appendChild(img);
  panel.appendChild(stage);
  return panel;
}

function renderTurns(item: ReviewItemView): HTMLElement {
  const list = el('div', 'turns');
  for (const turn of item.turns) {
    const row = el('div', `turn turn-${turn.role}`);
    row.appendChild(el('span', 'role', turn.role));
    row.appendChild(el('span', 'text', turn.text));
    list.appendChild(row);
  }
  return list;
}

function renderForm(item: ReviewItemView): HTMLElement {
  const { form } = controller.state;
  const panel = el('div', 'decision-panel');

  const verdicts = el('div', 'verdicts');
  for (const verdict of ['accept', 'edit', 'flag'] as const) {
    const button = el('button', form.verdict === verdict ? 'verdict active' : 'verdict');
    button.textContent = `${verdict} (${verdict[0]})`;
    button.addEventListener('click', () => controller.setVerdict(verdict));
    verdicts.appendChild(button);
  }
  panel.appendChild(verdicts);

  if (form.verdict === 'edit') {
    const editor = el('textarea', 'editor');
    editor.value = form.editedText;
    editor.rows = 4;
    editor.addEventListener('input', () => controller.setEditedText(editor.value));
    panel.appendChild(editor);
  }

  if (form.verdict === 'flag') {
    const tags = el('div', 'issues');
    for (const tag of ISSUE_TAGS) {
      const label = el('label', 'issue');
      const box = el('input');
      box.type = 'checkbox';
      box.checked = form.issues.includes(tag);
      box.addEventListener('change', () => controller.toggleIssue(tag));
      label.appendChild(box);
      label.appendChild(document.createTextNode(tag));
      tags.appendChild(label);
    }
    panel.appendChild(tags);
  }

  const note = el('input', 'note');
  note.type = 'text';
  note.placeholder = 'note (optional)';
  note.value = form.note;
  note.addEventListener('input', () => controller.setNote(note.value));
  panel.appendChild(note);

  const submit = el('button', 'submit');
  submit.textContent = controller.state.submitting ? 'submitting…' : 'submit (Enter)';
  submit.disabled = controller.state.submitting || validateForm(form) !== null;
  submit.addEventListener('click', () => void controller.submit());
  panel.appendChild(submit);

  if (controller.state.error !== null) {
    panel.appendChild(el('div', 'error', controller.state.error));
  }

  const meta = el('div', 'meta');
  meta.textContent = `${item.paradigm} / ${item.subtask} · ${item.record_id}`;
  panel.appendChild(meta);
  return panel;
}

function renderDone(): HTMLElement {
  const panel = el('div', 'done-panel');
  panel.appendChild(el('h2', undefined, 'queue complete'));
  const { summary } = controller.state;
  if (summary === null) {
    const finalize = el('button', 'finalize', 'finalize session');
    finalize.addEventListener('click', () => void controller.finalize());
    panel.appendChild(finalize);
  } else {
    const lines = [
      `kept ${summary.kept}, dropped ${summary.dropped}`,
      `${summary.changes.length} changes, ${summary.conflicts.length} conflicts, ${summary.rules} rules`,
    ];
    for (const line of lines) panel.appendChild(el('p', undefined, line));
  }
  return panel;
}

function render(): void {
  const app = document.getElementById('app');
  if (app === null) return;
  app.replaceChildren();

  const { session, item, done } = controller.state;
  const header = el('header');
  header.appendChild(el('h1', undefined, 'corpus review'));
  if (session !== null) {
    header.appendChild(
      el(
        'span',
        'progress',
        `${session.decided} / ${session.sample_size} decided · corpus ${session.corpus_size}`,
      ),
    );
  }
  app.appendChild(header);

  if (item !== null) {
    const main = el('div', 'item-view');
    main.appendChild(renderImage(item));
    const right = el('div', 'text-column');
    right.appendChild(renderTurns(item));
    right.appendChild(renderForm(item));
    main.appendChild(right);
    app.appendChild(main);
  } else if (done) {
    app.appendChild(renderDone());
  } else {
    app.appendChild(el('p', undefined, 'loading…'));
  }
}

controller.onChange(render);
bindReviewKeys({
  setVerdict: (verdict) => controller.setVerdict(verdict),
  submit: () => void controller.submit(),
});

controller.start().catch((err) => {
  const app = document.getElementById('app');
  if (app !== null) {
    app.replaceChildren(el('div', 'error', `failed to load session: ${String(err)}`));
  }
});
