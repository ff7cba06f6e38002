/**
 * DOM rendering of session state. Everything shown is copied verbatim from
 * the service payloads: decision strings, feedback order, severities. No
 * gate logic lives in the client.
 */

import type { AttemptRecord, SessionPayload } from './types.js';

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

export function renderAttemptCard(
  doc: Document,
  attempt: AttemptRecord,
  thumbnailUrl?: string,
): HTMLElement {
  const card = doc.createElement('li');
  card.className = 'attempt-card';
  card.dataset.index = String(attempt.index);

  const heading = doc.createElement('h3');
  heading.textContent = `Attempt ${attempt.index}`;
  card.appendChild(heading);

  if (thumbnailUrl) {
    const img = doc.createElement('img');
    img.src = thumbnailUrl;
    img.alt = `Photo submitted as attempt ${attempt.index}`;
    img.className = 'attempt-thumb';
    card.appendChild(img);
  }

  if (attempt.decision) {
    const badge = doc.createElement('span');
    badge.className = `decision-badge decision-${attempt.decision.verdict}`;
    badge.textContent = attempt.decision.verdict; // verbatim from the service
    card.appendChild(badge);

    if (attempt.decision.feedback.length > 0) {
      const list = doc.createElement('ul');
      list.className = 'feedback-list';
      for (const entry of attempt.decision.feedback) {
        const item = doc.createElement('li');
        item.dataset.flaw = entry.flaw;

        const severity = doc.createElement('span');
        severity.className = 'severity-numeral';
        severity.textContent = entry.severity.toFixed(1);

        const label = doc.createElement('span');
        label.className = 'flaw-name';
        label.textContent = entry.flaw;

        const message = doc.createElement('p');
        message.textContent = entry.message;

        item.append(severity, label, message);
        list.appendChild(item);
      }
      card.appendChild(list);
    }
  }

  if (attempt.error) {
    const note = doc.createElement('p');
    note.className = 'attempt-error';
    note.textContent = attempt.error;
    card.appendChild(note);
  }

  return card;
}

/** Render the full attempt history, ordered by attempt index. */
export function renderAttempts(
  doc: Document,
  container: HTMLElement,
  session: SessionPayload,
  thumbnails?: Map<number, string>,
): void {
  clear(container);
  const ordered = [...session.attempts].sort((a, b) => a.index - b.index);
  for (const attempt of ordered) {
    container.appendChild(renderAttemptCard(doc, attempt, thumbnails?.get(attempt.index)));
  }
}

export function renderCaptionBanner(doc: Document, container: HTMLElement, caption: string): void {
  clear(container);
  const banner = doc.createElement('section');
  banner.className = 'banner banner-caption';
  const heading = doc.createElement('h2');
  heading.textContent = 'Caption';
  const text = doc.createElement('p');
  text.className = 'caption-text';
  text.textContent = caption;
  banner.append(heading, text);
  container.appendChild(banner);
}

export function renderExhaustedBanner(
  doc: Document,
  container: HTMLElement,
  caption: string | null,
  warningText: string,
): void {
  clear(container);
  const banner = doc.createElement('section');
  banner.className = 'banner banner-warning';
  const heading = doc.createElement('h2');
  heading.textContent = 'Attempts exhausted';
  const warning = doc.createElement('p');
  warning.className = 'warning-text';
  warning.textContent = warningText;
  banner.append(heading, warning);
  if (caption) {
    const text = doc.createElement('p');
    text.className = 'caption-text';
    text.textContent = caption;
    banner.appendChild(text);
  }
  container.appendChild(banner);
}

export function renderErrorBanner(
  doc: Document,
  container: HTMLElement,
  message: string,
  onRetry?: () => void,
): void {
  clear(container);
  const banner = doc.createElement('section');
  banner.className = 'banner banner-error';
  banner.setAttribute('role', 'alert');
  const text = doc.createElement('p');
  text.textContent = message;
  banner.appendChild(text);
  if (onRetry) {
    const button = doc.createElement('button');
    button.type = 'button';
    button.className = 'retry-button';
    button.textContent = 'Retry upload';
    button.addEventListener('click', onRetry);
    banner.appendChild(button);
  }
  container.appendChild(banner);
}
