/**
 * Screen-reader announcements through an aria-live region. Messages are
 * appended as separate lines so their DOM order is the announcement order.
 */

import type { FeedbackEntry } from './types.js';

export const ANNOUNCER_ID = 'sr-announcer';
export const EXHAUSTED_WARNING =
  'No attempt passed the quality check. The caption below is a best effort and may be unreliable.';

const MAX_LINES = 12;

export function ensureRegion(doc: Document): HTMLElement {
  let region = doc.getElementById(ANNOUNCER_ID);
  if (!region) {
    region = doc.createElement('div');
    region.id = ANNOUNCER_ID;
    region.className = 'visually-hidden';
    region.setAttribute('role', 'status');
    doc.body.appendChild(region);
  }
  return region;
}

export function announce(
  doc: Document,
  message: string,
  priority: 'polite' | 'assertive' = 'polite',
): void {
  const region = ensureRegion(doc);
  region.setAttribute('aria-live', priority);
  const line = doc.createElement('p');
  line.textContent = message;
  region.appendChild(line);
  while (region.childElementCount > MAX_LINES) {
    region.removeChild(region.firstElementChild as Element);
  }
}

/** Announce retake feedback in the order the service ranked it. */
export function announceFeedback(doc: Document, feedback: FeedbackEntry[]): void {
  for (const entry of feedback) {
    announce(doc, entry.message, 'assertive');
  }
}

export function announceCaption(doc: Document, caption: string): void {
  announce(doc, `Caption ready: ${caption}`, 'polite');
}

export function announceExhausted(doc: Document, caption: string | null): void {
  const tail = caption ? ` Caption: ${caption}` : '';
  announce(doc, `${EXHAUSTED_WARNING}${tail}`, 'assertive');
}
