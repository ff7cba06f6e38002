// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from 'vitest';

import type { AttemptRecord, SessionPayload } from '../src/types.js';
import {
  renderAttemptCard,
  renderAttempts,
  renderCaptionBanner,
  renderErrorBanner,
  renderExhaustedBanner,
} from '../src/view.js';

function retakeAttempt(index: number): AttemptRecord {
  return {
    index,
    prediction: null,
    decision: {
      verdict: 'retake',
      feedback: [
        { flaw: 'blur', severity: 3.3, message: 'The picture is blurry (severity 3.3/5).' },
        { flaw: 'dark', severity: 2.1, message: 'The picture is too dark (severity 2.1/5).' },
      ],
    },
    error: null,
    timestamp: 0,
  };
}

describe('view rendering', () => {
  let container: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<ol id="c"></ol><div id="b"></div>';
    container = document.getElementById('c')!;
  });

  it('renders the decision string verbatim with ranked feedback', () => {
    const card = renderAttemptCard(document, retakeAttempt(1));
    expect(card.querySelector('.decision-badge')!.textContent).toBe('retake');
    const flaws = Array.from(card.querySelectorAll('.feedback-list li')).map(
      (li) => (li as HTMLElement).dataset.flaw,
    );
    expect(flaws).toEqual(['blur', 'dark']); // service order preserved
    const numerals = Array.from(card.querySelectorAll('.severity-numeral')).map(
      (el) => el.textContent,
    );
    expect(numerals).toEqual(['3.3', '2.1']);
  });

  it('renders pass decisions without feedback', () => {
    const attempt: AttemptRecord = {
      index: 2,
      prediction: null,
      decision: { verdict: 'pass', feedback: [] },
      error: null,
      timestamp: 0,
    };
    const card = renderAttemptCard(document, attempt);
    expect(card.querySelector('.decision-badge')!.textContent).toBe('pass');
    expect(card.querySelector('.feedback-list')).toBeNull();
  });

  it('orders attempt history by attempt index', () => {
    const session: SessionPayload = {
      session_id: 's',
      attempts: [retakeAttempt(2), retakeAttempt(1), retakeAttempt(3)],
      state: 'open',
      caption: null,
      warning: false,
    };
    renderAttempts(document, container, session);
    const indices = Array.from(container.children).map(
      (el) => (el as HTMLElement).dataset.index,
    );
    expect(indices).toEqual(['1', '2', '3']);
  });

  it('shows attempt thumbnails when available', () => {
    const thumbs = new Map([[1, 'blob:fake-url']]);
    const session: SessionPayload = {
      session_id: 's',
      attempts: [retakeAttempt(1)],
      state: 'open',
      caption: null,
      warning: false,
    };
    renderAttempts(document, container, session, thumbs);
    const img = container.querySelector('img')!;
    expect(img.getAttribute('src')).toBe('blob:fake-url');
    expect(img.alt).toContain('attempt 1');
  });

  it('renders the caption banner prominently', () => {
    const banner = document.getElementById('b')!;
    renderCaptionBanner(document, banner, 'a yellow square on a teal background');
    expect(banner.querySelector('.caption-text')!.textContent).toBe(
      'a yellow square on a teal background',
    );
  });

  it('renders the exhausted banner with the warning', () => {
    const banner = document.getElementById('b')!;
    renderExhaustedBanner(document, banner, 'a blurry image', 'best effort only');
    expect(banner.querySelector('.warning-text')!.textContent).toBe('best effort only');
    expect(banner.querySelector('.caption-text')!.textContent).toBe('a blurry image');
  });

  it('renders error banners with a working retry button', () => {
    const banner = document.getElementById('b')!;
    const onRetry = vi.fn();
    renderErrorBanner(document, banner, 'offline', onRetry);
    expect(banner.querySelector('[role="alert"]')).not.toBeNull();
    (banner.querySelector('.retry-button') as HTMLButtonElement).click();
    expect(onRetry).toHaveBeenCalledTimes(1);
  });

  it('renders decode-failure attempts with their error note', () => {
    const attempt: AttemptRecord = {
      index: 1,
      prediction: null,
      decision: null,
      error: 'decode failed: truncated payload',
      timestamp: 0,
    };
    const card = renderAttemptCard(document, attempt);
    expect(card.querySelector('.attempt-error')!.textContent).toContain('decode failed');
  });
});
