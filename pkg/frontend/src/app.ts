/**
 * Retake-loop controller: owns the session, submits attempts, renders the
 * service's answers, and speaks them through the live region. On a retake
 * the capture control regains focus so the next photo is one keypress away;
 * a failed upload is kept for retry without losing the session.
 */

import { ApiError, type ServiceClient } from './api.js';
import {
  announceCaption,
  announceExhausted,
  announceFeedback,
  EXHAUSTED_WARNING,
} from './announcer.js';
import type { AttemptResponse } from './types.js';
import {
  clear,
  renderAttempts,
  renderCaptionBanner,
  renderErrorBanner,
  renderExhaustedBanner,
} from './view.js';

export interface AppElements {
  attempts: HTMLElement;
  banner: HTMLElement;
  captureControl: HTMLElement;
}

export interface PendingUpload {
  image: BodyInit;
  mediaType: string;
}

export interface RetakeApp {
  submit(image: BodyInit, mediaType?: string): Promise<AttemptResponse | null>;
  retryPending(): Promise<AttemptResponse | null>;
  readonly sessionId: string | null;
  readonly pending: PendingUpload | null;
  readonly terminal: boolean;
}

interface AppOptions {
  doc: Document;
  client: ServiceClient;
  elements: AppElements;
  /** registers an object URL for an attempt's thumbnail; optional because
   * object URLs are unavailable in some test environments */
  thumbnailFor?: (image: BodyInit) => string | undefined;
}

export function createApp(options: AppOptions): RetakeApp {
  const { doc, client, elements } = options;
  const thumbnails = new Map<number, string>();
  let sessionId: string | null = null;
  let pending: PendingUpload | null = null;
  let terminal = false;

  async function refreshAttempts(): Promise<void> {
    if (!sessionId) return;
    const session = await client.getSession(sessionId);
    renderAttempts(doc, elements.attempts, session, thumbnails);
  }

  function handleTerminal(response: AttemptResponse): void {
    if (response.state === 'captioned' && response.caption) {
      renderCaptionBanner(doc, elements.banner, response.caption);
      announceCaption(doc, response.caption);
      terminal = true;
    } else if (response.state === 'exhausted') {
      renderExhaustedBanner(doc, elements.banner, response.caption, EXHAUSTED_WARNING);
      announceExhausted(doc, response.caption);
      terminal = true;
    }
  }

  function handleRetake(response: AttemptResponse): void {
    const decision = response.attempt.decision;
    if (decision) {
      announceFeedback(doc, decision.feedback);
    }
    elements.captureControl.focus();
  }

  async function submitUpload(upload: PendingUpload): Promise<AttemptResponse | null> {
    if (terminal) {
      renderErrorBanner(doc, elements.banner, 'This session already finished; reload to start over.');
      return null;
    }
    try {
      if (!sessionId) {
        sessionId = await client.createSession();
      }
      const response = await client.submitAttempt(sessionId, upload.image, upload.mediaType);
      pending = null;
      const thumb = options.thumbnailFor?.(upload.image);
      if (thumb) thumbnails.set(response.attempt.index, thumb);
      clear(elements.banner);
      await refreshAttempts();
      if (response.state === 'open') {
        handleRetake(response);
      } else {
        handleTerminal(response);
      }
      return response;
    } catch (err) {
      pending = upload; // keep the upload and the session for retry
      if (err instanceof ApiError) {
        if (err.status === 413) {
          renderErrorBanner(
            doc,
            elements.banner,
            'That photo is too large for the service. Use a smaller image and try again.',
          );
          pending = null; // retrying the same oversized payload cannot help
          return null;
        }
        renderErrorBanner(
          doc,
          elements.banner,
          `The service could not process the upload (${err.detail}). You can retry.`,
          () => void retryPending(),
        );
        return null;
      }
      renderErrorBanner(
        doc,
        elements.banner,
        'The service is unreachable. Your photo is kept; retry when back online.',
        () => void retryPending(),
      );
      return null;
    }
  }

  async function retryPending(): Promise<AttemptResponse | null> {
    if (!pending) return null;
    return submitUpload(pending);
  }

  return {
    submit(image, mediaType = 'application/octet-stream') {
      return submitUpload({ image, mediaType });
    },
    retryPending,
    get sessionId() {
      return sessionId;
    },
    get pending() {
      return pending;
    },
    get terminal() {
      return terminal;
    },
  };
}
