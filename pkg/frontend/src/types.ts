/**
 * Wire types mirroring the service JSON exactly. The client never derives
 * gate decisions itself; everything rendered comes verbatim from these
 * payloads.
 */

export interface FeedbackEntry {
  flaw: string;
  severity: number; // display-clamped to [0, 5]
  message: string;
}

export interface GateDecision {
  verdict: string; // "pass" | "retake", rendered verbatim
  feedback: FeedbackEntry[];
}

export interface PredictionPayload {
  raw: Record<string, number>;
  display: Record<string, number>;
}

export interface AttemptRecord {
  index: number;
  prediction: PredictionPayload | null;
  decision: GateDecision | null;
  error: string | null;
  timestamp: number;
}

export type SessionStateName = 'open' | 'captioned' | 'exhausted';

export interface SessionPayload {
  session_id: string;
  attempts: AttemptRecord[];
  state: SessionStateName;
  caption: string | null;
  warning: boolean;
}

export interface AttemptResponse {
  session_id: string;
  attempt: AttemptRecord;
  state: SessionStateName;
  caption: string | null;
  warning: boolean;
  exhausted: boolean;
}

export interface PredictResponse {
  prediction: PredictionPayload;
  decision: string;
  feedback: FeedbackEntry[];
  model: Record<string, unknown>;
}

export interface HealthResponse {
  status: string;
  model_loaded: boolean;
  journal: string;
}
