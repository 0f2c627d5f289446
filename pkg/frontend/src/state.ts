// Pure view-state helpers: converting API payloads into renderable turns.
// No DOM, no fetch — unit-testable in isolation.

import type { AskResult, HistoryRecord, Source, VerdictSummary } from "./api.js";

export interface Turn {
  question: string;
  rewrittenQuestion: string;
  // The displayed body text is byte-equal to a field of some API response:
  // `answer` when accepted, `rejection_message` otherwise.
  text: string;
  accepted: boolean;
  verdict: VerdictSummary;
  sources: Source[];
}

export interface ChatViewState {
  sessionId: string;
  turns: Turn[];
  // paging cursor for "load earlier" over GET /history
  historyOffset: number;
  historyExhausted: boolean;
  validationThreshold: number | null;
  inFlight: boolean;
  draft: string;
  error: string | null;
  retryQuestion: string | null;
}

export function newChatState(sessionId: string): ChatViewState {
  return {
    sessionId,
    turns: [],
    historyOffset: 0,
    historyExhausted: false,
    validationThreshold: null,
    inFlight: false,
    draft: "",
    error: null,
    retryQuestion: null,
  };
}

export function formatConfidence(confidence: number): string {
  return confidence.toFixed(2);
}

export function badgeLabel(verdict: VerdictSummary): string {
  return verdict.accepted ? `Validated ${formatConfidence(verdict.confidence)}` : "Rejected";
}

export function turnFromAsk(question: string, result: AskResult): Turn {
  return {
    question,
    rewrittenQuestion: result.rewritten_question,
    text: result.answer !== undefined ? result.answer : (result.rejection_message ?? ""),
    accepted: result.verdict.accepted,
    verdict: result.verdict,
    sources: result.sources,
  };
}

export function turnFromRecord(record: HistoryRecord): Turn {
  return {
    question: record.question,
    rewrittenQuestion: record.rewritten_question,
    text: record.answer !== undefined ? record.answer : (record.rejection_message ?? ""),
    accepted: record.verdict.accepted,
    verdict: record.verdict,
    sources: record.sources,
  };
}

// /history pages arrive newest-first; the chat column renders in send order.
export function turnsFromHistory(records: HistoryRecord[]): Turn[] {
  return [...records].reverse().map(turnFromRecord);
}

export function sessionIdFor(now: Date = new Date()): string {
  const stamp = now.toISOString().replace(/[-:.TZ]/g, "");
  return `web-${stamp}-${Math.floor(Math.random() * 1e6)}`;
}
