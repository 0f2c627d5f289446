import { describe, expect, it } from "vitest";

import type { AskResult, HistoryRecord, VerdictSummary } from "../src/api.js";
import {
  badgeLabel,
  formatConfidence,
  newChatState,
  sessionIdFor,
  turnFromAsk,
  turnsFromHistory,
} from "../src/state.js";

const PASS: VerdictSummary = { result: "Pass", confidence: 0.95, accepted: true, reasoning: "ok" };
const FAIL: VerdictSummary = { result: "Not Pass", confidence: 0.0, accepted: false, reasoning: "off-topic" };

function askResult(overrides: Partial<AskResult> = {}): AskResult {
  return {
    record_id: "r1",
    session_id: "s1",
    rewritten_question: "q",
    answer: "the answer",
    verdict: PASS,
    sources: [{ chunk_id: "c#0", score: 0.5, doc_id: "c" }],
    grounded: true,
    timings_ms: { intent: 1, retrieve: 1, generate: 1, validate: 1 },
    ...overrides,
  };
}

describe("badges", () => {
  it("renders confidence to two decimals", () => {
    expect(formatConfidence(0.95)).toBe("0.95");
    expect(formatConfidence(0.9)).toBe("0.90");
    expect(formatConfidence(1)).toBe("1.00");
    expect(formatConfidence(0.685)).toBe("0.69");
  });

  it("labels accepted and rejected verdicts", () => {
    expect(badgeLabel(PASS)).toBe("Validated 0.95");
    expect(badgeLabel(FAIL)).toBe("Rejected");
  });
});

describe("turn mapping", () => {
  it("uses the answer field byte-for-byte when accepted", () => {
    const turn = turnFromAsk("q?", askResult());
    expect(turn.text).toBe("the answer");
    expect(turn.accepted).toBe(true);
  });

  it("uses the rejection message when rejected", () => {
    const turn = turnFromAsk(
      "q?",
      askResult({ answer: undefined, rejection_message: "nope message", verdict: FAIL }),
    );
    expect(turn.text).toBe("nope message");
    expect(turn.accepted).toBe(false);
    expect(turn.verdict.reasoning).toBe("off-topic");
  });

  it("orders history oldest-first for rendering", () => {
    const record = (turn_index: number): HistoryRecord => ({
      record_id: `r${turn_index}`,
      session_id: "s",
      turn_index,
      question: `q${turn_index}`,
      rewritten_question: `q${turn_index}`,
      answer: `a${turn_index}`,
      verdict: PASS,
      sources: [],
      created_at: "2026-01-01T00:00:00Z",
    });
    // server pages newest-first
    const turns = turnsFromHistory([record(2), record(1), record(0)]);
    expect(turns.map((t) => t.question)).toEqual(["q0", "q1", "q2"]);
  });
});

describe("chat state", () => {
  it("starts idle with an empty transcript", () => {
    const state = newChatState("s");
    expect(state.turns).toEqual([]);
    expect(state.inFlight).toBe(false);
    expect(state.historyOffset).toBe(0);
    expect(state.validationThreshold).toBeNull();
  });

  it("generates distinct session ids", () => {
    expect(sessionIdFor()).not.toBe(sessionIdFor());
  });
});
