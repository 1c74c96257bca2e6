// Pure UI state machine mirroring the server's session transitions.
//
// The server allows exactly: fresh -> awaiting_confirmation (first query),
// awaiting_confirmation -> locked (accept), awaiting_confirmation -> fresh
// (reject), and any -> fresh (reset). The UI adds only a `busy` flag for the
// in-flight request; illegal events leave the state untouched, so the DOM
// layer can never drive the session somewhere the server would refuse.

import type { Citation, ConfirmationRequest } from "./api.js";

export type Phase = "fresh" | "awaiting_confirmation" | "locked";

export interface TranscriptEntry {
  role: "user" | "system";
  text: string;
  citations: Citation[];
}

export interface Candidate {
  analysis_id: string;
  title: string;
  abstract_excerpt: string;
  alternatives: { analysis_id: string; title: string }[];
}

export interface UiSessionState {
  sessionId: string | null;
  phase: Phase;
  busy: boolean;
  candidate: Candidate | null;
  lockedTitle: string | null;
  transcript: TranscriptEntry[];
  hint: string | null;
}

export type UiEvent =
  | { type: "SUBMIT"; text: string }
  | { type: "CONFIRMATION_RECEIVED"; request: ConfirmationRequest }
  | { type: "ANSWER_RECEIVED"; text: string; citations: Citation[] }
  | { type: "ACCEPT" }
  | { type: "REJECT" }
  | { type: "RESET" }
  | { type: "REQUEST_FAILED"; message: string };

export const REPHRASE_HINT =
  "Candidate rejected - rephrase your question to match a different analysis.";

export function initialState(sessionId: string | null = null): UiSessionState {
  return {
    sessionId,
    phase: "fresh",
    busy: false,
    candidate: null,
    lockedTitle: null,
    transcript: [],
    hint: null,
  };
}

/** True when the input box accepts a new query. */
export function canSubmit(state: UiSessionState): boolean {
  return !state.busy && (state.phase === "fresh" || state.phase === "locked");
}

export function transition(state: UiSessionState, event: UiEvent): UiSessionState {
  switch (event.type) {
    case "SUBMIT": {
      if (!canSubmit(state) || !event.text.trim()) {
        return state; // guard: no request while awaiting confirmation or busy
      }
      return {
        ...state,
        busy: true,
        hint: null,
        transcript: [...state.transcript, { role: "user", text: event.text, citations: [] }],
      };
    }
    case "CONFIRMATION_RECEIVED": {
      if (state.phase !== "fresh" || !state.busy) {
        return state;
      }
      return {
        ...state,
        busy: false,
        phase: "awaiting_confirmation",
        candidate: {
          analysis_id: event.request.analysis_id,
          title: event.request.title,
          abstract_excerpt: event.request.abstract_excerpt,
          alternatives: event.request.alternatives.map((a) => ({
            analysis_id: a.analysis_id,
            title: a.title,
          })),
        },
      };
    }
    case "ANSWER_RECEIVED": {
      if (state.phase !== "locked" || !state.busy) {
        return state;
      }
      return {
        ...state,
        busy: false,
        transcript: [
          ...state.transcript,
          { role: "system", text: event.text, citations: event.citations },
        ],
      };
    }
    case "ACCEPT": {
      if (state.phase !== "awaiting_confirmation" || state.candidate === null) {
        return state;
      }
      return {
        ...state,
        phase: "locked",
        lockedTitle: state.candidate.title,
        candidate: null,
      };
    }
    case "REJECT": {
      if (state.phase !== "awaiting_confirmation") {
        return state;
      }
      return { ...state, phase: "fresh", candidate: null, hint: REPHRASE_HINT };
    }
    case "RESET": {
      return { ...initialState(state.sessionId) };
    }
    case "REQUEST_FAILED": {
      return {
        ...state,
        busy: false,
        transcript: [
          ...state.transcript,
          { role: "system", text: `Error: ${event.message}`, citations: [] },
        ],
      };
    }
  }
}
