// DOM layer: renders the transcript, the confirmation dialog, the locked
// banner, and the citations panel from UiSessionState; all phase changes go
// through the pure state machine and the server responses it reflects.

import { ApiClient, ApiError } from "./api.js";
import {
  UiEvent,
  UiSessionState,
  canSubmit,
  initialState,
  transition,
} from "./machine.js";

export class ChatApp {
  state: UiSessionState = initialState();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.render();
  }

  private dispatch(event: UiEvent): void {
    this.state = transition(this.state, event);
    this.render();
  }

  async ensureSession(): Promise<string> {
    if (this.state.sessionId === null) {
      const session = await this.api.createSession();
      this.state = { ...this.state, sessionId: session.session_id };
    }
    return this.state.sessionId as string;
  }

  async submitQuery(text: string): Promise<void> {
    if (!canSubmit(this.state) || !text.trim()) {
      return; // input is disabled while awaiting confirmation or in flight
    }
    const sessionId = await this.ensureSession();
    this.dispatch({ type: "SUBMIT", text });
    try {
      const outcome = await this.api.query(sessionId, text);
      if (outcome.kind === "confirmation_request") {
        this.dispatch({ type: "CONFIRMATION_RECEIVED", request: outcome });
      } else {
        this.dispatch({ type: "ANSWER_RECEIVED", text: outcome.text, citations: outcome.citations });
      }
    } catch (err) {
      this.dispatch({ type: "REQUEST_FAILED", message: describe(err) });
    }
  }

  async resolveConfirmation(accept: boolean): Promise<void> {
    if (this.state.phase !== "awaiting_confirmation" || this.state.sessionId === null) {
      return;
    }
    try {
      await this.api.confirm(this.state.sessionId, accept);
      this.dispatch({ type: accept ? "ACCEPT" : "REJECT" });
    } catch (err) {
      this.dispatch({ type: "REQUEST_FAILED", message: describe(err) });
    }
  }

  async pickAlternative(title: string): Promise<void> {
    if (this.state.phase !== "awaiting_confirmation") {
      return;
    }
    await this.resetSession();
    await this.submitQuery(title);
  }

  async resetSession(): Promise<void> {
    if (this.state.sessionId !== null) {
      try {
        await this.api.reset(this.state.sessionId);
      } catch (err) {
        this.dispatch({ type: "REQUEST_FAILED", message: describe(err) });
        return;
      }
    }
    this.dispatch({ type: "RESET" });
  }

  // ---- rendering ----------------------------------------------------------

  render(): void {
    const state = this.state;
    this.root.innerHTML = "";

    if (state.phase === "locked" && state.lockedTitle) {
      const banner = el("div", "locked-banner");
      banner.textContent = `Locked on: ${state.lockedTitle}`;
      this.root.appendChild(banner);
    }

    const transcript = el("div", "transcript");
    for (const entry of state.transcript) {
      const bubble = el("div", `bubble ${entry.role}`);
      const text = el("p", "bubble-text");
      text.textContent = entry.text;
      bubble.appendChild(text);
      if (entry.citations.length > 0) {
        bubble.appendChild(this.renderCitations(entry.citations));
      }
      transcript.appendChild(bubble);
    }
    if (state.hint) {
      const hint = el("div", "hint");
      hint.textContent = state.hint;
      transcript.appendChild(hint);
    }
    this.root.appendChild(transcript);

    if (state.phase === "awaiting_confirmation" && state.candidate) {
      this.root.appendChild(this.renderDialog());
    }

    this.root.appendChild(this.renderComposer());
  }

  private renderCitations(citations: { chunk_id: string; score: number; text: string }[]): HTMLElement {
    const panel = el("ul", "citations");
    for (const citation of citations) {
      const row = el("li", "citation-row");
      const label = el("button", "citation-label");
      label.textContent = `${citation.chunk_id} (score ${citation.score.toFixed(3)})`;
      const passage = el("blockquote", "citation-passage");
      passage.textContent = citation.text; // full text ships in the payload
      passage.hidden = true;
      label.addEventListener("click", () => {
        passage.hidden = !passage.hidden;
      });
      row.appendChild(label);
      row.appendChild(passage);
      panel.appendChild(row);
    }
    return panel;
  }

  private renderDialog(): HTMLElement {
    const candidate = this.state.candidate!;
    const dialog = el("div", "confirm-dialog");
    const title = el("h2", "confirm-title");
    title.textContent = candidate.title;
    const excerpt = el("p", "confirm-excerpt");
    excerpt.textContent = candidate.abstract_excerpt;
    dialog.appendChild(title);
    dialog.appendChild(excerpt);

    if (candidate.alternatives.length > 0) {
      const details = el("details", "alternatives");
      const summary = el("summary", "");
      summary.textContent = "Other matches";
      details.appendChild(summary);
      const list = el("ul", "alternatives-list");
      for (const alt of candidate.alternatives) {
        const item = el("li", "alternative");
        const pick = el("button", "alternative-pick") as HTMLButtonElement;
        pick.textContent = alt.title;
        // Selecting an alternative goes through reset + requery so the
        // server state machine still only ever locks its own proposal.
        pick.addEventListener("click", () => void this.pickAlternative(alt.title));
        item.appendChild(pick);
        list.appendChild(item);
      }
      details.appendChild(list);
      dialog.appendChild(details);
    }

    const accept = el("button", "accept") as HTMLButtonElement;
    accept.textContent = "Yes, this analysis";
    accept.addEventListener("click", () => void this.resolveConfirmation(true));
    const reject = el("button", "reject") as HTMLButtonElement;
    reject.textContent = "No, let me rephrase";
    reject.addEventListener("click", () => void this.resolveConfirmation(false));
    dialog.appendChild(accept);
    dialog.appendChild(reject);
    return dialog;
  }

  private renderComposer(): HTMLElement {
    const composer = el("form", "composer") as HTMLFormElement;
    const input = el("input", "query-input") as HTMLInputElement;
    input.type = "text";
    input.placeholder =
      this.state.phase === "awaiting_confirmation"
        ? "Confirm the proposed analysis first"
        : "Ask about an analysis...";
    input.disabled = !canSubmit(this.state);
    const send = el("button", "send") as HTMLButtonElement;
    send.type = "submit";
    send.textContent = this.state.busy ? "Working..." : "Send";
    send.disabled = !canSubmit(this.state);
    const resetButton = el("button", "reset") as HTMLButtonElement;
    resetButton.type = "button";
    resetButton.textContent = "New conversation";
    resetButton.addEventListener("click", () => void this.resetSession());
    composer.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = input.value;
      input.value = "";
      void this.submitQuery(text);
    });
    composer.appendChild(input);
    composer.appendChild(send);
    composer.appendChild(resetButton);
    return composer;
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  return node;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.errorCode}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
