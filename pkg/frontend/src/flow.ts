// Session flow state machine, DOM-free so it is directly testable and so a
// scripted client can drive exactly the code a browser runs.
//
// Position is never trusted locally: the service's progress counter decides
// which trial is current, so a refresh (or a response that landed just as
// the network dropped) resyncs to the first unanswered trial.  choose() is
// a no-op unless a trial is showing, which is the client half of the
// "exactly one response per trial per decision" contract; double clicks hit
// the submitting phase and fall out.

import { ApiClient, Choice, HttpError, ResultView, TrialView } from "./api.js";

export type FlowState =
  | { phase: "idle" }
  | { phase: "loading" }
  | { phase: "trial"; trial: TrialView; sessionId: string }
  | { phase: "submitting"; trial: TrialView; sessionId: string }
  | { phase: "result"; result: ResultView; sessionId: string }
  | { phase: "error"; message: string; sessionId: string | null };

export interface SessionStorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "gtlab.session";

export class SessionFlow {
  state: FlowState = { phase: "idle" };

  constructor(
    private client: ApiClient,
    private onChange: (state: FlowState) => void = () => {},
    private storage: SessionStorageLike | null = null,
  ) {}

  private setState(state: FlowState): void {
    this.state = state;
    this.onChange(state);
  }

  storedSessionId(): string | null {
    return this.storage ? this.storage.getItem(STORAGE_KEY) : null;
  }

  async start(n?: number): Promise<void> {
    this.setState({ phase: "loading" });
    try {
      const created = await this.client.createSession(n);
      this.storage?.setItem(STORAGE_KEY, created.session_id);
      await this.syncPosition(created.session_id);
    } catch (error) {
      this.fail(null, error);
    }
  }

  async resume(sessionId: string): Promise<void> {
    this.setState({ phase: "loading" });
    try {
      await this.syncPosition(sessionId);
    } catch (error) {
      this.fail(sessionId, error);
    }
  }

  async choose(choice: Choice): Promise<void> {
    if (this.state.phase !== "trial") {
      return; // debounce: ignore clicks while submitting or off-trial
    }
    const { trial, sessionId } = this.state;
    this.setState({ phase: "submitting", trial, sessionId });
    try {
      await this.client.postResponse(sessionId, trial.trial_index, choice);
      await this.syncPosition(sessionId);
    } catch (error) {
      if (error instanceof HttpError && error.status === 409) {
        // Already answered (double submit surviving the debounce window, or
        // a retry after a response that did land): resync, don't re-post.
        await this.syncPosition(sessionId).catch((e) => this.fail(sessionId, e));
        return;
      }
      this.fail(sessionId, error);
    }
  }

  async retry(): Promise<void> {
    if (this.state.phase !== "error") {
      return;
    }
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      this.setState({ phase: "idle" });
      return;
    }
    await this.resume(sessionId);
  }

  clearStored(): void {
    this.storage?.removeItem(STORAGE_KEY);
  }

  // The service's answered-count names the first unanswered trial for a
  // sequential client; the result is requested only once nothing is left.
  private async syncPosition(sessionId: string): Promise<void> {
    const probe = await this.client.getTrial(sessionId, 0);
    const answered = probe.progress.answered;
    if (answered >= probe.progress.total) {
      const result = await this.client.getResult(sessionId);
      this.clearStored();
      this.setState({ phase: "result", result, sessionId });
      return;
    }
    const trial =
      answered === 0 ? probe : await this.client.getTrial(sessionId, answered);
    this.setState({ phase: "trial", trial, sessionId });
  }

  private fail(sessionId: string | null, error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    this.setState({ phase: "error", message, sessionId });
  }
}
