import { beforeEach, describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { FlowState, SessionFlow, SessionStorageLike } from "../src/flow.js";
import { MockService } from "./mockservice.js";

class MemoryStorage implements SessionStorageLike {
  private data = new Map<string, string>();
  getItem(key: string) {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string) {
    this.data.set(key, value);
  }
  removeItem(key: string) {
    this.data.delete(key);
  }
}

let service: MockService;
let client: ApiClient;
let states: FlowState[];
let storage: MemoryStorage;
let flow: SessionFlow;

beforeEach(() => {
  service = new MockService();
  client = new ApiClient("", service.fetch);
  states = [];
  storage = new MemoryStorage();
  flow = new SessionFlow(client, (s) => states.push(s), storage);
});

function postCount(): number {
  return service.requests.filter(
    (r) => r.method === "POST" && r.url.includes("/response"),
  ).length;
}

describe("session flow", () => {
  test("click-through completes and shows the result", async () => {
    await flow.start(4);
    expect(flow.state.phase).toBe("trial");
    while (flow.state.phase === "trial") {
      await flow.choose("real");
    }
    expect(flow.state.phase).toBe("result");
    const result = (flow.state as Extract<FlowState, { phase: "result" }>).result;
    expect(result.n).toBe(4);
    expect(postCount()).toBe(4);
  });

  test("exactly one response per trial even with double clicks", async () => {
    await flow.start(2);
    // Two clicks without awaiting: the second lands in the submitting phase
    // and must be dropped by the debounce.
    const first = flow.choose("real");
    const second = flow.choose("synthetic");
    await Promise.all([first, second]);
    expect(postCount()).toBe(1);
    await flow.choose("real");
    expect(flow.state.phase).toBe("result");
    expect(postCount()).toBe(2);
  });

  test("refresh mid-session resumes at the first unanswered trial", async () => {
    await flow.start(4);
    await flow.choose("real");
    await flow.choose("synthetic");
    const sessionId = storage.getItem("gtlab.session");
    expect(sessionId).not.toBeNull();

    // New flow instance = new page load.
    const revived = new SessionFlow(client, () => {}, storage);
    await revived.resume(revived.storedSessionId()!);
    expect(revived.state.phase).toBe("trial");
    const trial = (revived.state as Extract<FlowState, { phase: "trial" }>).trial;
    expect(trial.trial_index).toBe(2);
  });

  test("duplicate 409 resyncs instead of erroring", async () => {
    await flow.start(2);
    const sid = storage.getItem("gtlab.session")!;
    // Another tab answered trial 0 behind our back.
    await client.postResponse(sid, 0, "real");
    await flow.choose("synthetic");
    expect(flow.state.phase).toBe("trial");
    expect(
      (flow.state as Extract<FlowState, { phase: "trial" }>).trial.trial_index,
    ).toBe(1);
  });

  test("network failure shows an error and retry recovers position", async () => {
    await flow.start(3);
    await flow.choose("real");
    service.failNetwork = true;
    await flow.choose("real");
    expect(flow.state.phase).toBe("error");
    const posts = postCount();

    service.failNetwork = false;
    await flow.retry();
    expect(flow.state.phase).toBe("trial");
    // Retry resyncs; it never replays the click, so no phantom response.
    expect(postCount()).toBe(posts);
  });

  test("service down at start produces an error state, no session stored", async () => {
    service.failNetwork = true;
    await flow.start(2);
    expect(flow.state.phase).toBe("error");
    expect(storage.getItem("gtlab.session")).toBeNull();
  });

  test("result clears the stored session id", async () => {
    await flow.start(2);
    await flow.choose("real");
    await flow.choose("real");
    expect(flow.state.phase).toBe("result");
    expect(storage.getItem("gtlab.session")).toBeNull();
  });

  test("choose outside a trial is ignored", async () => {
    await flow.choose("real");
    expect(flow.state.phase).toBe("idle");
    expect(postCount()).toBe(0);
  });

  test("result is only requested after the last answer", async () => {
    await flow.start(2);
    await flow.choose("real");
    const early = service.requests.filter((r) => r.url.endsWith("/result"));
    expect(early).toHaveLength(0);
    await flow.choose("real");
    const after = service.requests.filter((r) => r.url.endsWith("/result"));
    expect(after).toHaveLength(1);
  });
});
