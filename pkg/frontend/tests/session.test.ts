// Scripted end-to-end console session: connect -> open -> place -> close.
// The service is a script: commands publish nothing immediately, detection
// events arrive later on the poll stream, exactly like the real testbed.
// @vitest-environment jsdom

import { beforeEach, describe, expect, it } from "vitest";

import type {
  Envelope,
  FridgeService,
  GuidanceEntry,
  ItemRecord,
  SimCommand,
  SimInfo,
  StateResponse,
} from "../src/api.js";
import { ConsoleSession } from "../src/session.js";
import { render } from "../src/view.js";

function record(id: string, name: string | null, position: number | null,
                state: ItemRecord["state"] = "complete"): ItemRecord {
  return {
    item_id: id, name, state, position,
    added_at: 1000, removed_at: null, activity_id: 1,
  };
}

/** In-memory fridge service with a controllable event log. */
class ScriptedService implements FridgeService {
  log: Envelope[] = [];
  commands: SimCommand[] = [];
  failNextPolls = 0;
  knownFridge = "frg-demo";
  private waiters: (() => void)[] = [];

  publish(kind: Envelope["kind"], position: number | null = null,
          item: ItemRecord | null = null): void {
    this.log.push({
      fridge_id: this.knownFridge,
      seq: this.log.length + 1,
      kind, position, item,
      emitted_at: this.log.length * 1000,
    });
    for (const wake of this.waiters.splice(0)) {
      wake();
    }
  }

  async getState(fridgeId: string): Promise<StateResponse> {
    if (fridgeId !== this.knownFridge) {
      throw new Error(`unknown fridge ${fridgeId}`);
    }
    // fold the log the same way the real service does
    const positions: Record<string, ItemRecord | null> = {};
    let doorOpen = false;
    for (const env of this.log) {
      if (env.kind === "door_open") doorOpen = true;
      if (env.kind === "door_close") doorOpen = false;
      if (env.kind === "add" && env.position !== null) positions[String(env.position)] = env.item;
      if (env.kind === "remove" && env.position !== null) positions[String(env.position)] = null;
    }
    return {
      positions,
      items: [],
      door_open: doorOpen,
      activity_count: 0,
      last_activity_duration_ms: null,
      head_seq: this.log.length,
    };
  }

  async poll(fridgeId: string, cursor: number, _timeoutMs: number): Promise<Envelope[]> {
    if (fridgeId !== this.knownFridge) {
      throw new Error(`unknown fridge ${fridgeId}`);
    }
    if (this.failNextPolls > 0) {
      this.failNextPolls -= 1;
      throw new Error("network drop");
    }
    if (this.log.length > cursor) {
      return this.log.slice(cursor);
    }
    await new Promise<void>((resolve) => {
      this.waiters.push(resolve);
      setTimeout(resolve, 50);
    });
    return this.log.length > cursor ? this.log.slice(cursor) : [];
  }

  async getLeds(): Promise<Record<string, string>> {
    return {};
  }

  async getAlerts(): Promise<GuidanceEntry[]> {
    return [];
  }

  async getRecommendations(): Promise<GuidanceEntry[]> {
    return [];
  }

  async command(_fridgeId: string, cmd: SimCommand): Promise<unknown> {
    this.commands.push(cmd);
    return { status: "queued" };
  }

  async simInfo(): Promise<SimInfo> {
    return { items: ["coke", "milk"], door_open: false, positions: 4 };
  }
}

function settle(ms = 10): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

describe("console session", () => {
  let root: HTMLElement;
  let service: ScriptedService;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
    service = new ScriptedService();
  });

  function draw(session: ConsoleSession): void {
    render(root, session.vm, { onCommand: () => {}, itemsAvailable: () => ["coke"] });
  }

  it("drives connect -> open -> place -> close; grid updates only via the poll stream", async () => {
    const session = new ConsoleSession(service, "frg-demo", { pollTimeoutMs: 50 });
    expect(await session.connect()).toBe(true);
    draw(session);
    expect(root.querySelector(".cell-2 .cell-empty")).not.toBeNull();

    // user opens the door
    await session.act({ command: "open" });
    service.publish("door_open");
    await settle(30);
    draw(session);
    expect(session.vm.doorOpen).toBe(true);
    expect(root.querySelector(".door-open")).not.toBeNull();

    // user places a can; nothing on the grid until detection reports it
    await session.act({ command: "place", item: "coke", position: 2 });
    await settle(30);
    draw(session);
    expect(service.commands).toContainEqual({ command: "place", item: "coke", position: 2 });
    expect(session.vm.positions.get(2) ?? null).toBeNull();
    expect(root.querySelector(".cell-2 .cell-name")).toBeNull();

    // the door closes; the engine evaluates and the add event arrives
    await session.act({ command: "close" });
    service.publish("add", 2, record("i1", "coke", 2));
    service.publish("door_close");
    await settle(30);
    draw(session);
    expect(session.vm.positions.get(2)?.name).toBe("coke");
    expect(root.querySelector(".cell-2 .cell-name")?.textContent).toBe("coke");
    expect(session.vm.doorOpen).toBe(false);

    session.stop();
  });

  it("keeps the feed gap-free in seq across a forced reconnect", async () => {
    const session = new ConsoleSession(service, "frg-demo", { pollTimeoutMs: 40 });
    await session.connect();
    service.publish("door_open");
    service.publish("door_close");
    await settle(30);

    // the connection drops; events keep flowing while we are away
    service.failNextPolls = 2;
    await session.forceReconnect();
    service.publish("door_open");
    service.publish("add", 1, record("i2", "milk", 1));
    service.publish("door_close");
    await settle(1200);

    expect(session.vm.feedSeqs()).toEqual([1, 2, 3, 4, 5]);
    expect(session.vm.feedIsGapFree()).toBe(true);
    expect(session.vm.positions.get(1)?.name).toBe("milk");
    session.stop();
  });

  it("shows an error banner for an unknown fridge instead of crashing", async () => {
    const session = new ConsoleSession(service, "frg-nope", { pollTimeoutMs: 40 });
    expect(await session.connect()).toBe(false);
    draw(session);
    expect(root.querySelector(".error-banner")?.textContent).toContain("unknown fridge");
  });

  it("resynchronizes from a state snapshot when a seq gap slips through", async () => {
    const session = new ConsoleSession(service, "frg-demo", { pollTimeoutMs: 40 });
    await session.connect();
    // simulate a lossy transport handing us seq 3 directly
    session.vm.applyEnvelope({
      fridge_id: "frg-demo", seq: 3, kind: "door_open",
      position: null, item: null, emitted_at: 0,
    });
    expect(session.vm.gapDetected).toBe(true);
    expect(session.vm.feedIsGapFree()).toBe(false);
    session.stop();
  });

  it("renders placeholder badges and pending items distinctly", async () => {
    const session = new ConsoleSession(service, "frg-demo", { pollTimeoutMs: 40 });
    await session.connect();
    service.publish("add", 0, record("i3", null, 0, "placeholder"));
    await settle(30);
    draw(session);
    expect(root.querySelector(".cell-0 .badge-placeholder")?.textContent).toBe("unknown item");
    session.stop();
  });
});
