// View-model fold: snapshot + deltas, duplicate drops, overhead readout.

import { describe, expect, it } from "vitest";

import type { Envelope, ItemRecord } from "../src/api.js";
import { ConsoleViewModel } from "../src/model.js";

function env(seq: number, kind: Envelope["kind"], position: number | null = null,
             item: ItemRecord | null = null, emittedAt = seq * 1000): Envelope {
  return { fridge_id: "f", seq, kind, position, item, emitted_at: emittedAt };
}

function coke(position: number | null): ItemRecord {
  return {
    item_id: "i1", name: "coke", state: position === null ? "pending" : "complete",
    position, added_at: 0, removed_at: null, activity_id: 1,
  };
}

describe("ConsoleViewModel", () => {
  it("starts from a snapshot and applies deltas in order", () => {
    const vm = new ConsoleViewModel();
    vm.resetFromState({
      positions: { "0": coke(0) }, items: [], door_open: false,
      activity_count: 1, last_activity_duration_ms: 4200, head_seq: 5,
    });
    expect(vm.cursor).toBe(5);
    expect(vm.lastActivityS).toBeCloseTo(4.2);
    vm.applyEnvelope(env(6, "remove", 0, { ...coke(0), state: "removed" }));
    expect(vm.positions.get(0)).toBeNull();
    expect(vm.feedSeqs()).toEqual([6]);
  });

  it("drops duplicates below the cursor (at-least-once delivery)", () => {
    const vm = new ConsoleViewModel();
    vm.applyEnvelope(env(1, "door_open"));
    vm.applyEnvelope(env(1, "door_open"));
    expect(vm.feedSeqs()).toEqual([1]);
    expect(vm.feedIsGapFree()).toBe(true);
  });

  it("computes the last activity duration from door events", () => {
    const vm = new ConsoleViewModel();
    vm.applyEnvelope(env(1, "door_open", null, null, 10_000));
    vm.applyEnvelope(env(2, "door_close", null, null, 15_600));
    expect(vm.lastActivityS).toBeCloseTo(5.6);
    expect(vm.doorOpen).toBe(false);
  });

  it("moves a pending item onto the grid when it completes", () => {
    const vm = new ConsoleViewModel();
    vm.pendingItems = [coke(null)];
    vm.applyEnvelope(env(1, "item_complete", 2, coke(2)));
    expect(vm.pendingItems).toEqual([]);
    expect(vm.positions.get(2)?.name).toBe("coke");
  });

  it("tracks free and occupied positions for the controls", () => {
    const vm = new ConsoleViewModel();
    vm.positionCount = 4;
    vm.applyEnvelope(env(1, "add", 1, coke(1)));
    expect(vm.occupiedPositions()).toEqual([1]);
    expect(vm.freePositions()).toEqual([0, 2, 3]);
  });
});
