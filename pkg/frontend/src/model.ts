// Pure console state: a fold of the state snapshot plus poll deltas.
// Nothing here touches the network or the DOM, so the whole session flow is
// testable with a scripted service.

import type { Envelope, GuidanceEntry, ItemRecord, StateResponse } from "./api.js";

export interface Slot {
  position: number;
  item: ItemRecord | null;
  led: string;
}

export class ConsoleViewModel {
  fridgeId = "";
  positionCount = 4;
  doorOpen = false;
  cursor = 0; // seq of the newest applied envelope
  positions = new Map<number, ItemRecord | null>();
  pendingItems: ItemRecord[] = [];
  feed: Envelope[] = [];
  feedLimit = 200;
  leds: Record<number, string> = {};
  alerts: GuidanceEntry[] = [];
  recommendations: GuidanceEntry[] = [];
  lastActivityS: number | null = null;
  errorBanner: string | null = null;
  connected = false;
  gapDetected = false;
  private openedAt: number | null = null;

  resetFromState(state: StateResponse): void {
    this.positions.clear();
    for (const [pos, item] of Object.entries(state.positions)) {
      this.positions.set(Number(pos), item);
    }
    this.pendingItems = state.items.filter((it) => it.state === "pending");
    this.doorOpen = state.door_open;
    this.cursor = state.head_seq;
    this.lastActivityS =
      state.last_activity_duration_ms === null ? null : state.last_activity_duration_ms / 1000;
    this.connected = true;
    this.errorBanner = null;
    this.gapDetected = false;
  }

  // at-least-once delivery: duplicates are dropped by cursor; a jump in seq
  // marks the feed as broken so the session can resynchronize
  applyEnvelope(env: Envelope): void {
    if (env.seq <= this.cursor) {
      return;
    }
    if (env.seq > this.cursor + 1) {
      this.gapDetected = true;
    }
    this.cursor = env.seq;
    this.feed.push(env);
    if (this.feed.length > this.feedLimit) {
      this.feed.splice(0, this.feed.length - this.feedLimit);
    }
    switch (env.kind) {
      case "door_open":
        this.doorOpen = true;
        this.openedAt = env.emitted_at;
        break;
      case "door_close":
        this.doorOpen = false;
        if (this.openedAt !== null) {
          this.lastActivityS = (env.emitted_at - this.openedAt) / 1000;
        }
        this.openedAt = null;
        break;
      case "add":
        if (env.position !== null) {
          this.positions.set(env.position, env.item);
        }
        if (env.item) {
          this.pendingItems = this.pendingItems.filter((p) => p.item_id !== env.item!.item_id);
        }
        break;
      case "remove":
        if (env.position !== null) {
          this.positions.set(env.position, null);
        }
        break;
      case "item_complete":
        if (env.item) {
          this.pendingItems = this.pendingItems.filter((p) => p.item_id !== env.item!.item_id);
          if (env.item.position !== null) {
            this.positions.set(env.item.position, env.item);
          } else {
            this.pendingItems.push(env.item);
          }
        }
        break;
      case "alert":
        break;
    }
  }

  slots(): Slot[] {
    const out: Slot[] = [];
    for (let pos = 0; pos < this.positionCount; pos += 1) {
      out.push({
        position: pos,
        item: this.positions.get(pos) ?? null,
        led: this.leds[pos] ?? "off",
      });
    }
    return out;
  }

  feedSeqs(): number[] {
    return this.feed.map((e) => e.seq);
  }

  /** True when every feed entry follows its predecessor without a hole. */
  feedIsGapFree(): boolean {
    for (let i = 1; i < this.feed.length; i += 1) {
      if (this.feed[i].seq !== this.feed[i - 1].seq + 1) {
        return false;
      }
    }
    return !this.gapDetected;
  }

  occupiedPositions(): number[] {
    return this.slots()
      .filter((s) => s.item !== null)
      .map((s) => s.position);
  }

  freePositions(): number[] {
    return this.slots()
      .filter((s) => s.item === null)
      .map((s) => s.position);
  }
}
