// Live session: the single long-poll loop, guidance refresh, and the
// sequential command queue. User actions never mutate the grid directly;
// every visible change comes back through the poll stream.

import type { FridgeService, SimCommand } from "./api.js";
import { ConsoleViewModel } from "./model.js";

export interface SessionOptions {
  pollTimeoutMs?: number;
  onChange?: () => void;
}

export class ConsoleSession {
  readonly vm: ConsoleViewModel;
  private running = false;
  private pollTimeoutMs: number;
  private onChange: () => void;
  private commandChain: Promise<unknown> = Promise.resolve();
  private wake: (() => void) | null = null;
  private loopDone: Promise<void> = Promise.resolve();

  constructor(
    private service: FridgeService,
    private fridgeId: string,
    options: SessionOptions = {},
  ) {
    this.vm = new ConsoleViewModel();
    this.vm.fridgeId = fridgeId;
    this.pollTimeoutMs = options.pollTimeoutMs ?? 25_000;
    this.onChange = options.onChange ?? (() => {});
  }

  async connect(): Promise<boolean> {
    try {
      const state = await this.service.getState(this.fridgeId);
      this.vm.resetFromState(state);
      try {
        const info = await this.service.simInfo(this.fridgeId);
        this.vm.positionCount = info.positions;
      } catch {
        // plain service fridge without a live simulator attached
      }
      await this.refreshGuidance();
    } catch (err) {
      this.vm.errorBanner = err instanceof Error ? err.message : String(err);
      this.vm.connected = false;
      this.onChange();
      return false;
    }
    this.running = true;
    this.loopDone = this.pollLoop();
    this.onChange();
    return true;
  }

  stop(): void {
    this.running = false;
  }

  /** Drop the current poll and start over from the last cursor. */
  async forceReconnect(): Promise<void> {
    this.running = false;
    this.wake?.();
    await this.loopDone;
    this.running = true;
    this.loopDone = this.pollLoop();
  }

  async whenIdle(): Promise<void> {
    await this.commandChain;
  }

  act(cmd: SimCommand): Promise<unknown> {
    // commands go out strictly one at a time
    this.commandChain = this.commandChain.then(() => this.service.command(this.fridgeId, cmd));
    return this.commandChain;
  }

  private async pollLoop(): Promise<void> {
    while (this.running) {
      let envelopes;
      try {
        envelopes = await this.service.poll(this.fridgeId, this.vm.cursor, this.pollTimeoutMs);
      } catch {
        if (!this.running) {
          break;
        }
        await new Promise<void>((resolve) => {
          this.wake = resolve;
          setTimeout(resolve, 500);
        });
        this.wake = null;
        continue;
      }
      if (!this.running) {
        break;
      }
      if (envelopes.length > 0) {
        let sawDoorEvent = false;
        for (const env of envelopes) {
          this.vm.applyEnvelope(env);
          sawDoorEvent ||= env.kind === "door_open" || env.kind === "door_close";
        }
        if (this.vm.gapDetected) {
          const state = await this.service.getState(this.fridgeId);
          this.vm.resetFromState(state);
        }
        if (sawDoorEvent) {
          await this.refreshGuidance();
        } else {
          await this.refreshLeds();
        }
        this.onChange();
      }
    }
  }

  private async refreshLeds(): Promise<void> {
    try {
      const leds = await this.service.getLeds(this.fridgeId);
      this.vm.leds = {};
      for (const [pos, color] of Object.entries(leds)) {
        this.vm.leds[Number(pos)] = color;
      }
    } catch {
      // LEDs are cosmetic; keep the session alive
    }
  }

  private async refreshGuidance(): Promise<void> {
    try {
      this.vm.alerts = await this.service.getAlerts(this.fridgeId);
      this.vm.recommendations = await this.service.getRecommendations(this.fridgeId);
    } catch {
      this.vm.alerts = [];
      this.vm.recommendations = [];
    }
    await this.refreshLeds();
  }
}
