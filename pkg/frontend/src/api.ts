// REST client for the fridge service. Everything the console knows arrives
// through this interface, so tests can swap in a scripted service.

export interface ItemRecord {
  item_id: string;
  name: string | null;
  state: "pending" | "placeholder" | "complete" | "removed";
  position: number | null;
  added_at: number | null;
  removed_at: number | null;
  activity_id: number;
}

export interface Envelope {
  fridge_id: string;
  seq: number;
  kind: "add" | "remove" | "door_open" | "door_close" | "item_complete" | "alert";
  position: number | null;
  item: ItemRecord | null;
  emitted_at: number;
}

export interface StateResponse {
  positions: Record<string, ItemRecord | null>;
  items: ItemRecord[];
  door_open: boolean;
  activity_count: number;
  last_activity_duration_ms: number | null;
  head_seq: number;
}

export interface GuidanceEntry {
  position: number;
  name: string;
  reason: string;
}

export interface SimCommand {
  command: "open" | "close" | "place" | "remove";
  item?: string;
  position?: number;
}

export interface SimInfo {
  items: string[];
  door_open: boolean;
  positions: number;
}

export interface FridgeService {
  getState(fridgeId: string): Promise<StateResponse>;
  poll(fridgeId: string, cursor: number, timeoutMs: number): Promise<Envelope[]>;
  getLeds(fridgeId: string): Promise<Record<string, string>>;
  getAlerts(fridgeId: string): Promise<GuidanceEntry[]>;
  getRecommendations(fridgeId: string): Promise<GuidanceEntry[]>;
  command(fridgeId: string, cmd: SimCommand): Promise<unknown>;
  simInfo(fridgeId: string): Promise<SimInfo>;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, body.error ?? "error", body.message ?? resp.statusText);
  }
  return body as T;
}

export class HttpFridgeService implements FridgeService {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  getState(fridgeId: string): Promise<StateResponse> {
    return fetch(this.url(`/fridges/${fridgeId}/state`)).then((r) => asJson<StateResponse>(r));
  }

  poll(fridgeId: string, cursor: number, timeoutMs: number): Promise<Envelope[]> {
    const path = `/fridges/${fridgeId}/poll?cursor=${cursor}&timeout_ms=${timeoutMs}`;
    return fetch(this.url(path)).then((r) => asJson<Envelope[]>(r));
  }

  getLeds(fridgeId: string): Promise<Record<string, string>> {
    return fetch(this.url(`/fridges/${fridgeId}/leds`)).then((r) =>
      asJson<Record<string, string>>(r),
    );
  }

  getAlerts(fridgeId: string): Promise<GuidanceEntry[]> {
    return fetch(this.url(`/fridges/${fridgeId}/alerts`)).then((r) =>
      asJson<GuidanceEntry[]>(r),
    );
  }

  getRecommendations(fridgeId: string): Promise<GuidanceEntry[]> {
    return fetch(this.url(`/fridges/${fridgeId}/recommendations`)).then((r) =>
      asJson<GuidanceEntry[]>(r),
    );
  }

  command(fridgeId: string, cmd: SimCommand): Promise<unknown> {
    return fetch(this.url(`/fridges/${fridgeId}/sim/commands`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(cmd),
    }).then((r) => asJson(r));
  }

  simInfo(fridgeId: string): Promise<SimInfo> {
    return fetch(this.url(`/fridges/${fridgeId}/sim/items`)).then((r) => asJson<SimInfo>(r));
  }
}
