// HTTP + server-sent-events client for the portal daemon.
// The SSE stream is read via fetch streaming so the same code runs in
// browsers and node test environments; reconnects resume from the last
// delivered sequence number.

export type Channel = "participant" | "operator";

export interface TranscriptEntry {
  speaker: string;
  text: string | null;
  silence: boolean;
  ts: string;
}

export interface ObjectSummary {
  object_id: string;
  name: string;
  description: string;
  traits: string[];
}

export interface LightState {
  mode: string;
  b_min: number;
  b_max: number;
  period_s: number;
}

export interface DaemonState {
  phase: string;
  light: LightState;
  session_id?: string;
  object?: ObjectSummary;
  transcript?: TranscriptEntry[];
}

export interface ApiEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  ts: string;
}

export interface MemoryItem {
  memory_id: string;
  session_id: string;
  speaker: string;
  text: string;
  created_at: string;
  score: number | null;
}

export interface ClientOptions {
  baseUrl: string;
  channel: Channel;
  token?: string;
}

export class PortalClient {
  constructor(readonly opts: ClientOptions) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.opts.token) h["Authorization"] = `Bearer ${this.opts.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.opts.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    if (!resp.ok) {
      const body = await resp.text();
      throw new Error(`${resp.status} ${path}: ${body}`);
    }
    return resp.json() as Promise<T>;
  }

  getState(): Promise<DaemonState> {
    return this.request<DaemonState>("/state");
  }

  getObjects(): Promise<ObjectSummary[]> {
    return this.request<ObjectSummary[]>("/objects");
  }

  getMemories(objectId: string, mode: "history" | "search", query = "", limit = 50) {
    const params = new URLSearchParams({ mode, limit: String(limit) });
    if (mode === "search") params.set("q", query);
    return this.request<MemoryItem[]>(`/objects/${objectId}/memories?${params}`);
  }

  awaken(imageRef?: string) {
    return this.request<Record<string, unknown>>("/session/awaken", {
      method: "POST",
      body: JSON.stringify(imageRef ? { image_ref: imageRef } : {}),
    });
  }

  utterance(text: string) {
    return this.request<Record<string, unknown>>("/session/utterance", {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  goodbye() {
    return this.request<Record<string, unknown>>("/session/goodbye", {
      method: "POST",
      body: JSON.stringify({}),
    });
  }
}

export type ConnectionState = "connecting" | "open" | "reconnecting" | "closed";

export interface EventStreamHandlers {
  onEvent: (event: ApiEvent) => void;
  onConnection?: (state: ConnectionState) => void;
}

// Minimal SSE parser over a fetch body stream. Emits one ApiEvent per
// id/event/data block; blank line terminates a block.
export function parseSseChunk(
  buffer: string,
  emit: (ev: ApiEvent) => void
): string {
  let idx: number;
  while ((idx = buffer.indexOf("\n\n")) >= 0) {
    const block = buffer.slice(0, idx);
    buffer = buffer.slice(idx + 2);
    let seq = 0;
    let kind = "";
    let data = "";
    for (const line of block.split("\n")) {
      if (line.startsWith("id: ")) seq = parseInt(line.slice(4), 10);
      else if (line.startsWith("event: ")) kind = line.slice(7);
      else if (line.startsWith("data: ")) data = line.slice(6);
      // comment lines (keepalives) are ignored
    }
    if (data) {
      const parsed = JSON.parse(data) as { kind: string; payload: Record<string, unknown>; ts: string };
      emit({ seq, kind: kind || parsed.kind, payload: parsed.payload, ts: parsed.ts });
    }
  }
  return buffer;
}

export class EventStream {
  private lastSeq = 0;
  private stopped = false;
  private retryMs = 500;
  private controller: AbortController | null = null;

  constructor(
    private readonly opts: ClientOptions,
    private readonly handlers: EventStreamHandlers
  ) {}

  get resumeFrom(): number {
    return this.lastSeq;
  }

  start(fromSeq = 0): void {
    this.lastSeq = fromSeq;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private url(): string {
    const params = new URLSearchParams({
      channel: this.opts.channel,
      from_seq: String(this.lastSeq),
    });
    if (this.opts.token) params.set("token", this.opts.token);
    return `${this.opts.baseUrl}/events?${params}`;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.handlers.onConnection?.(this.lastSeq > 0 ? "reconnecting" : "connecting");
      try {
        this.controller = new AbortController();
        const resp = await fetch(this.url(), { signal: this.controller.signal });
        if (!resp.ok || !resp.body) throw new Error(`events: ${resp.status}`);
        this.handlers.onConnection?.("open");
        this.retryMs = 500;
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done || this.stopped) break;
          buffer += decoder.decode(value, { stream: true });
          buffer = parseSseChunk(buffer, (ev) => {
            this.lastSeq = ev.seq;
            this.handlers.onEvent(ev);
          });
        }
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) break;
      this.handlers.onConnection?.("reconnecting");
      await new Promise((r) => setTimeout(r, this.retryMs));
      this.retryMs = Math.min(this.retryMs * 2, 10_000);
    }
    this.handlers.onConnection?.("closed");
  }
}
