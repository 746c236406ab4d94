/** Service client: REST calls plus the resumable event subscription.
 *
 * Connection loss surfaces through onStatus and reconnects from the last
 * seen seq; a 410 (cursor fell out of the buffer) triggers a full /graph
 * refetch before resubscribing from the current head.
 */

import type {
  Envelope,
  GraphExport,
  IngestReport,
  InstructionResult,
  Prompt,
  ServerEvent,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export type ConnectionStatus = "connecting" | "live" | "lost" | "resyncing";

export class ApiClient {
  constructor(private base: string = "") {}

  private async call<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    let envelope: Envelope<T>;
    try {
      envelope = (await response.json()) as Envelope<T>;
    } catch {
      throw new ApiError(response.status, "bad_envelope", "non-JSON response");
    }
    if (!envelope.ok || envelope.result === undefined) {
      const error = envelope.error ?? { code: "unknown", message: "call failed", details: {} };
      throw new ApiError(response.status, error.code, error.message);
    }
    return envelope.result;
  }

  graph(): Promise<GraphExport> {
    return this.call<GraphExport>("/graph");
  }

  instruct(text: string, strategy?: string): Promise<InstructionResult> {
    return this.call<InstructionResult>("/instruction", {
      method: "POST",
      body: JSON.stringify(strategy ? { text, strategy } : { text }),
    });
  }

  ingestScene(observations: unknown[]): Promise<IngestReport> {
    return this.call<IngestReport>("/scene", {
      method: "POST",
      body: JSON.stringify(observations),
    });
  }

  openPrompt(): Promise<{ prompt: Prompt | null }> {
    return this.call<{ prompt: Prompt | null }>("/prompt");
  }

  answer(promptId: number, choice: Record<string, unknown>): Promise<{ effects: Record<string, unknown>[] }> {
    return this.call<{ effects: Record<string, unknown>[] }>(`/prompt/${promptId}/answer`, {
      method: "POST",
      body: JSON.stringify({ choice }),
    });
  }
}

export interface SubscriptionHandlers {
  onEvent(event: ServerEvent): void;
  onResync(graph: GraphExport, atSeq: number): void;
  onStatus(status: ConnectionStatus): void;
}

/** Keeps an EventSource alive across drops; resumes from the last seen seq. */
export class EventSubscription {
  private source: EventSource | null = null;
  private cursor = 0;
  private closed = false;

  constructor(
    private api: ApiClient,
    private base: string,
    private handlers: SubscriptionHandlers,
  ) {}

  start(fromSeq = 0): void {
    this.cursor = fromSeq;
    this.open();
  }

  close(): void {
    this.closed = true;
    this.source?.close();
  }

  private open(): void {
    if (this.closed) return;
    this.handlers.onStatus(this.cursor === 0 ? "connecting" : "resyncing");
    const source = new EventSource(`${this.base}/events?from=${this.cursor}`);
    this.source = source;

    source.onopen = () => this.handlers.onStatus("live");
    source.onmessage = (message: MessageEvent<string>) => {
      const event = JSON.parse(message.data) as ServerEvent;
      this.cursor = event.seq + 1;
      this.handlers.onEvent(event);
    };
    source.onerror = async () => {
      source.close();
      if (this.closed) return;
      this.handlers.onStatus("lost");
      // the cursor may have fallen out of the buffer; probe and resync if so
      try {
        const probe = await fetch(`${this.base}/events?from=${this.cursor}&live=false&limit=1`);
        if (probe.status === 410) {
          this.handlers.onStatus("resyncing");
          const graph = await this.api.graph();
          // resubscribe from the head after adopting the fresh snapshot
          const head = await fetch(`${this.base}/health`);
          const events = ((await head.json()) as Envelope<{ events: number }>).result?.events ?? 0;
          this.cursor = events;
          this.handlers.onResync(graph, events - 1);
        }
        probe.body?.cancel();
      } catch {
        // server unreachable; retry below
      }
      setTimeout(() => this.open(), 1000);
    };
  }
}
