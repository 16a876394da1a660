import { ApiError } from "./api.js";
import type { OutgoingEvent } from "./api.js";
import type { BatchAck } from "./types.js";

export type BatchSender = (events: OutgoingEvent[]) => Promise<BatchAck>;

export interface BufferOptions {
  /** Latency bound: a batch leaves at most this long after its first event. */
  flushAfterMs?: number;
  baseRetryMs?: number;
  maxRetryMs?: number;
  /** Called when the service refuses an event for good; never fired silently. */
  onDrop?: (event: OutgoingEvent, reason: string) => void;
}

interface PersistedState {
  last_seq: number;
  pending: OutgoingEvent[];
}

/**
 * Ordered, durable outbox for interaction events.
 *
 * Every recorded event gets the next client_seq and is written to storage
 * before anything else happens, so a crashed or reloaded page resumes with
 * the same numbering and nothing in flight is lost. The service keeps a
 * per-session watermark and reports resent items as duplicates, which makes
 * redelivery after a reload or a dropped response harmless.
 *
 * Failure handling is split by kind: network trouble and 5xx answers back
 * off and retry forever; a 4xx means this batch can never be applied as-is,
 * so the buffer narrows to one event at a time until the refused item is
 * found, reports it through `onDrop`, and moves on.
 */
export class EventBuffer {
  private readonly flushAfterMs: number;
  private readonly baseRetryMs: number;
  private readonly maxRetryMs: number;
  private readonly onDrop: (event: OutgoingEvent, reason: string) => void;

  private pending: OutgoingEvent[] = [];
  private lastSeq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: Promise<void> | null = null;
  private retryAttempts = 0;

  constructor(
    private readonly sender: BatchSender,
    private readonly storage: Storage | null = null,
    private readonly storageKey: string = "scaffold-outbox",
    opts: BufferOptions = {},
  ) {
    this.flushAfterMs = opts.flushAfterMs ?? 2000;
    this.baseRetryMs = opts.baseRetryMs ?? 500;
    this.maxRetryMs = opts.maxRetryMs ?? 30_000;
    this.onDrop =
      opts.onDrop ??
      ((event, reason) => console.error(`event ${event.client_seq} (${event.kind}) refused: ${reason}`));
    this.restore();
  }

  get pendingCount(): number {
    return this.pending.length;
  }

  get lastAssignedSeq(): number {
    return this.lastSeq;
  }

  /** Queue one event; it will be on the wire within `flushAfterMs`. */
  record(kind: string, payload: Record<string, unknown>, clientTsMs: number): OutgoingEvent {
    const event: OutgoingEvent = {
      client_seq: ++this.lastSeq,
      kind,
      payload,
      client_ts_ms: Math.round(clientTsMs),
    };
    this.pending.push(event);
    this.persist();
    if (this.timer === null && this.inFlight === null) {
      this.armTimer(this.flushAfterMs);
    }
    return event;
  }

  /** Push everything queued right now; safe to call at any time. */
  flush(): Promise<void> {
    if (this.inFlight) return this.inFlight;
    this.clearTimer();
    const run = this.drain().finally(() => {
      this.inFlight = null;
    });
    this.inFlight = run;
    return run;
  }

  dispose(): void {
    this.clearTimer();
  }

  private async drain(): Promise<void> {
    let singly = false;
    while (this.pending.length > 0) {
      const batch = singly ? [this.pending[0]!] : this.pending.slice();
      let ack: BatchAck;
      try {
        ack = await this.sender(batch);
      } catch (err) {
        if (err instanceof ApiError && !err.retryable) {
          if (batch.length === 1) {
            this.dropHead(err.detail);
            continue; // the rest may be fine
          }
          singly = true; // find the refused item
          continue;
        }
        this.scheduleRetry();
        return;
      }
      if (ack.last_client_seq < batch[0]!.client_seq) {
        // an ok answer that applied nothing should not spin the loop
        this.scheduleRetry();
        return;
      }
      this.prune(ack.last_client_seq);
      this.retryAttempts = 0;
    }
  }

  private dropHead(reason: string): void {
    const dropped = this.pending.shift();
    this.persist();
    if (dropped) this.onDrop(dropped, reason);
  }

  private prune(watermark: number): void {
    this.pending = this.pending.filter((e) => e.client_seq > watermark);
    this.persist();
  }

  private scheduleRetry(): void {
    const delay = Math.min(this.maxRetryMs, this.baseRetryMs * 2 ** this.retryAttempts);
    this.retryAttempts += 1;
    this.armTimer(delay);
  }

  private armTimer(delay: number): void {
    this.clearTimer();
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, delay);
  }

  private clearTimer(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private persist(): void {
    if (!this.storage) return;
    const state: PersistedState = { last_seq: this.lastSeq, pending: this.pending };
    try {
      this.storage.setItem(this.storageKey, JSON.stringify(state));
    } catch {
      // storage full or unavailable; the in-memory queue still drains
    }
  }

  private restore(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(this.storageKey);
    if (!raw) return;
    try {
      const state = JSON.parse(raw) as PersistedState;
      if (Array.isArray(state.pending) && typeof state.last_seq === "number") {
        this.pending = state.pending;
        this.lastSeq = state.last_seq;
        if (this.pending.length > 0) this.armTimer(this.flushAfterMs);
      }
    } catch {
      // corrupted entry: start clean rather than wedge the session
    }
  }
}
