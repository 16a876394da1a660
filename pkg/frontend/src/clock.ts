/**
 * Search-phase clock.
 *
 * The service logs events in milliseconds since the search phase began and
 * tolerates only a couple of seconds of skew on client-stamped timestamps,
 * so the client mirrors that axis: anchor wall time once when the search
 * screen appears, then stamp events with the elapsed difference. The anchor
 * is persisted so a page reload keeps stamping on the same axis instead of
 * restarting from zero (which the service would refuse as behind the log).
 */
export class SessionClock {
  private anchorMs: number | null = null;

  constructor(
    private readonly storage: Storage | null,
    private readonly key: string,
  ) {
    const raw = storage ? storage.getItem(key) : null;
    if (raw) {
      const parsed = Number(raw);
      if (Number.isFinite(parsed)) this.anchorMs = parsed;
    }
  }

  start(): void {
    if (this.anchorMs !== null) return; // reload: keep the original anchor
    this.anchorMs = Date.now();
    this.storage?.setItem(this.key, String(this.anchorMs));
  }

  get started(): boolean {
    return this.anchorMs !== null;
  }

  nowMs(): number {
    if (this.anchorMs === null) throw new Error("session clock was never started");
    return Math.max(0, Date.now() - this.anchorMs);
  }
}
