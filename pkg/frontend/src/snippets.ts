export interface SnippetWatcherOptions {
  /** How much of the card must be inside the viewport. Default: half. */
  minVisibleRatio?: number;
  /** How long it must stay there before it counts. Default: one second. */
  dwellMs?: number;
  observerFactory?: (
    callback: IntersectionObserverCallback,
    init: IntersectionObserverInit,
  ) => IntersectionObserver;
}

/**
 * Fires `onViewed(docId)` the first time a result card has been at least
 * `minVisibleRatio` visible for `dwellMs` straight. Dipping below the ratio
 * resets the dwell. Each card fires at most once per watcher; one watcher
 * is created per result page, which is what bounds the dedup.
 */
export class SnippetWatcher {
  private readonly minRatio: number;
  private readonly dwellMs: number;
  private readonly observer: IntersectionObserver | null;
  private readonly byElement = new Map<Element, string>();
  private readonly seen = new Set<string>();
  private readonly timers = new Map<string, ReturnType<typeof setTimeout>>();

  constructor(
    private readonly onViewed: (docId: string) => void,
    opts: SnippetWatcherOptions = {},
  ) {
    this.minRatio = opts.minVisibleRatio ?? 0.5;
    this.dwellMs = opts.dwellMs ?? 1000;
    const make =
      opts.observerFactory ??
      (typeof IntersectionObserver === "undefined"
        ? null
        : (cb: IntersectionObserverCallback, init: IntersectionObserverInit) =>
            new IntersectionObserver(cb, init));
    this.observer = make
      ? make((entries) => this.handle(entries), { threshold: [this.minRatio] })
      : null;
  }

  watch(el: Element, docId: string): void {
    if (!this.observer) return;
    this.byElement.set(el, docId);
    this.observer.observe(el);
  }

  disconnect(): void {
    for (const timer of this.timers.values()) clearTimeout(timer);
    this.timers.clear();
    this.byElement.clear();
    this.observer?.disconnect();
  }

  private handle(entries: IntersectionObserverEntry[]): void {
    for (const entry of entries) {
      const docId = this.byElement.get(entry.target);
      if (!docId || this.seen.has(docId)) continue;
      // observers report the ratio at the crossing, which can land a hair
      // under the threshold; allow for that
      const visible = entry.isIntersecting && entry.intersectionRatio >= this.minRatio - 1e-3;
      if (visible) {
        if (!this.timers.has(docId)) {
          this.timers.set(
            docId,
            setTimeout(() => {
              this.timers.delete(docId);
              this.seen.add(docId);
              this.observer?.unobserve(entry.target);
              this.onViewed(docId);
            }, this.dwellMs),
          );
        }
      } else {
        const timer = this.timers.get(docId);
        if (timer !== undefined) {
          clearTimeout(timer);
          this.timers.delete(docId);
        }
      }
    }
  }
}
