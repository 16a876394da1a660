/**
 * Countdown display and finish gating. The service owns the decision: the
 * finish button enables only after a server reply carried may_finish=true.
 * The local tick merely renders the last known remainder counting down and
 * signals `onExpired` once so the app can ask the server again.
 */
export class TaskTimer {
  private remaining: number | null = null;
  private mayFinish = false;
  private handle: ReturnType<typeof setInterval> | null = null;
  private expiredSignalled = false;

  constructor(
    private readonly display: HTMLElement,
    private readonly finishButton: HTMLButtonElement,
    private readonly onExpired: () => void,
  ) {
    display.classList.add("task-timer");
    finishButton.disabled = true;
  }

  /** Fold in the timer fields of any server reply. */
  update(remainingSeconds: number | null | undefined, mayFinish: boolean | undefined): void {
    if (typeof remainingSeconds === "number") {
      this.remaining = Math.max(0, remainingSeconds);
      this.expiredSignalled = this.remaining <= 0 ? this.expiredSignalled : false;
    }
    if (typeof mayFinish === "boolean") this.mayFinish = mayFinish;
    this.finishButton.disabled = !this.mayFinish;
    this.renderRemaining();
    if (this.handle === null) {
      this.handle = setInterval(() => this.tick(), 1000);
    }
  }

  get canFinish(): boolean {
    return this.mayFinish;
  }

  stop(): void {
    if (this.handle !== null) {
      clearInterval(this.handle);
      this.handle = null;
    }
  }

  private tick(): void {
    if (this.remaining === null) return;
    this.remaining = Math.max(0, this.remaining - 1);
    this.renderRemaining();
    if (this.remaining <= 0 && !this.mayFinish && !this.expiredSignalled) {
      this.expiredSignalled = true;
      this.onExpired();
    }
  }

  private renderRemaining(): void {
    if (this.remaining === null) {
      this.display.textContent = "--:--";
      return;
    }
    const total = Math.round(this.remaining);
    const minutes = Math.floor(total / 60);
    const seconds = total % 60;
    this.display.textContent = `${String(minutes).padStart(2, "0")}:${String(seconds).padStart(2, "0")}`;
  }
}
