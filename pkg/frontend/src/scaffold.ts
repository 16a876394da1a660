import type { ScaffoldView } from "./types.js";

export function clampFill(fraction: number): number {
  if (Number.isNaN(fraction)) return 0;
  return Math.min(1, Math.max(0, fraction));
}

/** Width style for a progress bar; resolution 0.01% of the track. */
export function fillWidthPercent(fraction: number): string {
  return `${(clampFill(fraction) * 100).toFixed(2)}%`;
}

/**
 * The outline panel beside the results. Top-level headings sit flush left,
 * their children indent one step. Every row carries a track; a gradient
 * fill element exists only once there is progress to paint, so a static
 * outline (all fractions zero) renders solid with empty tracks and no
 * gradient anywhere in the DOM.
 */
export class ScaffoldPanel {
  constructor(private readonly root: HTMLElement) {
    root.classList.add("scaffold-panel");
  }

  render(view: ScaffoldView): void {
    this.root.innerHTML = "";
    this.root.hidden = !view.visible;
    if (!view.visible) return;
    for (const entry of view.entries) {
      const row = document.createElement("div");
      row.className = `scaffold-row level-${entry.level}`;
      row.dataset.subId = entry.sub_id;

      const label = document.createElement("span");
      label.className = "scaffold-title";
      label.textContent = entry.title;

      const track = document.createElement("div");
      track.className = "scaffold-track";
      const fill = clampFill(entry.fill_fraction);
      if (fill > 0) {
        const bar = document.createElement("div");
        bar.className = "scaffold-fill";
        bar.style.width = fillWidthPercent(entry.fill_fraction);
        track.appendChild(bar);
      }

      row.append(label, track);
      this.root.appendChild(row);
    }
  }
}
