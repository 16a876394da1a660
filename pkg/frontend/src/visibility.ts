export type HiddenCallback = () => void;

/**
 * Invokes `cb` once each time the page goes hidden (the participant switched
 * tabs or minimised the window). Listens to both `visibilitychange` and
 * `pagehide` — browsers disagree about which fires when — and collapses the
 * pair into a single callback per transition. Coming back to the tab does
 * not fire; a switch away and back counts once.
 */
export function onPageHidden(cb: HiddenCallback, doc: Document = document): () => void {
  let hidden = false;
  const handler = (event: Event) => {
    const nowHidden = event.type === "pagehide" || doc.visibilityState === "hidden";
    if (nowHidden && !hidden) {
      hidden = true;
      cb();
    } else if (!nowHidden) {
      hidden = false;
    }
  };
  doc.addEventListener("visibilitychange", handler, { capture: true });
  const win = doc.defaultView;
  win?.addEventListener("pagehide", handler, { capture: true });
  return () => {
    doc.removeEventListener("visibilitychange", handler, { capture: true });
    win?.removeEventListener("pagehide", handler, { capture: true });
  };
}
