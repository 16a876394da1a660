import { ApiError, SessionApi } from "./api.js";
import { SessionClock } from "./clock.js";
import { EventBuffer } from "./events.js";
import { PosttestForm, PretestForm } from "./forms.js";
import { ScaffoldPanel } from "./scaffold.js";
import { SerpList } from "./serp.js";
import { SnippetWatcher } from "./snippets.js";
import type { SnippetWatcherOptions } from "./snippets.js";
import { TaskTimer } from "./timer.js";
import { onPageHidden } from "./visibility.js";
import type { PreTestItem, PretestReply, QueryReply, Serp, TopicInfo, VksAnswer } from "./types.js";

export interface AppOptions {
  apiBase?: string;
  /** Pin the study condition instead of letting the service draw one. */
  strategy?: string;
  storage?: Storage | null;
  flushAfterMs?: number;
  snippetDwellMs?: number;
  snippetMinRatio?: number;
  observerFactory?: SnippetWatcherOptions["observerFactory"];
  /** How often to re-ask the server once the local countdown hits zero. */
  pollMs?: number;
  minSummaryWords?: number;
  doc?: Document;
}

const SCROLL_EMIT_GAP_MS = 1000;

/**
 * One participant's pass through the study: enrol, knowledge check, timed
 * search with the outline panel, wrap-up. The server drives every phase
 * change; this class renders the current phase and reports interactions.
 */
export class ScaffoldApp {
  readonly api: SessionApi;
  private readonly storage: Storage | null;
  private readonly opts: Required<Pick<AppOptions, "flushAfterMs" | "pollMs" | "minSummaryWords">> &
    AppOptions;
  private readonly doc: Document;

  sessionId: string | null = null;
  private items: PreTestItem[] = [];
  private topic: TopicInfo | null = null;
  private clock: SessionClock | null = null;
  private buffer: EventBuffer | null = null;
  private scaffoldPanel: ScaffoldPanel | null = null;
  private serpList: SerpList | null = null;
  private timer: TaskTimer | null = null;
  private watcher: SnippetWatcher | null = null;
  private stopVisibility: (() => void) | null = null;

  private phase = "start";
  private currentSerp: Serp | null = null;
  private readonly bookmarked = new Set<string>();
  private readonly hiddenDocs = new Set<string>();
  private readonly docTitles = new Map<string, string>();
  private openDocId: string | null = null;
  private queryHistory: string[] = [];
  private lastScrollEmit = 0;
  private pollHandle: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.api = new SessionApi(options.apiBase ?? "");
    this.doc = options.doc ?? document;
    this.storage =
      options.storage !== undefined
        ? options.storage
        : typeof localStorage === "undefined"
          ? null
          : localStorage;
    this.opts = {
      ...options,
      flushAfterMs: options.flushAfterMs ?? 2000,
      pollMs: options.pollMs ?? 5000,
      minSummaryWords: options.minSummaryWords ?? 100,
    };
    root.classList.add("scaffold-app");
  }

  // ------------------------------------------------------------ screens

  renderStart(): void {
    const screen = this.swapScreen("start");
    const form = this.doc.createElement("form");
    form.className = "join-form";
    const input = this.doc.createElement("input");
    input.className = "participant-input";
    input.placeholder = "participant id";
    const button = this.doc.createElement("button");
    button.type = "submit";
    button.textContent = "Join";
    form.append(input, button);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const id = input.value.trim();
      if (id) void this.start(id);
    });
    screen.appendChild(form);
  }

  async start(participantId: string): Promise<void> {
    try {
      const reply = await this.api.createSession(participantId, this.opts.strategy);
      this.sessionId = reply.session_id;
      this.items = reply.items;
      this.phase = reply.phase;
      this.clearError();
      this.renderPretest();
    } catch (err) {
      this.showError(err);
    }
  }

  private renderPretest(): void {
    const screen = this.swapScreen("pretest");
    new PretestForm(screen, this.items, (answers) => void this.submitPretest(answers));
  }

  async submitPretest(answers: VksAnswer[]): Promise<void> {
    if (!this.sessionId) return;
    try {
      const reply = await this.api.submitPretest(this.sessionId, answers);
      this.clearError();
      if (reply.rejected) {
        this.phase = reply.phase;
        this.renderClosed(reply.reason ?? "screened out");
        return;
      }
      this.beginSearch(reply);
    } catch (err) {
      this.showError(err);
    }
  }

  private beginSearch(reply: PretestReply): void {
    this.phase = reply.phase;
    this.topic = reply.topic ?? null;
    const sid = this.sessionId ?? "anon";
    this.clock = new SessionClock(this.storage, `scaffold-clock:${sid}`);
    this.clock.start();
    this.buffer = new EventBuffer(
      (events) => this.api.sendEvents(sid, events),
      this.storage,
      `scaffold-outbox:${sid}`,
      { flushAfterMs: this.opts.flushAfterMs },
    );
    this.stopVisibility = onPageHidden(() => {
      this.emit("TabSwitch", {});
      void this.buffer?.flush();
    }, this.doc);

    const screen = this.swapScreen("search");

    const taskBar = this.doc.createElement("div");
    taskBar.className = "task-bar";
    const description = this.doc.createElement("p");
    description.className = "task-description";
    description.textContent =
      `Learn as much as you can about “${this.topic?.title ?? ""}”. ` +
      `Search, read, and save useful pages; afterwards you'll summarise what you learned.`;
    const timerEl = this.doc.createElement("span");
    const finishBtn = this.doc.createElement("button");
    finishBtn.type = "button";
    finishBtn.className = "finish-btn";
    finishBtn.textContent = "Finish task";
    finishBtn.addEventListener("click", () => void this.finish());
    taskBar.append(description, timerEl, finishBtn);
    screen.appendChild(taskBar);

    this.timer = new TaskTimer(timerEl, finishBtn, () => this.pollTimer());
    this.timer.update(reply.remaining_seconds, reply.may_finish);

    const queryForm = this.doc.createElement("form");
    queryForm.className = "query-form";
    const queryInput = this.doc.createElement("input");
    queryInput.className = "query-input";
    queryInput.placeholder = "search the collection";
    const queryBtn = this.doc.createElement("button");
    queryBtn.type = "submit";
    queryBtn.className = "query-submit";
    queryBtn.textContent = "Search";
    queryForm.append(queryInput, queryBtn);
    queryForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const q = queryInput.value.trim();
      if (q) void this.runQuery(q);
    });
    screen.appendChild(queryForm);

    const layout = this.doc.createElement("div");
    layout.className = "search-layout";
    const mainCol = this.doc.createElement("div");
    mainCol.className = "main-col";
    const serpRoot = this.doc.createElement("div");
    mainCol.appendChild(serpRoot);
    const sideCol = this.doc.createElement("div");
    sideCol.className = "side-col";
    const scaffoldRoot = this.doc.createElement("div");
    scaffoldRoot.addEventListener("scroll", () => this.emitScaffoldScroll());
    const historyEl = this.doc.createElement("ul");
    historyEl.className = "query-history";
    const savedEl = this.doc.createElement("ul");
    savedEl.className = "saved-docs";
    sideCol.append(scaffoldRoot, historyEl, savedEl);
    layout.append(mainCol, sideCol);
    screen.appendChild(layout);

    const viewer = this.doc.createElement("div");
    viewer.className = "doc-viewer";
    viewer.hidden = true;
    screen.appendChild(viewer);

    this.scaffoldPanel = new ScaffoldPanel(scaffoldRoot);
    if (reply.scaffold) this.scaffoldPanel.render(reply.scaffold);
    this.serpList = new SerpList(serpRoot, {
      onOpen: (docId) => void this.openDocument(docId),
      onBookmark: (docId) => this.bookmark(docId),
      onHide: (docId) => this.hideDocument(docId),
      onPage: (page) => void this.turnPage(page),
      watch: (el, docId) => this.watcher?.watch(el, docId),
    });
  }

  // ------------------------------------------------------------- search

  async runQuery(query: string): Promise<void> {
    if (!this.sessionId) return;
    try {
      // buffered interactions must hit the log before the query does
      await this.buffer?.flush();
      const reply = await this.api.query(this.sessionId, query);
      this.clearError();
      this.queryHistory.push(query);
      this.afterSerp(reply);
      this.renderHistory();
    } catch (err) {
      this.showError(err);
    }
  }

  async turnPage(page: number): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.buffer?.flush();
      const reply = await this.api.turnPage(this.sessionId, page);
      this.clearError();
      this.afterSerp(reply);
    } catch (err) {
      this.showError(err);
    }
  }

  private afterSerp(reply: QueryReply): void {
    this.currentSerp = reply.serp;
    for (const result of reply.serp.results) {
      this.docTitles.set(result.doc_id, result.title);
    }
    this.scaffoldPanel?.render(reply.scaffold);
    this.timer?.update(reply.remaining_seconds, reply.may_finish);
    // fresh watcher per result page: each document counts once per page shown
    this.watcher?.disconnect();
    this.watcher = new SnippetWatcher((docId) => this.emit("SnippetViewed", { doc_id: docId }), {
      dwellMs: this.opts.snippetDwellMs,
      minVisibleRatio: this.opts.snippetMinRatio,
      observerFactory: this.opts.observerFactory,
    });
    this.renderSerp();
  }

  private renderSerp(): void {
    if (this.currentSerp && this.serpList) {
      this.serpList.render(this.currentSerp, {
        bookmarked: this.bookmarked,
        hidden: this.hiddenDocs,
      });
    }
  }

  async openDocument(docId: string): Promise<void> {
    if (!this.sessionId || this.openDocId === docId) return;
    try {
      const reply = await this.api.document(this.sessionId, docId);
      this.clearError();
      if (this.openDocId) this.closeDocument();
      this.openDocId = docId;
      this.emit("DocumentOpened", { doc_id: docId });
      const viewer = this.root.querySelector<HTMLElement>(".doc-viewer");
      if (viewer) {
        viewer.innerHTML = "";
        viewer.hidden = false;
        const title = this.doc.createElement("h2");
        title.textContent = this.docTitles.get(docId) ?? docId;
        const close = this.doc.createElement("button");
        close.type = "button";
        close.className = "doc-close";
        close.textContent = "Close";
        close.addEventListener("click", () => this.closeDocument());
        const body = this.doc.createElement("pre");
        body.className = "doc-text";
        body.textContent = reply.text;
        viewer.append(title, close, body);
      }
    } catch (err) {
      this.showError(err);
    }
  }

  closeDocument(): void {
    if (!this.openDocId) return;
    this.emit("DocumentClosed", { doc_id: this.openDocId });
    this.openDocId = null;
    const viewer = this.root.querySelector<HTMLElement>(".doc-viewer");
    if (viewer) {
      viewer.hidden = true;
      viewer.innerHTML = "";
    }
  }

  bookmark(docId: string): void {
    if (this.bookmarked.has(docId)) return;
    this.bookmarked.add(docId);
    this.hiddenDocs.delete(docId);
    this.emit("Bookmarked", { doc_id: docId });
    this.renderSerp();
    this.renderSaved();
  }

  hideDocument(docId: string): void {
    if (this.hiddenDocs.has(docId)) return;
    this.hiddenDocs.add(docId);
    this.bookmarked.delete(docId);
    this.emit("Hidden", { doc_id: docId });
    this.renderSerp();
    this.renderSaved();
  }

  private renderHistory(): void {
    const list = this.root.querySelector<HTMLElement>(".query-history");
    if (!list) return;
    list.innerHTML = "";
    for (const query of this.queryHistory) {
      const item = this.doc.createElement("li");
      item.className = "history-item";
      item.textContent = query;
      list.appendChild(item);
    }
  }

  private renderSaved(): void {
    const list = this.root.querySelector<HTMLElement>(".saved-docs");
    if (!list) return;
    list.innerHTML = "";
    for (const docId of this.bookmarked) {
      const item = this.doc.createElement("li");
      item.className = "saved-item";
      const open = this.doc.createElement("button");
      open.type = "button";
      open.textContent = this.docTitles.get(docId) ?? docId;
      open.addEventListener("click", () => void this.openDocument(docId));
      item.appendChild(open);
      list.appendChild(item);
    }
  }

  private emitScaffoldScroll(): void {
    // scroll events arrive in bursts; one per second is plenty of signal
    const now = Date.now();
    if (now - this.lastScrollEmit < SCROLL_EMIT_GAP_MS) return;
    this.lastScrollEmit = now;
    this.emit("ScaffoldScrolled", {});
  }

  private emit(kind: string, payload: Record<string, unknown>): void {
    if (this.phase !== "search" || !this.buffer || !this.clock?.started) return;
    this.buffer.record(kind, payload, this.clock.nowMs());
  }

  private pollTimer(): void {
    if (this.phase !== "search" || !this.sessionId) return;
    this.api
      .scaffold(this.sessionId)
      .then((reply) => {
        this.timer?.update(reply.remaining_seconds, reply.may_finish);
        if (reply.scaffold) this.scaffoldPanel?.render(reply.scaffold);
        if (!reply.may_finish) {
          this.pollHandle = setTimeout(() => this.pollTimer(), this.opts.pollMs);
        }
      })
      .catch(() => {
        this.pollHandle = setTimeout(() => this.pollTimer(), this.opts.pollMs);
      });
  }

  // ------------------------------------------------------------ wrap-up

  async finish(): Promise<void> {
    if (this.openDocId) this.closeDocument();
    await this.buffer?.flush();
    this.renderPosttest();
  }

  private renderPosttest(): void {
    const topicId = this.topic?.topic_id;
    const concepts = this.items.filter((i) => i.topic_id === topicId).map((i) => i.concept);
    const screen = this.swapScreen("posttest");
    new PosttestForm(screen, concepts, this.opts.minSummaryWords, (answers, summary) => {
      void this.submitPosttest(answers, summary);
    });
  }

  async submitPosttest(answers: { concept: string; level: number; definition?: string | null }[], summary: string): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.buffer?.flush();
      const reply = await this.api.submitPosttest(this.sessionId, answers, summary);
      this.clearError();
      this.phase = reply.phase;
      this.teardownSearch();
      if (reply.phase === "done") {
        const screen = this.swapScreen("done");
        const note = this.doc.createElement("p");
        note.className = "done-note";
        note.textContent = "All done — thank you for taking part.";
        screen.appendChild(note);
      } else {
        this.renderClosed(reply.reason ?? "session closed");
      }
    } catch (err) {
      this.showError(err);
    }
  }

  private renderClosed(reason: string): void {
    this.teardownSearch();
    const screen = this.swapScreen("closed");
    const note = this.doc.createElement("p");
    note.className = "closed-note";
    note.textContent = `This session has ended: ${reason}`;
    screen.appendChild(note);
  }

  private teardownSearch(): void {
    this.timer?.stop();
    this.watcher?.disconnect();
    this.buffer?.dispose();
    this.stopVisibility?.();
    this.stopVisibility = null;
    if (this.pollHandle !== null) {
      clearTimeout(this.pollHandle);
      this.pollHandle = null;
    }
  }

  // ------------------------------------------------------------ chrome

  private swapScreen(name: string): HTMLElement {
    let banner = this.root.querySelector<HTMLElement>(".error-banner");
    this.root.innerHTML = "";
    if (!banner) {
      banner = this.doc.createElement("div");
      banner.className = "error-banner";
      banner.hidden = true;
    }
    this.root.appendChild(banner);
    const screen = this.doc.createElement("div");
    screen.className = `screen screen-${name}`;
    this.root.appendChild(screen);
    return screen;
  }

  private showError(err: unknown): void {
    const banner = this.root.querySelector<HTMLElement>(".error-banner");
    if (!banner) return;
    banner.hidden = false;
    banner.textContent =
      err instanceof ApiError ? err.detail : err instanceof Error ? err.message : String(err);
  }

  private clearError(): void {
    const banner = this.root.querySelector<HTMLElement>(".error-banner");
    if (banner) {
      banner.hidden = true;
      banner.textContent = "";
    }
  }
}
