import type { Serp } from "./types.js";

export interface SerpHandlers {
  onOpen: (docId: string) => void;
  onBookmark: (docId: string) => void;
  onHide: (docId: string) => void;
  onPage: (page: number) => void;
  /** Called once per rendered card so a viewport watcher can track it. */
  watch?: (el: Element, docId: string) => void;
}

export interface SerpMarks {
  bookmarked: ReadonlySet<string>;
  hidden: ReadonlySet<string>;
}

/** Renders one page of results. Hidden documents are dropped from view. */
export class SerpList {
  constructor(
    private readonly root: HTMLElement,
    private readonly handlers: SerpHandlers,
  ) {
    root.classList.add("serp");
  }

  render(serp: Serp, marks: SerpMarks): void {
    this.root.innerHTML = "";

    const header = document.createElement("div");
    header.className = "serp-header";
    const queryLabel = document.createElement("span");
    queryLabel.className = "serp-query";
    queryLabel.textContent = serp.query;
    header.appendChild(queryLabel);
    this.root.appendChild(header);

    const list = document.createElement("ol");
    list.className = "serp-results";
    for (const result of serp.results) {
      if (marks.hidden.has(result.doc_id)) continue;
      const item = document.createElement("li");
      item.className = "serp-result";
      item.dataset.docId = result.doc_id;

      const title = document.createElement("button");
      title.type = "button";
      title.className = "result-title";
      title.textContent = result.title;
      title.addEventListener("click", () => this.handlers.onOpen(result.doc_id));

      const host = document.createElement("span");
      host.className = "result-host";
      host.textContent = result.host;

      const snippet = document.createElement("p");
      snippet.className = "result-snippet";
      snippet.textContent = result.snippet;

      const actions = document.createElement("div");
      actions.className = "result-actions";
      const bookmark = document.createElement("button");
      bookmark.type = "button";
      bookmark.className = "bookmark-btn";
      const saved = marks.bookmarked.has(result.doc_id);
      bookmark.textContent = saved ? "saved" : "save";
      bookmark.disabled = saved;
      bookmark.addEventListener("click", () => this.handlers.onBookmark(result.doc_id));
      const hide = document.createElement("button");
      hide.type = "button";
      hide.className = "hide-btn";
      hide.textContent = "hide";
      hide.addEventListener("click", () => this.handlers.onHide(result.doc_id));
      actions.append(bookmark, hide);

      item.append(title, host, snippet, actions);
      list.appendChild(item);
      this.handlers.watch?.(item, result.doc_id);
    }
    this.root.appendChild(list);

    const pager = document.createElement("div");
    pager.className = "serp-pager";
    const prev = document.createElement("button");
    prev.type = "button";
    prev.className = "page-prev";
    prev.textContent = "previous";
    prev.disabled = serp.page <= 1;
    prev.addEventListener("click", () => this.handlers.onPage(serp.page - 1));
    const label = document.createElement("span");
    label.className = "page-label";
    label.textContent = `page ${serp.page}`;
    const next = document.createElement("button");
    next.type = "button";
    next.className = "page-next";
    next.textContent = "next";
    // an empty page means we paged past the end; no further next
    next.disabled = serp.results.length === 0;
    next.addEventListener("click", () => this.handlers.onPage(serp.page + 1));
    pager.append(prev, label, next);
    this.root.appendChild(pager);
  }
}
