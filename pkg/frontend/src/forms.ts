import type { PostTestAnswer, PreTestItem, VksAnswer } from "./types.js";

const LEVEL_LABELS: ReadonlyArray<[number, string]> = [
  [1, "I don't remember seeing this term"],
  [2, "I've seen this term, but I don't know what it means"],
  [3, "I know what this term means (write a definition)"],
  [4, "I can explain this term to someone (write a definition)"],
];

const DEFINITION_REQUIRED_FROM = 3;

interface ConceptRow {
  concept: string;
  topicId: string | null;
  select: HTMLSelectElement;
  definition: HTMLTextAreaElement;
}

function buildConceptRow(concept: string, topicId: string | null): { el: HTMLElement; row: ConceptRow } {
  const wrap = document.createElement("div");
  wrap.className = "knowledge-row";
  wrap.dataset.concept = concept;
  if (topicId !== null) wrap.dataset.topicId = topicId;

  const label = document.createElement("label");
  label.className = "concept-label";
  label.textContent = concept;

  const select = document.createElement("select");
  select.className = "level-select";
  for (const [value, text] of LEVEL_LABELS) {
    const option = document.createElement("option");
    option.value = String(value);
    option.textContent = text;
    select.appendChild(option);
  }

  const definition = document.createElement("textarea");
  definition.className = "definition-input";
  definition.placeholder = "your definition";
  definition.disabled = true;

  select.addEventListener("change", () => {
    const needed = Number(select.value) >= DEFINITION_REQUIRED_FROM;
    definition.disabled = !needed;
    definition.required = needed;
    if (!needed) definition.value = "";
  });

  wrap.append(label, select, definition);
  return { el: wrap, row: { concept, topicId, select, definition } };
}

function rowsComplete(rows: ConceptRow[]): boolean {
  let ok = true;
  for (const row of rows) {
    const needsDefinition = Number(row.select.value) >= DEFINITION_REQUIRED_FROM;
    const missing = needsDefinition && row.definition.value.trim() === "";
    row.definition.classList.toggle("missing", missing);
    if (missing) ok = false;
  }
  return ok;
}

/** Knowledge check shown before the task: one row per concept per topic. */
export class PretestForm {
  private readonly rows: ConceptRow[] = [];

  constructor(
    root: HTMLElement,
    items: PreTestItem[],
    onSubmit: (answers: VksAnswer[]) => void,
  ) {
    root.innerHTML = "";
    const form = document.createElement("form");
    form.className = "pretest-form";
    const intro = document.createElement("p");
    intro.className = "form-intro";
    intro.textContent =
      "For each term below, pick the statement that fits best. " +
      "If you know a term, write a short definition.";
    form.appendChild(intro);

    for (const item of items) {
      const { el, row } = buildConceptRow(item.concept, item.topic_id);
      form.appendChild(el);
      this.rows.push(row);
    }

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.className = "pretest-submit";
    submit.textContent = "Continue";
    form.appendChild(submit);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (!rowsComplete(this.rows)) return;
      onSubmit(
        this.rows.map((row) => ({
          topic_id: row.topicId ?? "",
          concept: row.concept,
          level: Number(row.select.value),
          definition: row.definition.value.trim() || null,
        })),
      );
    });
    root.appendChild(form);
  }

  /** Test hook: set one row's answer programmatically. */
  setAnswer(concept: string, topicId: string, level: number, definition?: string): void {
    const row = this.rows.find((r) => r.concept === concept && r.topicId === topicId);
    if (!row) throw new Error(`no row for ${topicId}/${concept}`);
    row.select.value = String(level);
    row.select.dispatchEvent(new Event("change"));
    if (definition !== undefined) row.definition.value = definition;
  }
}

export function countWords(text: string): number {
  return text.split(/\s+/).filter(Boolean).length;
}

/**
 * Wrap-up form: the same knowledge check for the assigned topic's concepts
 * plus a free-text summary. The word counter is advice — the service judges
 * the length, and its refusal surfaces in the error banner.
 */
export class PosttestForm {
  private readonly rows: ConceptRow[] = [];
  readonly summary: HTMLTextAreaElement;

  constructor(
    root: HTMLElement,
    concepts: string[],
    minWords: number,
    onSubmit: (answers: PostTestAnswer[], summary: string) => void,
  ) {
    root.innerHTML = "";
    const form = document.createElement("form");
    form.className = "posttest-form";

    for (const concept of concepts) {
      const { el, row } = buildConceptRow(concept, null);
      form.appendChild(el);
      this.rows.push(row);
    }

    const summaryLabel = document.createElement("label");
    summaryLabel.className = "summary-label";
    summaryLabel.textContent = `Summarise what you learned (at least ${minWords} words):`;
    this.summary = document.createElement("textarea");
    this.summary.className = "summary-input";
    this.summary.rows = 8;
    const counter = document.createElement("span");
    counter.className = "word-count";
    counter.textContent = "0 words";
    this.summary.addEventListener("input", () => {
      const n = countWords(this.summary.value);
      counter.textContent = `${n} words`;
      counter.classList.toggle("short", n < minWords);
    });

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.className = "posttest-submit";
    submit.textContent = "Finish";

    form.append(summaryLabel, this.summary, counter, submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (!rowsComplete(this.rows)) return;
      onSubmit(
        this.rows.map((row) => ({
          concept: row.concept,
          level: Number(row.select.value),
          definition: row.definition.value.trim() || null,
        })),
        this.summary.value.trim(),
      );
    });
    root.appendChild(form);
  }

  setAnswer(concept: string, level: number, definition?: string): void {
    const row = this.rows.find((r) => r.concept === concept);
    if (!row) throw new Error(`no row for concept ${concept}`);
    row.select.value = String(level);
    row.select.dispatchEvent(new Event("change"));
    if (definition !== undefined) row.definition.value = definition;
  }
}
