import { Operand, Progress, QueryDescriptor, TCTC } from "./types.js";

export type AnswerHandler = (seq: number, answer: number) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Element card: attributes rendered straight from the descriptor payload. */
function operandCard(doc: Document, label: string, operand: Operand): HTMLElement {
  const card = el(doc, "div", "operand-card");
  card.dataset.elementId = operand.id;
  card.appendChild(el(doc, "div", "operand-label", label));
  card.appendChild(el(doc, "div", "operand-id", operand.id));
  const list = el(doc, "dl", "operand-features");
  operand.features.forEach((value, i) => {
    list.appendChild(el(doc, "dt", undefined, `attribute ${i + 1}`));
    list.appendChild(el(doc, "dd", undefined, value.toFixed(4)));
  });
  card.appendChild(list);
  return card;
}

function promptFor(q: QueryDescriptor): string {
  if (q.kind === "real") {
    return "How far apart are these two individuals? (0 = identical, 1 = maximally different)";
  }
  if (q.kind === "triplet") {
    return "Which of B or C is more similar to A?";
  }
  return "Which pair is farther apart: (A, B) or (X, Y)?";
}

/**
 * Render the pending query into `root`.  Every answer corresponds to one
 * explicit user action; all inputs disable on submit until the next render.
 */
export function renderQuery(root: HTMLElement, q: QueryDescriptor, onAnswer: AnswerHandler): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const box = el(doc, "section", "query-box");
  box.dataset.seq = String(q.seq);
  box.dataset.kind = q.kind;

  const badge = el(doc, "span", `mode-badge mode-${q.mode}`, q.mode.toUpperCase());
  const header = el(doc, "header", "query-header", `Query #${q.seq + 1} — ${q.kind}`);
  header.appendChild(badge);
  box.appendChild(header);
  box.appendChild(el(doc, "p", "query-prompt", promptFor(q)));

  const cards = el(doc, "div", "operand-row");
  const labels = q.kind === "quad" ? ["A", "B", "X", "Y"] : ["A", "B", "C"];
  q.operands.forEach((op, i) => cards.appendChild(operandCard(doc, labels[i] ?? `#${i}`, op)));
  box.appendChild(cards);

  const actions = el(doc, "div", "answer-actions");
  const disableAll = () => {
    actions.querySelectorAll("button,input").forEach((node) => {
      (node as HTMLButtonElement | HTMLInputElement).disabled = true;
    });
  };
  const submit = (value: number) => {
    disableAll();
    onAnswer(q.seq, value);
  };

  if (q.kind === "real") {
    const input = el(doc, "input", "real-input") as HTMLInputElement;
    input.type = "number";
    input.min = "0";
    input.max = "1";
    input.step = "any";
    const message = el(doc, "span", "input-message", "");
    const button = el(doc, "button", "submit-real", "Submit distance");
    button.addEventListener("click", () => {
      const raw = Number(input.value);
      if (!Number.isFinite(raw) || raw < 0 || raw > 1) {
        message.textContent = "Distance must be a number between 0 and 1.";
        return;
      }
      message.textContent = "";
      submit(raw);
    });
    actions.appendChild(input);
    actions.appendChild(button);
    actions.appendChild(message);
  } else if (q.kind === "triplet") {
    const closerB = el(doc, "button", "choice choice-0", "B is closer");
    const closerC = el(doc, "button", "choice choice-1", "C is closer");
    closerB.addEventListener("click", () => submit(1)); // D(a,b) < D(a,c)
    closerC.addEventListener("click", () => submit(0));
    actions.appendChild(closerB);
    actions.appendChild(closerC);
  } else {
    const firstFarther = el(doc, "button", "choice choice-0", "(A, B) is farther");
    const secondFarther = el(doc, "button", "choice choice-1", "(X, Y) is farther");
    firstFarther.addEventListener("click", () => submit(1)); // D(a,b) > D(x,y)
    secondFarther.addEventListener("click", () => submit(0));
    actions.appendChild(firstFarther);
    actions.appendChild(secondFarther);
  }

  if (q.mode === "tctc" && q.kind !== "real") {
    const tctc = el(doc, "button", "choice choice-tctc", "Too close to call");
    tctc.addEventListener("click", () => submit(TCTC));
    actions.appendChild(tctc);
  }

  box.appendChild(actions);
  root.appendChild(box);
}

export function renderIdle(root: HTMLElement, status: string): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  root.appendChild(el(doc, "p", `session-status status-${status}`, `Session ${status}.`));
}

export function renderProgress(root: HTMLElement, p: Progress): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const total = Object.values(p.estimated ?? {}).reduce((a, b) => a + b, 0);
  root.appendChild(el(doc, "span", "progress-phase", p.phase ?? ""));
  root.appendChild(
    el(doc, "span", "progress-counts", `${p.answered} answered / ~${total} estimated`),
  );
  root.appendChild(el(doc, "span", `progress-status status-${p.status}`, p.status));
}

/** Snap a raw slider value to the arbiter's precision floor in TCTC mode. */
export function snapToGranularity(value: number, alphaL: number): number {
  if (!(alphaL > 0)) return value;
  return Math.min(1, Math.max(0, Math.round(value / alphaL) * alphaL));
}
