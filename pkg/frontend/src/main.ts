import { HttpApi } from "./api.js";
import { AnnotationSession } from "./state.js";
import { QUESTION, SourceSummary } from "./types.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function fmt(x: number | null): string {
  return x === null ? "–" : x.toFixed(3);
}

function summaryRow(label: string, s: SourceSummary): string {
  return `<tr><td>${label}</td><td>${s.count}</td><td>${fmt(s.mean)}</td>` +
    `<td>${fmt(s.sd)}</td></tr>`;
}

function render(session: AnnotationSession): void {
  const banner = el("banner");
  const card = el("card");
  const done = el("done");

  banner.hidden = session.phase !== "error";
  if (session.phase === "error") {
    el("banner-text").textContent = session.errorMessage ?? "something went wrong";
  }

  card.hidden = !(session.phase === "annotating" || session.phase === "posting");
  done.hidden = session.phase !== "done";

  el("tally").textContent = `${session.tally} scored this session`;

  if (session.current !== null) {
    el("review").textContent = session.current.review_text;
    el("candidate").textContent = session.current.candidate_title;
  }

  if (session.phase === "done" && session.summary !== null) {
    const rows = [summaryRow("overall", session.summary.overall)];
    for (const [source, s] of Object.entries(session.summary.per_source)) {
      rows.push(summaryRow(source, s));
    }
    el("summary-body").innerHTML = rows.join("");
  }
}

export function boot(): void {
  const annotator =
    new URLSearchParams(window.location.search).get("annotator") ?? "anon";
  el("question").textContent = QUESTION;
  const session = new AnnotationSession(new HttpApi(), annotator, 10, () =>
    render(session),
  );
  document.addEventListener("keydown", (ev) => {
    void session.handleKey(ev.key);
  });
  el("retry").addEventListener("click", () => {
    void session.retry();
  });
  void session.start();
}

boot();
