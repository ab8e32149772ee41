/** Thin DOM binding: renders the view-model into #app and forwards events
 * to the controller. All content derives from view(), never from local
 * computation. */

import { lineChartSvg, scatterSvg } from "./charts.js";
import { SessionController } from "./controller.js";
import { ExplanationView } from "./viewmodel.js";

function el(tag: string, cls = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

export function render(controller: SessionController, root: HTMLElement): void {
  const view = controller.view();
  root.replaceChildren();

  if (view.banner) {
    const banner = el("div", "banner", view.banner);
    root.appendChild(banner);
    return; // blocking: no partial render
  }

  const header = el("header", "topbar");
  header.appendChild(
    el(
      "div",
      "session-info",
      `${view.dataset} | session ${view.sessionId.slice(0, 8)} | iteration ${view.iteration} | ` +
        `${view.labeledCount} labeled / ${view.unlabeledCount} unlabeled | ${view.status}`,
    ),
  );
  const diagToggle = el("button", "diag-toggle", "toggle diagnostics") as HTMLButtonElement;
  diagToggle.onclick = () => renderAfter(controller, root, () => controller.toggleDiagnostics());
  header.appendChild(diagToggle);
  root.appendChild(header);

  if (controller.toast) {
    const toast = el("div", `toast toast-${controller.toast.kind}`, controller.toast.text);
    if (controller.toast.retriable) {
      const retry = el("button", "retry", "retry") as HTMLButtonElement;
      retry.onclick = () => void controller.submitCorrections().then(() => render(controller, root));
      toast.appendChild(retry);
    }
    root.appendChild(toast);
  }

  const layout = el("div", "layout");

  const rulesPane = el("section", "rules");
  rulesPane.appendChild(el("h2", "", `rules (fidelity ${view.fidelity.toFixed(3)})`));
  for (const card of view.ruleCards) {
    const cardEl = el("div", `rule-card${card.selected ? " selected" : ""}`);
    for (const line of card.lines) cardEl.appendChild(el("div", "pred", line));
    cardEl.appendChild(el("div", "cover", `${card.coverageSize} instances`));
    if (card.f1 !== null) cardEl.appendChild(el("div", "diag", `F1 ${card.f1.toFixed(3)}`));
    cardEl.onclick = () =>
      renderAfter(controller, root, () =>
        controller.selectRule(card.selected ? null : card.id),
      );
    rulesPane.appendChild(cardEl);
  }
  layout.appendChild(rulesPane);

  const tablePane = el("section", "instances");
  tablePane.appendChild(el("h2", "", "instances"));
  const table = el("table") as HTMLTableElement;
  const head = el("tr");
  for (const h of ["id", "features", "rule label", "state", "mark 0", "mark 1"]) {
    head.appendChild(el("th", "", h));
  }
  table.appendChild(head);
  for (const row of view.tableRows) {
    const tr = el("tr", row.rejected ? "rejected" : row.labeled ? "labeled" : "");
    tr.appendChild(el("td", "", String(row.id)));
    tr.appendChild(el("td", "", row.features.map((f) => f.toFixed(3)).join(", ")));
    tr.appendChild(el("td", "", String(row.ruleLabel)));
    tr.appendChild(
      el(
        "td",
        "",
        row.rejected
          ? `rejected: ${row.rejected}`
          : row.labeled
            ? `labeled ${row.supervisorLabel}`
            : row.proposedLabel !== null
              ? `staged ${row.proposedLabel}`
              : "",
      ),
    );
    for (const label of [0, 1]) {
      const td = el("td");
      const btn = el(
        "button",
        row.proposedLabel === label ? "mark active" : "mark",
        String(label),
      ) as HTMLButtonElement;
      btn.disabled = row.labeled;
      btn.onclick = () => renderAfter(controller, root, () => controller.toggleInstance(row, label));
      td.appendChild(btn);
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  tablePane.appendChild(table);

  const submit = el(
    "button",
    "submit",
    `submit ${view.pendingCount} correction(s)`,
  ) as HTMLButtonElement;
  submit.disabled = !view.submitEnabled;
  submit.onclick = () => void controller.submitCorrections().then(() => render(controller, root));
  tablePane.appendChild(submit);
  layout.appendChild(tablePane);

  const chartsPane = el("section", "charts");
  chartsPane.appendChild(el("h2", "", "progress"));
  for (const series of view.charts) {
    const holder = el("div", "chart");
    holder.innerHTML = lineChartSvg(series);
    chartsPane.appendChild(holder);
  }
  if (view.scatter) {
    const holder = el("div", "chart scatter-holder");
    holder.innerHTML = scatterSvg(view.scatter.points, view.scatter.regions);
    chartsPane.appendChild(holder);
  }
  layout.appendChild(chartsPane);

  root.appendChild(layout);
}

function renderAfter(
  controller: SessionController,
  root: HTMLElement,
  action: () => void,
): void {
  action();
  render(controller, root);
}
