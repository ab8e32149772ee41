/** End-to-end: a scripted browser session against a live seeded service.
 *
 * A library reference run provides the fold, the supervisor's 10 choices,
 * and the expected per-iteration test F1. The test drives the controller
 * exactly as the page would (select the flagged rule, stage the
 * counter-example, submit) and asserts the final chart value equals the
 * library replay to 1e-9 and that every on-screen number equals the
 * service's response.
 */

import assert from "node:assert/strict";
import { execFile, spawn, type ChildProcess } from "node:child_process";
import { once } from "node:events";
import { test } from "node:test";
import { promisify } from "node:util";

import { SessionApi } from "../api.js";
import { SessionController } from "../controller.js";

const execFileP = promisify(execFile);
const PORT = 8899;
const BASE = `http://127.0.0.1:${PORT}`;
const PYTHON = process.env.XGL_PYTHON ?? "python3";
const REPO = new URL("../../../..", import.meta.url).pathname; // dist/test -> frontend -> repo

interface Reference {
  dataset: string;
  seed: number;
  model: { kind: string; hyperparameters: Record<string, number> };
  surrogate: Record<string, number>;
  fold: { train: number[]; test: number[]; initial: number[] };
  queries: { id: number; label: number; rule_id: number }[];
  expected_test_f1: number[];
}

async function loadReference(budget: number): Promise<Reference> {
  const { stdout } = await execFileP(
    PYTHON,
    [`${REPO}pkg/scripts/replay_reference.py`, "--budget", String(budget)],
    { cwd: `${REPO}pkg`, maxBuffer: 64 * 1024 * 1024 },
  );
  return JSON.parse(stdout) as Reference;
}

async function startService(): Promise<ChildProcess> {
  const proc = spawn(
    PYTHON,
    [
      "-c",
      [
        "import uvicorn",
        "from xgl.service import create_app",
        `uvicorn.run(create_app(), host='127.0.0.1', port=${PORT}, log_level='warning')`,
      ].join("; "),
    ],
    { cwd: `${REPO}pkg`, stdio: ["ignore", "inherit", "inherit"] },
  );
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const r = await fetch(`${BASE}/sessions/probe`);
      if (r.status === 404) return proc;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 300));
  }
  proc.kill();
  throw new Error("service did not come up");
}

test("scripted session: 10 iterations end-to-end equals the library replay", async (t) => {
  const budget = 10;
  const reference = await loadReference(budget);
  const service = await startService();
  t.after(async () => {
    service.kill("SIGTERM");
    await once(service, "exit").catch(() => undefined);
  });

  const controller = new SessionController(new SessionApi(BASE));
  await controller.create({
    dataset: reference.dataset,
    seed: reference.seed,
    model: reference.model,
    surrogate: reference.surrogate,
    fold: reference.fold,
  });

  let view = controller.view();
  assert.equal(view.banner, null);
  assert.equal(view.iteration, 0);
  assert.equal(view.labeledCount, reference.fold.initial.length);

  for (const q of reference.queries) {
    // the supervisor workflow: open the flagged rule, then stage the
    // counter-example inside it (fallback queries stage from the full table)
    controller.selectRule(q.rule_id >= 0 ? q.rule_id : null);
    view = controller.view();
    const row = view.tableRows.find((r) => r.id === q.id);
    assert.ok(row, `queried instance ${q.id} is on screen`);
    assert.equal(row!.labeled, false);
    controller.toggleInstance(row!, q.label);
    assert.equal(controller.view().submitEnabled, true);
    const statuses = await controller.submitCorrections();
    assert.equal(statuses.length, 1);
    assert.equal(statuses[0].accepted, true, statuses[0].reason);
  }

  view = controller.view();
  assert.equal(view.iteration, budget);
  assert.equal(view.labeledCount, reference.fold.initial.length + budget);

  // chart data appends monotonically: one point per iteration
  const f1Chart = view.charts.find((c) => c.label === "test macro-F1")!;
  assert.equal(f1Chart.points.length, budget);

  // final test F1 equals the library replay to 1e-9
  const expectedFinal = reference.expected_test_f1[reference.expected_test_f1.length - 1];
  const gotFinal = f1Chart.points[f1Chart.points.length - 1].y;
  assert.ok(
    Math.abs(gotFinal - expectedFinal) <= 1e-9,
    `final F1 ${gotFinal} vs library ${expectedFinal}`,
  );

  // every on-screen number is traceable to the service response
  const session = controller.session!;
  assert.deepEqual(
    f1Chart.points.map((p) => p.y),
    session.metrics.test_macro_f1,
  );
  const nbChart = view.charts.find((c) => c.label === "narrative bias")!;
  assert.deepEqual(
    nbChart.points.map((p) => p.y),
    session.metrics.nb_narrative,
  );
  const coverSum = view.ruleCards.reduce((acc, c) => acc + c.coverageSize, 0);
  assert.equal(coverSum, session.explanation.n_pool);
  for (const card of view.ruleCards) {
    const raw = session.explanation.rules.find((r) => r.id === card.id)!;
    assert.equal(card.coverageSize, raw.coverage_size);
    assert.equal(card.label, raw.label);
  }

  // refreshing from the service renders identically (pure view)
  const refreshed = await controller.api.getSession(session.id);
  assert.deepEqual(refreshed.metrics, session.metrics);
});

test("partial rejection: already-labeled ids are rejected, fresh ones apply", async (t) => {
  const service = await startService();
  t.after(async () => {
    service.kill("SIGTERM");
    await once(service, "exit").catch(() => undefined);
  });
  const controller = new SessionController(new SessionApi(BASE));
  await controller.create({
    dataset: "synthetic",
    seed: 3,
    model: { kind: "decision_tree", hyperparameters: { max_depth: 4 } },
  });
  let view = controller.view();
  const fresh = view.tableRows.filter((r) => !r.labeled).slice(0, 2);
  controller.toggleInstance(fresh[0], 1);
  await controller.submitCorrections();

  // stage the same instance again (now labeled server-side) plus a new one
  view = controller.view();
  const again = view.tableRows.find((r) => r.id === fresh[0].id)!;
  assert.equal(again.labeled, true); // server already marked it
  const second = view.tableRows.find((r) => r.id === fresh[1].id)!;
  controller.selections.corrections.set(fresh[0].id, 0); // force-stage a stale id
  controller.toggleInstance(second, 0);
  const statuses = await controller.submitCorrections();
  const byId = new Map(statuses.map((s) => [s.id, s]));
  assert.equal(byId.get(fresh[0].id)!.accepted, false);
  assert.match(byId.get(fresh[0].id)!.reason, /already labeled/);
  assert.equal(byId.get(second.id)!.accepted, true);

  // the rejected row is highlighted, the accepted one applied
  view = controller.view();
  assert.equal(view.tableRows.find((r) => r.id === fresh[0].id)!.rejected, "already labeled");
  assert.equal(view.tableRows.find((r) => r.id === second.id)!.labeled, true);
});

test("network failure: retriable toast, no state loss", async () => {
  const controller = new SessionController(new SessionApi("http://127.0.0.1:1")); // closed port
  controller.session = {
    v: 1,
    id: "x",
    iteration: 0,
    status: "active",
    labeled_count: 0,
    unlabeled_count: 1,
    feature_names: ["a"],
    dataset: "d",
    explanation: { v: 1, fidelity: 1, n_pool: 1, rules: [] },
    metrics: {
      v: 1,
      iterations: [],
      test_macro_f1: [],
      query_macro_f1: [],
      nb_experimental: [],
      nb_narrative: [],
      fidelity: [],
      n_rules: [],
    },
    instances_by_rule: {},
  };
  controller.selections.corrections.set(5, 1);
  const statuses = await controller.submitCorrections();
  assert.deepEqual(statuses, []);
  assert.ok(controller.toast);
  assert.equal(controller.toast!.retriable, true);
  assert.equal(controller.selections.corrections.get(5), 1); // staging preserved
});
