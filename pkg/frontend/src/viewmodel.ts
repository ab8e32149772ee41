/** Pure view construction: (latest service payload, UI selections) -> what
 * the screen shows. No model logic lives here; every number is copied from
 * the service response. */

import {
  FeedbackStatus,
  InstanceJson,
  RuleJson,
  SCHEMA_VERSION,
  SessionView,
} from "./api.js";

export interface Selections {
  ruleId: number | null;
  corrections: Map<number, number>; // instance id -> proposed label
  showDiagnostics: boolean; // rule F1/precision are hidden by default
}

export function emptySelections(): Selections {
  return { ruleId: null, corrections: new Map(), showDiagnostics: false };
}

export interface RuleCard {
  id: number;
  lines: string[]; // one predicate per line, predicted class last
  label: number;
  coverageSize: number;
  f1: number | null; // null unless diagnostics are toggled on
  selected: boolean;
}

export interface InstanceRow {
  id: number;
  features: number[];
  ruleLabel: number;
  labeled: boolean;
  supervisorLabel: number | null;
  proposedLabel: number | null;
  rejected: string | null;
}

export interface ChartSeries {
  label: string;
  points: { x: number; y: number }[];
}

export interface ScatterPoint {
  x: number;
  y: number;
  ruleLabel: number;
  labeled: boolean;
  id: number;
}

export interface ScatterRegion {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  label: number;
}

export interface ExplanationView {
  banner: string | null; // blocks rendering entirely when set
  sessionId: string;
  dataset: string;
  status: string;
  iteration: number;
  labeledCount: number;
  unlabeledCount: number;
  fidelity: number;
  ruleCards: RuleCard[];
  tableRows: InstanceRow[];
  charts: ChartSeries[];
  scatter: { points: ScatterPoint[]; regions: ScatterRegion[] } | null;
  submitEnabled: boolean;
  pendingCount: number;
}

export function ruleLines(rule: RuleJson): string[] {
  const lines = rule.text.length ? [...rule.text] : ["always"];
  lines.push(`=> class ${rule.label}`);
  return lines;
}

function bounds(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

/** Axis-aligned region of a conjunctive rule over a 2-feature domain,
 * clipped to the observed data bounds. */
export function ruleRegion(
  rule: RuleJson,
  xb: [number, number],
  yb: [number, number],
): ScatterRegion {
  let [x0, x1] = xb;
  let [y0, y1] = yb;
  for (const p of rule.predicates) {
    if (p.feature === 0) {
      if (p.op === "<=") x1 = Math.min(x1, p.threshold);
      else x0 = Math.max(x0, p.threshold);
    } else if (p.feature === 1) {
      if (p.op === "<=") y1 = Math.min(y1, p.threshold);
      else y0 = Math.max(y0, p.threshold);
    }
  }
  return { x0, x1, y0, y1, label: rule.label };
}

export function buildView(
  session: SessionView | null,
  selections: Selections,
  lastStatuses: FeedbackStatus[] = [],
  pending = false,
): ExplanationView {
  if (session === null) {
    return {
      banner: "no session",
      sessionId: "",
      dataset: "",
      status: "",
      iteration: 0,
      labeledCount: 0,
      unlabeledCount: 0,
      fidelity: NaN,
      ruleCards: [],
      tableRows: [],
      charts: [],
      scatter: null,
      submitEnabled: false,
      pendingCount: 0,
    };
  }
  if (session.v !== SCHEMA_VERSION || session.explanation.v !== SCHEMA_VERSION) {
    // schema mismatch blocks the whole render; nothing partial
    return {
      ...buildView(null, selections),
      banner: `schema version mismatch: service speaks v${session.v}, client v${SCHEMA_VERSION}`,
    };
  }

  const rejectedBy = new Map<number, string>();
  for (const s of lastStatuses) {
    if (!s.accepted) rejectedBy.set(s.id, s.reason);
  }

  const ruleCards: RuleCard[] = session.explanation.rules.map((rule) => ({
    id: rule.id,
    lines: ruleLines(rule),
    label: rule.label,
    coverageSize: rule.coverage_size,
    f1: selections.showDiagnostics ? rule.f1 : null,
    selected: selections.ruleId === rule.id,
  }));

  const selectedRows: InstanceJson[] =
    selections.ruleId === null
      ? Object.values(session.instances_by_rule).flat()
      : (session.instances_by_rule[String(selections.ruleId)] ?? []);

  const tableRows: InstanceRow[] = selectedRows.map((inst) => ({
    id: inst.id,
    features: inst.features,
    ruleLabel: inst.rule_label,
    labeled: inst.labeled,
    supervisorLabel: inst.supervisor_label,
    proposedLabel: selections.corrections.get(inst.id) ?? null,
    rejected: rejectedBy.get(inst.id) ?? null,
  }));

  const m = session.metrics;
  const charts: ChartSeries[] = [
    {
      label: "test macro-F1",
      points: m.iterations.map((it, i) => ({ x: it, y: m.test_macro_f1[i] })),
    },
    {
      label: "narrative bias",
      points: m.iterations.map((it, i) => ({ x: it, y: m.nb_narrative[i] })),
    },
    {
      label: "surrogate fidelity",
      points: m.iterations.map((it, i) => ({ x: it, y: m.fidelity[i] })),
    },
  ];

  let scatter: ExplanationView["scatter"] = null;
  if (session.feature_names.length === 2) {
    const all = Object.values(session.instances_by_rule).flat();
    const xb = bounds(all.map((r) => r.features[0]));
    const yb = bounds(all.map((r) => r.features[1]));
    scatter = {
      points: all.map((r) => ({
        x: r.features[0],
        y: r.features[1],
        ruleLabel: r.rule_label,
        labeled: r.labeled,
        id: r.id,
      })),
      regions: session.explanation.rules.map((rule) => ruleRegion(rule, xb, yb)),
    };
  }

  return {
    banner: null,
    sessionId: session.id,
    dataset: session.dataset,
    status: session.status,
    iteration: session.iteration,
    labeledCount: session.labeled_count,
    unlabeledCount: session.unlabeled_count,
    fidelity: session.explanation.fidelity,
    ruleCards,
    tableRows,
    charts,
    scatter,
    submitEnabled: selections.corrections.size > 0 && !pending,
    pendingCount: selections.corrections.size,
  };
}

/** Flip an instance's proposed correction; selecting the same label twice
 * clears it. Labeled instances are not selectable. */
export function toggleCorrection(
  selections: Selections,
  instance: InstanceRow,
  label: number,
): Selections {
  if (instance.labeled) return selections;
  const corrections = new Map(selections.corrections);
  if (corrections.get(instance.id) === label) corrections.delete(instance.id);
  else corrections.set(instance.id, label);
  return { ...selections, corrections };
}
