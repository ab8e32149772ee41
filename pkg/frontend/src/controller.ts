/** Session controller: owns the latest service payload and UI selections,
 * serializes mutations (at most one in flight), and exposes the view. */

import { ApiError, CreateParams, FeedbackStatus, SessionApi, SessionView } from "./api.js";
import {
  buildView,
  emptySelections,
  ExplanationView,
  InstanceRow,
  Selections,
  toggleCorrection,
} from "./viewmodel.js";

export type Toast = { kind: "error" | "info"; text: string; retriable: boolean };

export class SessionController {
  session: SessionView | null = null;
  selections: Selections = emptySelections();
  lastStatuses: FeedbackStatus[] = [];
  pending = false;
  toast: Toast | null = null;
  onChange: (() => void) | null = null;

  constructor(readonly api: SessionApi) {}

  private changed() {
    if (this.onChange) this.onChange();
  }

  view(): ExplanationView {
    return buildView(this.session, this.selections, this.lastStatuses, this.pending);
  }

  async create(params: CreateParams): Promise<void> {
    this.session = await this.api.createSession(params);
    this.selections = emptySelections();
    this.lastStatuses = [];
    this.toast = null;
    this.changed();
  }

  selectRule(ruleId: number | null): void {
    this.selections = { ...this.selections, ruleId };
    this.changed();
  }

  toggleDiagnostics(): void {
    this.selections = {
      ...this.selections,
      showDiagnostics: !this.selections.showDiagnostics,
    };
    this.changed();
  }

  toggleInstance(row: InstanceRow, label: number): void {
    this.selections = toggleCorrection(this.selections, row, label);
    this.changed();
  }

  /** Batch-submit the staged corrections. On success the fresh payload
   * replaces the old one and accepted picks are cleared; rejected picks
   * stay staged and are surfaced per row. Network failures keep all state
   * and raise a retriable toast. */
  async submitCorrections(): Promise<FeedbackStatus[]> {
    if (this.pending || this.selections.corrections.size === 0 || !this.session) {
      return [];
    }
    const batch = [...this.selections.corrections.entries()].map(([id, label]) => ({
      id,
      label,
    }));
    this.pending = true;
    this.changed();
    try {
      const response = await this.api.submitFeedback(this.session.id, batch);
      this.session = response;
      this.lastStatuses = response.statuses;
      const corrections = new Map(this.selections.corrections);
      for (const s of response.statuses) {
        if (s.accepted) corrections.delete(s.id);
      }
      this.selections = { ...this.selections, corrections };
      this.toast = null;
      return response.statuses;
    } catch (err) {
      if (err instanceof ApiError && err.retriable) {
        this.toast = { kind: "error", text: err.message, retriable: true };
        return [];
      }
      throw err;
    } finally {
      this.pending = false;
      this.changed();
    }
  }
}
