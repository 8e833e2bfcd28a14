/** Client-side state for the edit loop. Exactly one submission may be in
 * flight; a failed submission never loses the draft.
 */

import { ApiError, GrimClient } from "./api.js";
import {
  draftIsEmpty,
  draftProblems,
  emptyDraft,
  type EditDraft,
  type KnownGraph,
} from "./editset.js";
import type { AttemptReport, DiffWire, EditResponse } from "./types.js";

export type SubmitStatus =
  | "applied"
  | "invalid"
  | "rejected"
  | "busy"
  | "error"
  | "in-flight";

export interface SubmitResult {
  status: SubmitStatus;
  failures: string[];
  response?: EditResponse;
}

/** Failed post-conditions out of a 422 body, one line each. */
export function failuresFrom(error: ApiError): string[] {
  if (Array.isArray(error.details)) {
    const lines: string[] = [];
    for (const entry of error.details as AttemptReport[]) {
      if (entry && Array.isArray(entry.problems)) {
        for (const problem of entry.problems) {
          lines.push(`attempt ${entry.attempt} (${entry.stage}): ${problem}`);
        }
      } else {
        lines.push(String(entry));
      }
    }
    if (lines.length) return lines;
  }
  return [`${error.code}: ${error.message}`];
}

export class ViewState {
  projectId: string | null = null;
  version: number | null = null;
  highlight: number | null = null;
  selectedNodes = new Set<string>();
  draft: EditDraft = emptyDraft();
  submitting = false;
  retryPrompt = false;
  lastFailures: string[] = [];
  lastDiff: DiffWire | null = null;

  get draftEmpty(): boolean {
    return draftIsEmpty(this.draft);
  }

  /** Submit the pending draft; resolves with what the UI should show. */
  async submitDraft(
    client: GrimClient,
    known: KnownGraph,
  ): Promise<SubmitResult> {
    if (this.submitting) return { status: "in-flight", failures: [] };
    if (this.projectId === null) {
      return { status: "invalid", failures: ["no project loaded"] };
    }
    const problems = draftProblems(this.draft, known);
    if (problems.length) {
      this.lastFailures = problems;
      return { status: "invalid", failures: problems };
    }

    this.submitting = true;
    this.retryPrompt = false;
    try {
      const response = await client.postEdit(this.projectId, this.draft);
      this.version = response.new_version;
      this.lastDiff = response.diff;
      this.draft = emptyDraft();
      this.lastFailures = [];
      return { status: "applied", failures: [], response };
    } catch (error) {
      if (error instanceof ApiError) {
        if (error.status === 409) {
          this.retryPrompt = true;
          return { status: "busy", failures: [] };
        }
        if (error.status === 422) {
          this.lastFailures = failuresFrom(error);
          return { status: "rejected", failures: this.lastFailures };
        }
        this.lastFailures = [`${error.code}: ${error.message}`];
        return { status: "error", failures: this.lastFailures };
      }
      throw error;
    } finally {
      this.submitting = false;
    }
  }
}
