// Admin view model: completed sessions with their verdicts, open ones with
// progress only.  Values come straight from the service's GET endpoints, so
// they agree with what the analyze CLI recomputes from the logs.

import { ApiClient, SessionSummary } from "./api.js";

export interface AdminRow {
  sessionId: string;
  n: number;
  answered: number;
  status: "open" | "complete";
  kCorrect: number | null;
  pValue: number | null;
  verdict: "PASSED" | "FAILED" | null;
}

export interface AdminView {
  rows: AdminRow[];
  empty: boolean;
}

export function toAdminRow(summary: SessionSummary): AdminRow {
  return {
    sessionId: summary.session_id,
    n: summary.n,
    answered: summary.answered,
    status: summary.status,
    kCorrect: summary.k_correct ?? null,
    pValue: summary.p_value ?? null,
    verdict: summary.verdict ?? null,
  };
}

export async function loadAdminView(client: ApiClient): Promise<AdminView> {
  const sessions = await client.listSessions();
  const rows = sessions.map(toAdminRow);
  return { rows, empty: rows.length === 0 };
}

export function formatPValue(p: number | null): string {
  if (p === null) {
    return "-";
  }
  return p < 0.0001 ? p.toExponential(2) : p.toFixed(4);
}
