// Wire types mirroring the triage service JSON. The dashboard renders these
// values verbatim; it never recomputes ER/CER/MER semantics on its own.

export type SortKey = 'er' | 'cer' | 'mer';
export type SortOrder = 'asc' | 'desc';

export interface TriageEntry {
  ticket_id: string;
  current_er: number;
  predicted_crit: boolean;
  previous_er: number | null;
  cer: number | null;
  mer: number | null;
  mer_set_by: string | null;
  mer_set_at: number | null;
  last_event_ts: number;
  open: boolean;
  days_since_last_contact: number;
  ownership_level: number;
}

export interface WireEvent {
  ticket_id: string;
  seq: number;
  ts: number;
  kind: string;
  actor_id: string;
  severity?: number;
  level?: number;
  customer_id?: string;
}

export interface ErPoint {
  ts: number;
  er: number;
}

export interface MerWrite {
  value: number;
  author: string;
  ts: number;
}

export interface TicketDetail {
  entry: TriageEntry;
  events: WireEvent[];
  features: Record<string, number>;
  er_history: ErPoint[];
  mer_history: MerWrite[];
}

export interface ModelInfo {
  format_version: number;
  n_trees: number;
  feature_arity: number;
  feature_names: string[];
  window_months: number;
}

export interface ApiError {
  code: string;
  message: string;
}
