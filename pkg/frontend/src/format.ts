// Pure display helpers. Values arrive already computed by the service.

export function formatCer(cer: number | null): string {
  if (cer === null) return '—';
  if (cer > 0) return `+${cer} ▲`;
  if (cer < 0) return `${cer} ▼`;
  return '0';
}

export function cerClass(cer: number | null): string {
  if (cer === null || cer === 0) return 'cer-flat';
  return cer > 0 ? 'cer-up' : 'cer-down';
}

export function erClass(er: number): string {
  if (er > 50) return 'er-crit';
  if (er > 25) return 'er-warm';
  return 'er-cool';
}

export function formatDays(days: number): string {
  if (days < 1) return `${Math.round(days * 24)}h`;
  return `${days.toFixed(1)}d`;
}

export function formatMinutesTs(epochMinutes: number): string {
  return new Date(epochMinutes * 60_000).toISOString().slice(0, 16).replace('T', ' ');
}

const KIND_LABELS: Record<string, string> = {
  opened: 'opened',
  customer_msg: 'customer message',
  support_msg: 'support message',
  severity_change: 'severity change',
  ownership_change: 'ownership change',
  closed: 'closed',
};

export function formatEventKind(kind: string): string {
  return KIND_LABELS[kind] ?? kind;
}

// Display labels for the 22 model inputs, keyed by wire field name.
export const FEATURE_LABELS: Record<string, string> = {
  number_of_entries: 'Number of entries',
  days_open: 'Days open',
  pmr_ownership_level: 'PMR ownership level',
  num_support_contacts: 'Number of support people in contact with customer',
  num_severity_increases: 'Number of increases in severity',
  num_severity_decreases: 'Number of decreases in severity',
  num_sevX_to_sev1: 'Number of sev4/sev3/sev2 to sev1 transitions',
  time_until_first_contact_min: 'Time until first contact (min)',
  avg_support_response_min: 'Average support response time (min)',
  diff_avg_vs_expected_min: 'Difference in average vs expected response time (min)',
  days_since_last_contact: 'Days since last contact',
  num_closed_pmrs: 'Number of closed PMRs',
  num_closed_critsits: 'Number of closed CritSits',
  critsit_to_pmr_ratio: 'CritSit to PMR ratio',
  expected_response_min: 'Expectation of support response time (min)',
  num_open_pmrs: 'Number of open PMRs',
  pmrs_opened_last_X: 'Number of PMRs opened in the last X months',
  pmrs_closed_last_X: 'Number of PMRs closed in the last X months',
  critsits_open: 'Number of open CritSits',
  critsits_opened_last_X: 'Number of CritSits opened in the last X months',
  critsits_closed_last_X: 'Number of CritSits closed in the last X months',
  expected_response_last_X_min: 'Expected support response time given the last X months (min)',
};

export function featureLabel(name: string): string {
  return FEATURE_LABELS[name] ?? name;
}

export function formatFeatureValue(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return value.toFixed(2);
}
