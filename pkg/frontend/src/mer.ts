// Client-side MER validation. The service validates again on its side; this
// only exists to block obviously bad input before it leaves the browser.

export type MerValidation = { ok: true; value: number } | { ok: false; reason: string };

export function validateMer(raw: string | number): MerValidation {
  const text = String(raw).trim();
  if (text === '') return { ok: false, reason: 'enter a value between 0 and 100' };
  const value = Number(text);
  if (!Number.isFinite(value)) return { ok: false, reason: `not a number: ${text}` };
  if (!Number.isInteger(value)) return { ok: false, reason: 'MER must be a whole number' };
  if (value < 0 || value > 100) return { ok: false, reason: 'MER out of range [0,100]' };
  return { ok: true, value };
}
