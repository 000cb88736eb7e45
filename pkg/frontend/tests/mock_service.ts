// An in-memory stand-in for the triage service, faithful to its sorting
// contract: requested key, absent values last, ties broken by ticket id.

import type { FetchLike } from '../src/api';
import type { SortKey, TriageEntry } from '../src/types';

export function entry(overrides: Partial<TriageEntry> & { ticket_id: string }): TriageEntry {
  return {
    current_er: 0,
    previous_er: null,
    cer: null,
    mer: null,
    mer_set_by: null,
    mer_set_at: null,
    last_event_ts: 0,
    open: true,
    days_since_last_contact: 0,
    ownership_level: 1,
    ...overrides,
    predicted_crit: (overrides.current_er ?? 0) > 50,
  };
}

export class MockService {
  calls: string[] = [];
  failNext = false;
  rejectMer: { status: number; code: string; message: string } | null = null;
  delayedResolvers: Array<() => void> = [];
  holdListResponses = false;

  constructor(public tickets: TriageEntry[]) {}

  sorted(key: SortKey, order: 'asc' | 'desc'): TriageEntry[] {
    const value = (t: TriageEntry) =>
      key === 'er' ? t.current_er : key === 'cer' ? t.cer : t.mer;
    return [...this.tickets].sort((a, b) => {
      const va = value(a);
      const vb = value(b);
      if (va === null && vb === null) return a.ticket_id < b.ticket_id ? -1 : 1;
      if (va === null) return 1;
      if (vb === null) return -1;
      if (va !== vb) return order === 'desc' ? vb - va : va - vb;
      return a.ticket_id < b.ticket_id ? -1 : 1;
    });
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  }

  fetch: FetchLike = async (input, init) => {
    this.calls.push(`${init?.method ?? 'GET'} ${input}`);
    if (this.failNext) {
      this.failNext = false;
      throw new Error('connection refused');
    }
    if (this.holdListResponses) {
      await new Promise<void>((resolve) => this.delayedResolvers.push(resolve));
    }
    const url = new URL(input, 'http://test');
    const merMatch = url.pathname.match(/^\/tickets\/([^/]+)\/mer$/);
    if (merMatch && init?.method === 'PUT') {
      if (this.rejectMer) {
        const { status, code, message } = this.rejectMer;
        return this.json({ code, message }, status);
      }
      const body = JSON.parse(String(init.body)) as { value: number; author: string };
      if (body.value < 0 || body.value > 100) {
        return this.json({ code: 'validation', message: 'MER out of range [0,100]' }, 400);
      }
      const ticket = this.tickets.find((t) => t.ticket_id === decodeURIComponent(merMatch[1]!));
      if (!ticket) return this.json({ code: 'not_found', message: 'unknown ticket' }, 404);
      ticket.mer = body.value;
      ticket.mer_set_by = body.author;
      ticket.mer_set_at = 1234;
      return this.json(ticket);
    }
    if (url.pathname === '/tickets') {
      const sort = (url.searchParams.get('sort') ?? 'er') as SortKey;
      const order = (url.searchParams.get('order') ?? 'desc') as 'asc' | 'desc';
      return this.json({ tickets: this.sorted(sort, order) });
    }
    const detailMatch = url.pathname.match(/^\/tickets\/([^/]+)$/);
    if (detailMatch) {
      const ticket = this.tickets.find(
        (t) => t.ticket_id === decodeURIComponent(detailMatch[1]!),
      );
      if (!ticket) return this.json({ code: 'not_found', message: 'unknown ticket' }, 404);
      return this.json({
        entry: ticket,
        events: [
          { ticket_id: ticket.ticket_id, seq: 0, ts: 100, kind: 'opened', actor_id: 'c' },
        ],
        features: { number_of_entries: 1, days_open: 0 },
        er_history: [{ ts: 100, er: ticket.current_er }],
        mer_history: [],
      });
    }
    return this.json({ code: 'not_found', message: `no route ${url.pathname}` }, 404);
  };

  releaseHeld(): void {
    for (const resolve of this.delayedResolvers.splice(0)) resolve();
  }
}
