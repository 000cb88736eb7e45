import type { ApiClient } from './api';
import { validateMer } from './mer';
import type { SortKey, SortOrder, TicketDetail, TriageEntry } from './types';

export interface RowsView {
  rows: TriageEntry[];
  sort: SortKey;
  order: SortOrder;
  stale: boolean;
  error: string | null;
}

export interface DashboardHooks {
  onRows(view: RowsView): void;
  onDetail(detail: TicketDetail | null): void;
}

export type MerResult =
  | { ok: true; entry: TriageEntry }
  | { ok: false; reason: string; blockedClientSide: boolean };

/**
 * View-model for the overview table. Row order always comes from the
 * service (single source of truth); refreshes cancel-and-replace so a
 * stale response can never overwrite a newer one; at most one MER
 * mutation per ticket is in flight at a time, rendered optimistically
 * and reverted if the service rejects it.
 */
export class Dashboard {
  private sort: SortKey = 'er';
  private order: SortOrder = 'desc';
  private rows: TriageEntry[] = [];
  private refreshToken = 0;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private merInFlight = new Set<string>();
  private detailTicket: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly hooks: DashboardHooks,
  ) {}

  get sortKey(): SortKey {
    return this.sort;
  }

  get sortOrder(): SortOrder {
    return this.order;
  }

  currentRows(): TriageEntry[] {
    return this.rows;
  }

  private publish(stale: boolean, error: string | null = null): void {
    this.hooks.onRows({
      rows: this.rows,
      sort: this.sort,
      order: this.order,
      stale,
      error,
    });
  }

  /** Fetch the overview in the current sort; superseded requests are dropped. */
  async refresh(): Promise<void> {
    const token = ++this.refreshToken;
    try {
      const rows = await this.api.listTickets(this.sort, this.order);
      if (token !== this.refreshToken) return;
      this.rows = rows;
      this.publish(false);
    } catch (err) {
      if (token !== this.refreshToken) return;
      this.publish(true, err instanceof Error ? err.message : String(err));
    }
  }

  /** Change the sort key (toggling direction on repeat) and refetch. */
  async setSort(key: SortKey): Promise<void> {
    if (key === this.sort) {
      this.order = this.order === 'desc' ? 'asc' : 'desc';
    } else {
      this.sort = key;
      this.order = 'desc';
    }
    await this.refresh();
  }

  startPolling(intervalMs: number): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      void this.refresh();
      if (this.detailTicket !== null) void this.openDetail(this.detailTicket);
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async openDetail(ticketId: string): Promise<void> {
    this.detailTicket = ticketId;
    try {
      const detail = await this.api.getDetail(ticketId);
      if (this.detailTicket === ticketId) this.hooks.onDetail(detail);
    } catch {
      if (this.detailTicket === ticketId) this.hooks.onDetail(null);
    }
  }

  closeDetail(): void {
    this.detailTicket = null;
    this.hooks.onDetail(null);
  }

  /**
   * Validate locally, render optimistically, and reconcile with the
   * server-acknowledged entry (or revert on rejection). Out-of-range
   * values never reach the network.
   */
  async submitMer(ticketId: string, raw: string | number, author: string): Promise<MerResult> {
    const validation = validateMer(raw);
    if (!validation.ok) {
      return { ok: false, reason: validation.reason, blockedClientSide: true };
    }
    if (this.merInFlight.has(ticketId)) {
      return {
        ok: false,
        reason: 'an update for this ticket is already in flight',
        blockedClientSide: true,
      };
    }
    const index = this.rows.findIndex((r) => r.ticket_id === ticketId);
    const before = index >= 0 ? this.rows[index]! : null;
    this.merInFlight.add(ticketId);
    if (before) {
      this.rows = this.rows.slice();
      this.rows[index] = { ...before, mer: validation.value, mer_set_by: author };
      this.publish(false);
    }
    try {
      const entry = await this.api.setMer(ticketId, validation.value, author);
      const at = this.rows.findIndex((r) => r.ticket_id === ticketId);
      if (at >= 0) {
        this.rows = this.rows.slice();
        this.rows[at] = entry;
        this.publish(false);
      }
      return { ok: true, entry };
    } catch (err) {
      const at = this.rows.findIndex((r) => r.ticket_id === ticketId);
      if (at >= 0 && before) {
        this.rows = this.rows.slice();
        this.rows[at] = before;
        this.publish(false);
      }
      return {
        ok: false,
        reason: err instanceof Error ? err.message : String(err),
        blockedClientSide: false,
      };
    } finally {
      this.merInFlight.delete(ticketId);
    }
  }
}
