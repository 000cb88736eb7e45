import type { ModelInfo, SortKey, SortOrder, TicketDetail, TriageEntry } from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiRequestError> {
  let code = 'error';
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiRequestError(resp.status, code, message);
}

/** Thin client over the triage service; rows come back in server order. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async listTickets(sort: SortKey, order: SortOrder = 'desc'): Promise<TriageEntry[]> {
    const body = await this.get<{ tickets: TriageEntry[] }>(
      `/tickets?sort=${sort}&order=${order}`,
    );
    return body.tickets;
  }

  getDetail(ticketId: string): Promise<TicketDetail> {
    return this.get<TicketDetail>(`/tickets/${encodeURIComponent(ticketId)}`);
  }

  getModel(): Promise<ModelInfo> {
    return this.get<ModelInfo>('/model');
  }

  async setMer(ticketId: string, value: number, author: string): Promise<TriageEntry> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/tickets/${encodeURIComponent(ticketId)}/mer`,
      {
        method: 'PUT',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ value, author }),
      },
    );
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as TriageEntry;
  }
}
