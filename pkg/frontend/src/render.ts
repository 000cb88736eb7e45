import type { Dashboard, RowsView } from './controller';
import {
  cerClass,
  erClass,
  featureLabel,
  formatCer,
  formatDays,
  formatEventKind,
  formatFeatureValue,
  formatMinutesTs,
} from './format';
import { sparklinePath } from './sparkline';
import type { SortKey, TicketDetail } from './types';

const SORTABLE: { key: SortKey; label: string }[] = [
  { key: 'er', label: 'ER' },
  { key: 'cer', label: 'CER' },
  { key: 'mer', label: 'MER' },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class Renderer {
  private banner: HTMLElement;
  private table: HTMLElement;
  private detailPane: HTMLElement;
  private status: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly dashboard: Dashboard,
    private readonly author: () => string,
  ) {
    this.banner = el('div', 'banner hidden');
    this.status = el('div', 'status');
    this.table = el('div', 'table-wrap');
    this.detailPane = el('aside', 'detail hidden');
    const main = el('main');
    main.append(this.table, this.detailPane);
    root.append(this.banner, this.status, main);
  }

  renderRows(view: RowsView): void {
    this.banner.classList.toggle('hidden', !view.stale);
    if (view.stale) {
      this.banner.textContent = `service unreachable — showing last known data (${view.error ?? 'network error'})`;
    }
    this.status.textContent = `${view.rows.length} open tickets · sorted by ${view.sort.toUpperCase()} (${view.order})${view.stale ? ' · STALE' : ''}`;

    const table = el('table', 'overview');
    const head = el('tr');
    head.append(el('th', undefined, 'ticket'));
    for (const { key, label } of SORTABLE) {
      const th = el('th', 'sortable', label + (view.sort === key ? (view.order === 'desc' ? ' ↓' : ' ↑') : ''));
      th.addEventListener('click', () => void this.dashboard.setSort(key));
      head.append(th);
    }
    head.append(el('th', undefined, 'last contact'), el('th', undefined, 'level'), el('th', undefined, 'set MER'));
    const thead = el('thead');
    thead.append(head);
    table.append(thead);

    const tbody = el('tbody');
    for (const row of view.rows) {
      const tr = el('tr', row.predicted_crit ? 'flagged' : undefined);
      const idCell = el('td', 'ticket-id', row.ticket_id);
      idCell.addEventListener('click', () => void this.dashboard.openDetail(row.ticket_id));
      const erCell = el('td', `er ${erClass(row.current_er)}`, String(row.current_er));
      const cerCell = el('td', `cer ${cerClass(row.cer)}`, formatCer(row.cer));
      const merCell = el('td', 'mer', row.mer === null ? '—' : String(row.mer));
      if (row.mer_set_by) merCell.title = `set by ${row.mer_set_by}`;
      const contactCell = el('td', undefined, formatDays(row.days_since_last_contact));
      const levelCell = el('td', undefined, `L${row.ownership_level}`);

      const editCell = el('td', 'mer-edit');
      const input = el('input') as HTMLInputElement;
      input.type = 'number';
      input.min = '0';
      input.max = '100';
      input.placeholder = '0–100';
      const button = el('button', undefined, 'save');
      const note = el('span', 'mer-note');
      button.addEventListener('click', () => {
        void this.dashboard
          .submitMer(row.ticket_id, input.value, this.author())
          .then((result) => {
            note.textContent = result.ok ? 'saved' : result.reason;
            note.className = `mer-note ${result.ok ? 'ok' : 'bad'}`;
          });
      });
      editCell.append(input, button, note);

      tr.append(idCell, erCell, cerCell, merCell, contactCell, levelCell, editCell);
      tbody.append(tr);
    }
    table.append(tbody);
    this.table.replaceChildren(table);
  }

  renderDetail(detail: TicketDetail | null): void {
    if (detail === null) {
      this.detailPane.classList.add('hidden');
      this.detailPane.replaceChildren();
      return;
    }
    this.detailPane.classList.remove('hidden');
    const entry = detail.entry;

    const header = el('div', 'detail-head');
    const title = el('h2', undefined, entry.ticket_id);
    const close = el('button', 'close', '×');
    close.addEventListener('click', () => this.dashboard.closeDetail());
    header.append(title, close);

    const summary = el('p', 'detail-summary');
    summary.textContent =
      `ER ${entry.current_er} (${entry.predicted_crit ? 'predicted crit' : 'below threshold'})` +
      ` · CER ${formatCer(entry.cer)} · MER ${entry.mer ?? '—'}` +
      (entry.open ? '' : ' · CLOSED');

    const spark = sparklinePath(detail.er_history);
    const sparkWrap = el('div', 'spark');
    if (spark) {
      const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
      svg.setAttribute('viewBox', `0 0 ${spark.width} ${spark.height}`);
      svg.setAttribute('class', 'sparkline');
      if (spark.path) {
        const path = document.createElementNS('http://www.w3.org/2000/svg', 'path');
        path.setAttribute('d', spark.path);
        svg.append(path);
      }
      const dot = document.createElementNS('http://www.w3.org/2000/svg', 'circle');
      dot.setAttribute('cx', String(spark.lastX));
      dot.setAttribute('cy', String(spark.lastY));
      dot.setAttribute('r', '2');
      svg.append(dot);
      sparkWrap.append(svg);
      sparkWrap.append(el('span', 'spark-label', 'ER over updates'));
    }

    const features = el('table', 'features');
    for (const [name, value] of Object.entries(detail.features)) {
      const tr = el('tr');
      tr.append(el('td', 'fname', featureLabel(name)), el('td', 'fval', formatFeatureValue(value)));
      features.append(tr);
    }

    const merHistory = el('ul', 'mer-history');
    for (const write of detail.mer_history) {
      merHistory.append(
        el('li', undefined, `${write.value} by ${write.author} at ${formatMinutesTs(write.ts)}`),
      );
    }

    const events = el('ol', 'events');
    for (const event of detail.events) {
      const label = `${formatMinutesTs(event.ts)} — ${formatEventKind(event.kind)}` +
        (event.severity !== undefined ? ` (sev ${event.severity})` : '') +
        (event.level !== undefined ? ` (L${event.level})` : '') +
        ` · ${event.actor_id}`;
      events.append(el('li', undefined, label));
    }

    this.detailPane.replaceChildren(
      header,
      summary,
      sparkWrap,
      el('h3', undefined, 'Model features'),
      features,
      el('h3', undefined, 'MER history'),
      detail.mer_history.length ? merHistory : el('p', 'muted', 'no manual assessments yet'),
      el('h3', undefined, `Event history (${detail.events.length})`),
      events,
    );
  }
}
