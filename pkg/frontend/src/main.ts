import { ApiClient } from './api';
import { Dashboard } from './controller';
import { Renderer } from './render';
import './style.css';

const params = new URLSearchParams(window.location.search);
const pollSeconds = Math.max(2, Number(params.get('poll') ?? '30') || 30);
const baseUrl = params.get('api') ?? '';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const authorInput = document.getElementById('author') as HTMLInputElement | null;
const author = () => authorInput?.value.trim() || 'analyst';

const api = new ApiClient(baseUrl);
let renderer: Renderer;
const dashboard = new Dashboard(api, {
  onRows: (view) => renderer.renderRows(view),
  onDetail: (detail) => renderer.renderDetail(detail),
});
renderer = new Renderer(root, dashboard, author);

void dashboard.refresh();
dashboard.startPolling(pollSeconds * 1000);
