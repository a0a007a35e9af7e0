/**
 * HTML builders for the wizard. Pure string-producing functions: the
 * controller assigns the result to innerHTML and wires events by id /
 * data attributes, which keeps every view state assertable in tests.
 */

import { JobProgress, ResultDoc } from './api.js';
import { renderChartSvg, renderResultsTable } from './chart.js';
import {
  MAX_SNAPSHOTS,
  Step,
  WizardState,
  availableLayers,
  canAddSnapshot,
  canLeaveStep,
  needsLayerStep,
} from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

const STEP_TITLES: Record<Step, string> = {
  language: '1. Language',
  tasks: '2. Probing tasks',
  upload: '3. Upload embeddings',
  layers: '4. Layer',
  running: 'Probing',
  results: 'Results',
};

function stepIndicator(state: WizardState): string {
  const steps: Step[] = needsLayerStep(state)
    ? ['language', 'tasks', 'upload', 'layers']
    : ['language', 'tasks', 'upload'];
  const items = steps
    .map((s) => {
      const cls = s === state.step ? 'step current' : 'step';
      return `<li class="${cls}">${STEP_TITLES[s]}</li>`;
    })
    .join('');
  return `<ol class="steps">${items}</ol>`;
}

function navButtons(state: WizardState, nextLabel = 'Next'): string {
  const backBtn =
    state.step === 'language'
      ? ''
      : '<button type="button" id="back-btn" class="secondary">Back</button>';
  const disabled = canLeaveStep(state) ? '' : ' disabled';
  return `<div class="nav">${backBtn}<button type="button" id="next-btn"${disabled}>${nextLabel}</button></div>`;
}

function languageStep(state: WizardState): string {
  const options = state.languages
    .map((lang) => {
      const selected = lang.code === state.language ? ' selected' : '';
      return `<option value="${escapeHtml(lang.code)}"${selected}>${escapeHtml(lang.name)}</option>`;
    })
    .join('');
  return `
    <p>Pick the language of the representations you want to inspect.
    The probing task menu depends on it.</p>
    <select id="language-select" size="12">
      <option value="" disabled${state.language ? '' : ' selected'}>— choose a language —</option>
      ${options}
    </select>
    ${navButtons(state)}`;
}

function tasksStep(state: WizardState): string {
  const boxes = state.menu
    .map((task) => {
      const checked = state.selectedTasks.includes(task.name) ? ' checked' : '';
      const pair = task.kind === 'token_pair' ? ' <span class="tag">pair</span>' : '';
      return `
        <label class="task">
          <input type="checkbox" data-task="${escapeHtml(task.name)}"${checked} />
          <strong>${escapeHtml(task.name)}</strong>${pair}
          <small>${escapeHtml(task.description)}</small>
        </label>`;
    })
    .join('');
  return `
    <p>Probing tasks available for <strong>${escapeHtml(state.language ?? '')}</strong>:</p>
    <div class="task-menu">${boxes}</div>
    ${navButtons(state)}`;
}

function uploadStep(state: WizardState, uploadPercent: number | null, uploadError: string | null): string {
  const rows = state.snapshots
    .map(
      (snap) => `
      <li>
        <code>${escapeHtml(snap.label)}</code>
        <span class="tag">${snap.upload.kind === 'layer_bundle' ? 'bundle' : 'table'}</span>
        <span class="dim">dim ${snap.upload.detected_dim}</span>
        <button type="button" class="link" data-remove="${escapeHtml(snap.label)}">remove</button>
      </li>`,
    )
    .join('');
  const bar =
    uploadPercent === null
      ? ''
      : `<progress id="upload-progress" max="100" value="${uploadPercent}"></progress> ${uploadPercent}%`;
  const retry = uploadError
    ? `<p class="error">${escapeHtml(uploadError)} <button type="button" id="retry-upload" class="link">retry</button></p>`
    : '';
  const full = canAddSnapshot(state)
    ? `<input type="file" id="file-input" />`
    : `<p>Up to ${MAX_SNAPSHOTS} epoch snapshots per run.</p>`;
  return `
    <p>Upload a static embeddings file, or an archived bundle of per-layer
    tables. Add up to ${MAX_SNAPSHOTS} epoch snapshots to overlay them.</p>
    ${full}
    ${bar}
    ${retry}
    <ul class="snapshots">${rows}</ul>
    ${navButtons(state, 'Start probing')}`;
}

function layersStep(state: WizardState): string {
  const layers = availableLayers(state)
    .map((name) => {
      const selected = name === state.layer ? ' selected' : '';
      return `<option value="${escapeHtml(name)}"${selected}>${escapeHtml(name)}</option>`;
    })
    .join('');
  return `
    <p>The uploaded model exposes these layers; choose which one to probe.</p>
    <select id="layer-select" size="8">
      <option value="" disabled${state.layer ? '' : ' selected'}>— choose a layer —</option>
      ${layers}
    </select>
    ${navButtons(state, 'Start probing')}`;
}

export function progressView(progress: JobProgress | null): string {
  const fraction = progress?.fraction ?? 0;
  const percent = Math.round(fraction * 100);
  const phase = progress?.state ?? 'queued';
  const task = progress?.current_task
    ? `<p id="current-task">running <strong>${escapeHtml(progress.current_task)}</strong></p>`
    : '';
  return `
    <h2>Probing…</h2>
    <progress id="job-progress" max="100" value="${percent}"></progress>
    <p><span id="job-phase">${escapeHtml(phase)}</span> — ${percent}%</p>
    ${task}`;
}

export function resultsView(result: ResultDoc, share: string | null): string {
  if (result.state === 'failed') {
    return `
      <h2>Probing failed</h2>
      <p class="error" id="failure-cause">${escapeHtml(result.cause ?? 'unknown cause')}</p>`;
  }
  const chart = result.chart;
  if (!chart) {
    return '<p class="error">result carries no chart</p>';
  }
  const link = share
    ? `
      <div class="share">
        <label>Shareable link
          <input id="share-url" readonly value="${escapeHtml(share)}" />
        </label>
        <button type="button" id="copy-share" class="secondary">Copy</button>
      </div>`
    : '';
  return `
    <h2>Probing results — ${escapeHtml(result.language ?? '')}</h2>
    <div class="chart-wrap">${renderChartSvg(chart)}</div>
    ${renderResultsTable(chart)}
    ${link}
    <p><a href="/">Run another probe</a></p>`;
}

export function errorView(message: string): string {
  return `<h2>Something went wrong</h2><p class="error">${escapeHtml(message)}</p>`;
}

export interface ViewOptions {
  uploadPercent?: number | null;
  uploadError?: string | null;
  shareUrl?: string | null;
}

export function wizardView(state: WizardState, opts: ViewOptions = {}): string {
  let body: string;
  switch (state.step) {
    case 'language':
      body = languageStep(state);
      break;
    case 'tasks':
      body = tasksStep(state);
      break;
    case 'upload':
      body = uploadStep(state, opts.uploadPercent ?? null, opts.uploadError ?? null);
      break;
    case 'layers':
      body = layersStep(state);
      break;
    case 'running':
      body = progressView(state.progress);
      break;
    case 'results':
      body = state.result
        ? resultsView(state.result, opts.shareUrl ?? null)
        : errorView('missing result');
      break;
  }
  const banner = state.error ? `<p class="error">${escapeHtml(state.error)}</p>` : '';
  const header =
    state.step === 'running' || state.step === 'results' ? '' : stepIndicator(state);
  return `${header}${banner}${body}`;
}
