/**
 * Wizard state machine, kept pure so every guard the UI relies on is unit
 * testable: the task menu is always the selected language's menu, the
 * layer step exists only when a bundle was uploaded, and a job request can
 * never violate the server's preconditions the client can check locally
 * (1-3 snapshots, at least one task).
 */

import {
  JobProgress,
  JobRequest,
  LanguageInfo,
  ResultDoc,
  TaskInfo,
  UploadInfo,
} from './api.js';

export type Step = 'language' | 'tasks' | 'upload' | 'layers' | 'running' | 'results';

export const MAX_SNAPSHOTS = 3;

export interface SnapshotUpload {
  label: string;
  upload: UploadInfo;
}

export interface WizardState {
  step: Step;
  languages: LanguageInfo[];
  language: string | null;
  menu: TaskInfo[];
  selectedTasks: string[];
  snapshots: SnapshotUpload[];
  layer: string | null;
  seed: number;
  jobId: string | null;
  publicToken: string | null;
  progress: JobProgress | null;
  result: ResultDoc | null;
  error: string | null;
}

export function initialState(): WizardState {
  return {
    step: 'language',
    languages: [],
    language: null,
    menu: [],
    selectedTasks: [],
    snapshots: [],
    layer: null,
    seed: 13,
    jobId: null,
    publicToken: null,
    progress: null,
    result: null,
    error: null,
  };
}

/** Selecting a language installs its menu and clears now-invalid task picks. */
export function selectLanguage(
  state: WizardState,
  language: string,
  menu: TaskInfo[],
): WizardState {
  if (state.language === language) {
    return { ...state, menu };
  }
  return { ...state, language, menu, selectedTasks: [] };
}

export function toggleTask(state: WizardState, task: string): WizardState {
  if (!state.menu.some((t) => t.name === task)) {
    return state;
  }
  const selected = state.selectedTasks.includes(task)
    ? state.selectedTasks.filter((t) => t !== task)
    : [...state.selectedTasks, task];
  return { ...state, selectedTasks: selected };
}

export function canAddSnapshot(state: WizardState): boolean {
  return state.snapshots.length < MAX_SNAPSHOTS;
}

export function addSnapshot(state: WizardState, upload: UploadInfo, fileName: string): WizardState {
  if (!canAddSnapshot(state)) {
    return state;
  }
  const base = fileName.replace(/\.[^.]+$/, '') || `snapshot${state.snapshots.length + 1}`;
  const taken = new Set(state.snapshots.map((s) => s.label));
  let label = base;
  for (let i = 2; taken.has(label); i++) {
    label = `${base}#${i}`;
  }
  return { ...state, snapshots: [...state.snapshots, { label, upload }] };
}

export function removeSnapshot(state: WizardState, label: string): WizardState {
  return { ...state, snapshots: state.snapshots.filter((s) => s.label !== label) };
}

/** The layer picker exists only when at least one snapshot is a bundle. */
export function needsLayerStep(state: WizardState): boolean {
  return state.snapshots.some((s) => s.upload.kind === 'layer_bundle');
}

/** Layers offered: those present in every uploaded bundle (one layer drives all). */
export function availableLayers(state: WizardState): string[] {
  const bundles = state.snapshots.filter((s) => s.upload.kind === 'layer_bundle');
  if (bundles.length === 0) {
    return [];
  }
  let names = (bundles[0].upload.detected_layers ?? []).map((l) => l.name);
  for (const bundle of bundles.slice(1)) {
    const here = new Set((bundle.upload.detected_layers ?? []).map((l) => l.name));
    names = names.filter((n) => here.has(n));
  }
  return names;
}

export function selectLayer(state: WizardState, layer: string): WizardState {
  return availableLayers(state).includes(layer) ? { ...state, layer } : state;
}

export function canLeaveStep(state: WizardState): boolean {
  switch (state.step) {
    case 'language':
      return state.language !== null;
    case 'tasks':
      return state.selectedTasks.length >= 1;
    case 'upload':
      return state.snapshots.length >= 1 && state.snapshots.length <= MAX_SNAPSHOTS;
    case 'layers':
      return state.layer !== null;
    default:
      return false;
  }
}

const FORWARD: Step[] = ['language', 'tasks', 'upload', 'layers', 'running', 'results'];

function stepAfter(state: WizardState, from: Step): Step {
  let idx = FORWARD.indexOf(from) + 1;
  if (FORWARD[idx] === 'layers' && !needsLayerStep(state)) {
    idx += 1;
  }
  return FORWARD[idx];
}

export function next(state: WizardState): WizardState {
  if (!canLeaveStep(state)) {
    return state;
  }
  return { ...state, step: stepAfter(state, state.step), error: null };
}

export function back(state: WizardState): WizardState {
  let idx = FORWARD.indexOf(state.step) - 1;
  if (FORWARD[idx] === 'layers' && !needsLayerStep(state)) {
    idx -= 1;
  }
  if (idx < 0 || state.step === 'running' || state.step === 'results') {
    return state;
  }
  return { ...state, step: FORWARD[idx], error: null };
}

/**
 * The request sent to POST /api/jobs. Only buildable when every local
 * precondition holds, so the UI cannot submit an invalid job.
 */
export function buildJobRequest(state: WizardState): JobRequest {
  if (state.language === null) {
    throw new Error('no language selected');
  }
  if (state.selectedTasks.length < 1) {
    throw new Error('no tasks selected');
  }
  if (state.snapshots.length < 1 || state.snapshots.length > MAX_SNAPSHOTS) {
    throw new Error(`need 1-${MAX_SNAPSHOTS} snapshots`);
  }
  if (needsLayerStep(state) && state.layer === null) {
    throw new Error('bundle uploads need a layer');
  }
  const request: JobRequest = {
    language: state.language,
    tasks: [...state.selectedTasks],
    snapshots: state.snapshots.map((s) => ({ label: s.label, upload_id: s.upload.id })),
    seed: state.seed,
  };
  if (needsLayerStep(state) && state.layer !== null) {
    request.layer = state.layer;
  }
  return request;
}

// --- routing -----------------------------------------------------------------

export type Route = { view: 'wizard' } | { view: 'results'; token: string };

/** Deep links: /results/<public_token> renders a standalone results page. */
export function parseRoute(pathname: string): Route {
  const match = pathname.match(/^\/results\/([A-Za-z0-9_-]+)\/?$/);
  if (match) {
    return { view: 'results', token: match[1] };
  }
  return { view: 'wizard' };
}

export function shareUrl(origin: string, token: string): string {
  return `${origin}/results/${token}`;
}
