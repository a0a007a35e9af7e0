/**
 * Wizard controller: owns the state, re-renders on every change, and wires
 * DOM events. `/results/<token>` deep links skip the wizard entirely and
 * render a standalone results page from the public token alone.
 */

import { ApiError, api } from './api.js';
import { PollHandle, pollProgress } from './poll.js';
import {
  WizardState,
  addSnapshot,
  back,
  buildJobRequest,
  initialState,
  next,
  parseRoute,
  removeSnapshot,
  selectLanguage,
  selectLayer,
  shareUrl,
  toggleTask,
} from './state.js';
import { errorView, resultsView, wizardView } from './view.js';
import { uploadWithProgress } from './upload.js';

export class WizardController {
  private state: WizardState = initialState();
  private uploadPercent: number | null = null;
  private uploadError: string | null = null;
  private lastFile: File | null = null;
  private poller: PollHandle | null = null;

  constructor(private root: HTMLElement) {}

  async start(): Promise<void> {
    const route = parseRoute(window.location.pathname);
    if (route.view === 'results') {
      await this.showStandaloneResult(route.token);
      return;
    }
    try {
      this.state.languages = await api.getLanguages();
    } catch (err) {
      this.root.innerHTML = errorView(describe(err));
      return;
    }
    this.render();
  }

  private async showStandaloneResult(token: string): Promise<void> {
    try {
      const result = await api.getResult(token);
      this.root.innerHTML = resultsView(result, shareUrl(window.location.origin, token));
    } catch (err) {
      this.root.innerHTML = errorView(describe(err));
    }
  }

  private render(): void {
    const share = this.state.publicToken
      ? shareUrl(window.location.origin, this.state.publicToken)
      : null;
    this.root.innerHTML = wizardView(this.state, {
      uploadPercent: this.uploadPercent,
      uploadError: this.uploadError,
      shareUrl: share,
    });
    this.bind();
  }

  private set(state: WizardState): void {
    this.state = state;
    this.render();
  }

  private bind(): void {
    const select = this.root.querySelector<HTMLSelectElement>('#language-select');
    select?.addEventListener('change', () => void this.onLanguagePicked(select.value));

    for (const box of this.root.querySelectorAll<HTMLInputElement>('input[data-task]')) {
      box.addEventListener('change', () =>
        this.set(toggleTask(this.state, box.dataset.task ?? '')),
      );
    }

    const file = this.root.querySelector<HTMLInputElement>('#file-input');
    file?.addEventListener('change', () => {
      const picked = file.files?.[0];
      if (picked) {
        void this.onFilePicked(picked);
      }
    });
    this.root
      .querySelector('#retry-upload')
      ?.addEventListener('click', () => this.lastFile && void this.onFilePicked(this.lastFile));
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>('button[data-remove]')) {
      btn.addEventListener('click', () =>
        this.set(removeSnapshot(this.state, btn.dataset.remove ?? '')),
      );
    }

    const layers = this.root.querySelector<HTMLSelectElement>('#layer-select');
    layers?.addEventListener('change', () => this.set(selectLayer(this.state, layers.value)));

    this.root.querySelector('#back-btn')?.addEventListener('click', () => this.set(back(this.state)));
    this.root.querySelector('#next-btn')?.addEventListener('click', () => void this.onNext());

    this.root.querySelector('#copy-share')?.addEventListener('click', () => {
      const input = this.root.querySelector<HTMLInputElement>('#share-url');
      if (input) {
        input.select();
        void navigator.clipboard?.writeText(input.value);
      }
    });
  }

  private async onLanguagePicked(code: string): Promise<void> {
    try {
      const menu = await api.getTasks(code);
      this.set(selectLanguage(this.state, code, menu));
    } catch (err) {
      this.set({ ...this.state, error: describe(err) });
    }
  }

  private async onFilePicked(file: File): Promise<void> {
    this.lastFile = file;
    this.uploadError = null;
    this.uploadPercent = 0;
    this.render();
    try {
      const upload = await uploadWithProgress(file, (pct) => {
        this.uploadPercent = pct;
        const bar = this.root.querySelector<HTMLProgressElement>('#upload-progress');
        if (bar) {
          bar.value = pct;
        }
      });
      this.uploadPercent = null;
      this.set(addSnapshot(this.state, upload, file.name));
    } catch (err) {
      this.uploadPercent = null;
      this.uploadError = describe(err);
      this.render();
    }
  }

  private async onNext(): Promise<void> {
    const advanced = next(this.state);
    if (advanced === this.state) {
      return;
    }
    if (advanced.step !== 'running') {
      this.set(advanced);
      return;
    }
    // leaving the last input step: submit the job, then poll
    try {
      const created = await api.createJob(buildJobRequest(advanced));
      this.set({
        ...advanced,
        jobId: created.job_id,
        publicToken: created.public_token,
        progress: { state: 'queued', fraction: 0, current_task: null },
      });
      this.trackJob(created.job_id, created.public_token);
    } catch (err) {
      this.set({ ...this.state, error: describe(err) });
    }
  }

  private trackJob(jobId: string, token: string): void {
    this.poller?.cancel();
    this.poller = pollProgress(
      () => api.getProgress(jobId),
      (progress) => this.set({ ...this.state, progress }),
    );
    this.poller.done
      .then(async () => {
        const result = await api.getResult(token);
        window.history.pushState({}, '', shareUrl('', token));
        this.set({ ...this.state, step: 'results', result });
      })
      .catch((err) => this.set({ ...this.state, error: describe(err) }));
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return String(err);
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const controller = new WizardController(document.getElementById('app') as HTMLElement);
  void controller.start();
}
