/**
 * Job progress polling: 1 s interval with gentle exponential backoff,
 * cancellable (the wizard cancels when the user navigates away).
 */

import { JobProgress } from './api.js';

export interface PollOptions {
  intervalMs?: number;
  maxIntervalMs?: number;
  backoff?: number;
}

export interface PollHandle {
  done: Promise<JobProgress>;
  cancel(): void;
}

export function pollProgress(
  fetchProgress: () => Promise<JobProgress>,
  onUpdate: (progress: JobProgress) => void,
  options: PollOptions = {},
): PollHandle {
  const base = options.intervalMs ?? 1000;
  const max = options.maxIntervalMs ?? 5000;
  const factor = options.backoff ?? 1.5;

  let cancelled = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const done = new Promise<JobProgress>((resolve, reject) => {
    let interval = base;

    const tick = async () => {
      if (cancelled) {
        return;
      }
      let progress: JobProgress;
      try {
        progress = await fetchProgress();
      } catch (err) {
        reject(err);
        return;
      }
      if (cancelled) {
        return;
      }
      onUpdate(progress);
      if (progress.state === 'done' || progress.state === 'failed') {
        resolve(progress);
        return;
      }
      interval = Math.min(interval * factor, max);
      timer = setTimeout(tick, interval);
    };

    timer = setTimeout(tick, base);
  });

  return {
    done,
    cancel() {
      cancelled = true;
      if (timer !== null) {
        clearTimeout(timer);
      }
    },
  };
}
