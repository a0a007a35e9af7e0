import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import type { JobProgress } from '../src/api.js';
import { pollProgress } from '../src/poll.js';

function progressSequence(states: JobProgress[]): () => Promise<JobProgress> {
  let i = 0;
  return () => Promise.resolve(states[Math.min(i++, states.length - 1)]);
}

const running = (fraction: number, task: string | null = null): JobProgress => ({
  state: 'probing',
  fraction,
  current_task: task,
});
const done: JobProgress = { state: 'done', fraction: 1, current_task: null };

describe('pollProgress', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('emits every update and resolves on the terminal state', async () => {
    const seen: JobProgress[] = [];
    const handle = pollProgress(
      progressSequence([running(0.3, 'Case'), running(0.9, 'Tense'), done]),
      (p) => seen.push(p),
      { intervalMs: 1000 },
    );
    await vi.advanceTimersByTimeAsync(10_000);
    await expect(handle.done).resolves.toEqual(done);
    expect(seen.map((p) => p.fraction)).toEqual([0.3, 0.9, 1]);
  });

  it('backs off between polls up to the cap', async () => {
    const calls: number[] = [];
    let now = 0;
    vi.setSystemTime(0);
    const fetcher = () => {
      calls.push(vi.getMockedSystemTime()?.getTime() ?? now);
      return Promise.resolve(running(0.5));
    };
    pollProgress(fetcher, () => undefined, {
      intervalMs: 1000,
      backoff: 2,
      maxIntervalMs: 4000,
    });
    await vi.advanceTimersByTimeAsync(20_000);
    const gaps = calls.slice(1).map((t, i) => t - calls[i]);
    expect(gaps.slice(0, 3)).toEqual([2000, 4000, 4000]);
  });

  it('stops polling when cancelled', async () => {
    let count = 0;
    const handle = pollProgress(
      () => {
        count += 1;
        return Promise.resolve(running(0.1));
      },
      () => undefined,
      { intervalMs: 1000 },
    );
    await vi.advanceTimersByTimeAsync(2_500);
    handle.cancel();
    const seen = count;
    await vi.advanceTimersByTimeAsync(60_000);
    expect(count).toBe(seen);
  });

  it('rejects when the progress endpoint errors', async () => {
    const handle = pollProgress(
      () => Promise.reject(new Error('boom')),
      () => undefined,
      { intervalMs: 100 },
    );
    const outcome = expect(handle.done).rejects.toThrow('boom');
    await vi.advanceTimersByTimeAsync(500);
    await outcome;
  });
});
