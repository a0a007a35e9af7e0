import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiError, api } from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

afterEach(() => vi.unstubAllGlobals());

describe('api client', () => {
  it('fetches the language menu', async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse([{ code: 'de', name: 'German' }]),
    );
    vi.stubGlobal('fetch', fetchMock);
    await expect(api.getLanguages()).resolves.toEqual([{ code: 'de', name: 'German' }]);
    expect(fetchMock).toHaveBeenCalledWith('/api/languages', undefined);
  });

  it('posts job requests as JSON', async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ job_id: 'j1', public_token: 't1' }),
    );
    vi.stubGlobal('fetch', fetchMock);
    const created = await api.createJob({
      language: 'de',
      tasks: ['Case'],
      snapshots: [{ label: 'e1', upload_id: 'u1' }],
      seed: 13,
    });
    expect(created.public_token).toBe('t1');
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe('/api/jobs');
    expect(init.method).toBe('POST');
    expect(JSON.parse(init.body).tasks).toEqual(['Case']);
  });

  it('surfaces the error envelope as ApiError', async () => {
    vi.stubGlobal('fetch', vi.fn().mockResolvedValue(
      jsonResponse({ error: 'too_many_snapshots', message: 'up to 3' }, 400),
    ));
    const err = await api
      .createJob({ language: 'de', tasks: [], snapshots: [] })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe('too_many_snapshots');
    expect((err as ApiError).status).toBe(400);
  });

  it('escapes path parameters', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse([]));
    vi.stubGlobal('fetch', fetchMock);
    await api.getTasks('a/b');
    expect(fetchMock.mock.calls[0][0]).toBe('/api/languages/a%2Fb/tasks');
  });

  it('wraps network failures', async () => {
    vi.stubGlobal('fetch', vi.fn().mockRejectedValue(new TypeError('offline')));
    const err = await api.getLanguages().catch((e: unknown) => e);
    expect((err as ApiError).code).toBe('network_error');
  });
});
