/**
 * Asynchronous file upload with byte-level progress.
 *
 * fetch() cannot report upload progress, so this goes through
 * XMLHttpRequest; large embedding files get a live percentage while the
 * request body streams out.
 */

import { ApiError, UploadInfo } from './api.js';

export function uploadWithProgress(
  file: File,
  onProgress: (percent: number) => void,
  url = '/api/uploads',
): Promise<UploadInfo> {
  return new Promise((resolve, reject) => {
    const xhr = new XMLHttpRequest();
    xhr.open('POST', url);
    xhr.responseType = 'json';

    xhr.upload.onprogress = (event) => {
      if (event.lengthComputable) {
        onProgress(Math.round((event.loaded / event.total) * 100));
      }
    };
    xhr.onerror = () => reject(new ApiError('network_error', 'upload failed', 0));
    xhr.onabort = () => reject(new ApiError('aborted', 'upload cancelled', 0));
    xhr.onload = () => {
      const body = xhr.response as UploadInfo | { error?: string; message?: string } | null;
      if (xhr.status >= 200 && xhr.status < 300) {
        onProgress(100);
        resolve(body as UploadInfo);
      } else {
        const envelope = body as { error?: string; message?: string } | null;
        reject(new ApiError(
          envelope?.error ?? 'http_error',
          envelope?.message ?? `HTTP ${xhr.status}`,
          xhr.status,
        ));
      }
    };

    const form = new FormData();
    form.append('file', file);
    xhr.send(form);
  });
}
