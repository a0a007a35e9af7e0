/**
 * Polar (radar) chart rendering as a standalone SVG string plus the
 * accompanying results table. One axis per probing task, one overlaid
 * polygon per epoch snapshot, values on a fixed 0-1 radial scale.
 */

import { ChartDoc } from './api.js';

export const SERIES_COLORS = ['#2f6fdb', '#d9542b', '#359d5c', '#9340bf', '#b58a1f'];

export interface Point {
  x: number;
  y: number;
}

/** Axis i of n points straight up, then clockwise, on a circle of radius r. */
export function axisAngle(index: number, count: number): number {
  return -Math.PI / 2 + (2 * Math.PI * index) / count;
}

export function polarPoint(
  value: number,
  index: number,
  count: number,
  cx: number,
  cy: number,
  r: number,
): Point {
  const clamped = Math.max(0, Math.min(1, value));
  const angle = axisAngle(index, count);
  return {
    x: cx + r * clamped * Math.cos(angle),
    y: cy + r * clamped * Math.sin(angle),
  };
}

export function seriesPoints(
  values: number[],
  cx: number,
  cy: number,
  r: number,
): Point[] {
  return values.map((v, i) => polarPoint(v, i, values.length, cx, cy, r));
}

function fmt(x: number): string {
  return x.toFixed(1).replace(/\.0$/, '');
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Full SVG document for a chart payload; safe to assign via innerHTML. */
export function renderChartSvg(chart: ChartDoc, size = 420): string {
  const cx = size / 2;
  const cy = size / 2;
  const r = size * 0.36;
  const n = chart.axes.length;
  const parts: string[] = [];
  parts.push(
    `<svg class="polar-chart" viewBox="0 0 ${size} ${size}" ` +
      `xmlns="http://www.w3.org/2000/svg" role="img" aria-label="probing accuracies">`,
  );

  for (const ring of [0.25, 0.5, 0.75, 1.0]) {
    if (n >= 3) {
      const ringPts = chart.axes
        .map((_, i) => polarPoint(ring, i, n, cx, cy, r))
        .map((p) => `${fmt(p.x)},${fmt(p.y)}`)
        .join(' ');
      parts.push(`<polygon class="grid-ring" points="${ringPts}" />`);
    } else {
      parts.push(`<circle class="grid-ring" cx="${cx}" cy="${cy}" r="${fmt(r * ring)}" />`);
    }
    const labelAt = polarPoint(ring, 0, Math.max(n, 1), cx, cy, r);
    parts.push(
      `<text class="grid-label" x="${fmt(labelAt.x + 4)}" y="${fmt(labelAt.y)}">${ring.toFixed(2)}</text>`,
    );
  }

  chart.axes.forEach((axis, i) => {
    const end = polarPoint(1, i, n, cx, cy, r);
    const labelAt = polarPoint(1.22, i, n, cx, cy, r);
    parts.push(
      `<line class="axis" x1="${cx}" y1="${cy}" x2="${fmt(end.x)}" y2="${fmt(end.y)}" />`,
    );
    parts.push(
      `<text class="axis-label" x="${fmt(labelAt.x)}" y="${fmt(labelAt.y)}" ` +
        `text-anchor="middle">${escapeXml(axis)}</text>`,
    );
  });

  chart.series.forEach((series, s) => {
    const color = SERIES_COLORS[s % SERIES_COLORS.length];
    const pts = seriesPoints(series.values, cx, cy, r);
    const list = pts.map((p) => `${fmt(p.x)},${fmt(p.y)}`).join(' ');
    parts.push(
      `<polygon class="series" data-label="${escapeXml(series.label)}" points="${list}" ` +
        `fill="${color}" fill-opacity="0.12" stroke="${color}" stroke-width="2" />`,
    );
    for (const p of pts) {
      parts.push(
        `<circle class="series-dot" cx="${fmt(p.x)}" cy="${fmt(p.y)}" r="3" fill="${color}" />`,
      );
    }
  });

  chart.series.forEach((series, s) => {
    const color = SERIES_COLORS[s % SERIES_COLORS.length];
    const y = 18 + s * 18;
    parts.push(`<rect x="12" y="${y - 9}" width="12" height="12" fill="${color}" />`);
    parts.push(`<text class="legend" x="30" y="${y + 1}">${escapeXml(series.label)}</text>`);
  });

  parts.push('</svg>');
  return parts.join('');
}

/** Table block: one row per task, accuracy and loss columns per snapshot. */
export function renderResultsTable(chart: ChartDoc): string {
  const head = chart.table.header
    .map((h) => `<th scope="col">${escapeXml(String(h))}</th>`)
    .join('');
  const body = chart.table.rows
    .map((row) => {
      const cells = row
        .map((value, i) =>
          i === 0
            ? `<th scope="row">${escapeXml(String(value))}</th>`
            : `<td>${typeof value === 'number' ? value.toFixed(4) : escapeXml(String(value))}</td>`,
        )
        .join('');
      return `<tr>${cells}</tr>`;
    })
    .join('');
  return `<table class="results-table"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}
