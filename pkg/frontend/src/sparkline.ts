import type { ErPoint } from './types';

export interface SparklineGeometry {
  width: number;
  height: number;
  path: string;
  lastX: number;
  lastY: number;
}

/**
 * Map an ER history (0-100) onto an SVG polyline path. X spreads points
 * evenly; Y is ER with 0 at the bottom. A single point renders as a dot
 * at the right edge.
 */
export function sparklinePath(
  points: ErPoint[],
  width = 120,
  height = 28,
): SparklineGeometry | null {
  if (points.length === 0) return null;
  const pad = 2;
  const innerH = height - 2 * pad;
  const y = (er: number) => pad + innerH * (1 - er / 100);
  if (points.length === 1) {
    const only = points[0]!;
    return {
      width,
      height,
      path: '',
      lastX: width - pad,
      lastY: y(only.er),
    };
  }
  const step = (width - 2 * pad) / (points.length - 1);
  const coords = points.map((p, i) => [pad + i * step, y(p.er)] as const);
  const path = coords
    .map(([px, py], i) => `${i === 0 ? 'M' : 'L'}${px.toFixed(1)},${py.toFixed(1)}`)
    .join(' ');
  const last = coords[coords.length - 1]!;
  return { width, height, path, lastX: last[0], lastY: last[1] };
}
