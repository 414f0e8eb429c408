/** Conversions between normalized box coordinates and displayed pixels.
 *
 * Displayed rectangles snap to whole CSS pixels; converting back therefore
 * moves each edge by at most half a pixel, so a round trip stays within one
 * displayed pixel per coordinate.
 */

import type { BoxView } from './types.js';

export interface DisplayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function toDisplayRect(box: BoxView, displayWidth: number, displayHeight: number): DisplayRect {
  const left = Math.round(box.x1 * displayWidth);
  const top = Math.round(box.y1 * displayHeight);
  const right = Math.round(box.x2 * displayWidth);
  const bottom = Math.round(box.y2 * displayHeight);
  return { left, top, width: right - left, height: bottom - top };
}

export function fromDisplayRect(
  rect: DisplayRect,
  displayWidth: number,
  displayHeight: number,
): { x1: number; y1: number; x2: number; y2: number } {
  return {
    x1: rect.left / displayWidth,
    y1: rect.top / displayHeight,
    x2: (rect.left + rect.width) / displayWidth,
    y2: (rect.top + rect.height) / displayHeight,
  };
}

/** Largest round-trip error for one box, measured in displayed pixels. */
export function roundTripError(box: BoxView, displayWidth: number, displayHeight: number): number {
  const back = fromDisplayRect(toDisplayRect(box, displayWidth, displayHeight), displayWidth, displayHeight);
  return Math.max(
    Math.abs(back.x1 - box.x1) * displayWidth,
    Math.abs(back.x2 - box.x2) * displayWidth,
    Math.abs(back.y1 - box.y1) * displayHeight,
    Math.abs(back.y2 - box.y2) * displayHeight,
  );
}

const OVERLAY_COLORS = ['#e4572e', '#17bebb', '#ffc914', '#76b041', '#b33ab4', '#2e86de'];

export function overlayColor(index: number): string {
  return OVERLAY_COLORS[index % OVERLAY_COLORS.length] as string;
}
