/**
 * Pure view-model helpers.
 *
 * These functions format and rearrange what the API returned; they never
 * derive new domain numbers. The one computation here, counting detection
 * lines to prefill the dish picker, is a preview of the meal the user is
 * about to submit, using the confidence threshold the service advertises
 * on /dishes.
 */

import type { Tracker } from "./api.js";

/** Count detection-file lines (class_id confidence cx cy w h) per class,
 * keeping predictions at or above the threshold; this mirrors how the service
 * would count them, so the prefilled picker matches the logged meal. */
export function countsFromDetectionLines(
  text: string,
  confidenceThreshold: number,
): Record<number, number> {
  const counts: Record<number, number> = {};
  const lines = text.split(/\r?\n/);
  lines.forEach((line, index) => {
    const fields = line.trim().split(/\s+/).filter((f) => f.length > 0);
    if (fields.length === 0) {
      return;
    }
    if (fields.length !== 6) {
      throw new Error(`line ${index + 1}: expected 6 fields, got ${fields.length}`);
    }
    const classId = Number(fields[0]);
    const confidence = Number(fields[1]);
    if (!Number.isInteger(classId) || classId < 0) {
      throw new Error(`line ${index + 1}: bad class id ${fields[0]}`);
    }
    if (!Number.isFinite(confidence) || confidence < 0 || confidence > 1) {
      throw new Error(`line ${index + 1}: bad confidence ${fields[1]}`);
    }
    if (confidence >= confidenceThreshold) {
      counts[classId] = (counts[classId] ?? 0) + 1;
    }
  });
  return counts;
}

/** Render a fraction (0..1) as a percentage string, e.g. 0.475 -> "47.5". */
export function formatPercent(fraction: number): string {
  return trimZeros((fraction * 100).toFixed(2));
}

/** Render a kcal amount without inventing precision, e.g. 950 -> "950". */
export function formatNumber(value: number): string {
  return trimZeros(value.toFixed(2));
}

function trimZeros(fixed: string): string {
  return fixed.replace(/\.?0+$/, "");
}

export interface TrackerView {
  date: string;
  consumed: number;
  goal: number;
  fraction: number;
  band: string;
  consumedText: string;
  goalText: string;
  percentText: string;
  /** Bar geometry only: the fill is capped at 100% of the track width. */
  barWidthPercent: number;
  bandClass: string;
  mealCount: number;
}

/** Reshape a tracker response for rendering. All domain numbers pass
 * through unchanged; only presentation strings are added. */
export function trackerView(tracker: Tracker): TrackerView {
  return {
    date: tracker.date,
    consumed: tracker.consumed,
    goal: tracker.goal,
    fraction: tracker.fraction,
    band: tracker.band,
    consumedText: formatNumber(tracker.consumed),
    goalText: formatNumber(tracker.goal),
    percentText: formatPercent(tracker.fraction),
    barWidthPercent: Math.min(tracker.fraction * 100, 100),
    bandClass: `band-${tracker.band}`,
    mealCount: tracker.meals.length,
  };
}

/** Today's date (YYYY-MM-DD) and the date `days` back, for history ranges. */
export function dateRangeBack(days: number, today: Date = new Date()): { from: string; to: string } {
  const to = today.toISOString().slice(0, 10);
  const fromDate = new Date(today.getTime() - days * 24 * 3600 * 1000);
  return { from: fromDate.toISOString().slice(0, 10), to };
}
