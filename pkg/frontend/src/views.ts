/**
 * HTML renderers: plain functions from API data to markup strings.
 *
 * Keeping these DOM-free makes every displayed number directly testable
 * against the API payload it came from.
 */

import type { Dish, Goal, HistoryDay, Meal } from "./api.js";
import { formatNumber, formatPercent, trackerView } from "./model.js";
import type { Tracker } from "./api.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderGoal(goal: Goal): string {
  return (
    `<p class="goal-line">Daily goal <strong>${formatNumber(goal.goal)} kcal</strong>` +
    ` = BMR ${formatNumber(goal.bmr)} × ${goal.multiplier}` +
    ` <span class="muted">(${escapeHtml(goal.formula_variant)})</span></p>`
  );
}

export function renderTracker(tracker: Tracker): string {
  const view = trackerView(tracker);
  const meals = tracker.meals
    .map(
      (meal) =>
        `<li>${escapeHtml(meal.timestamp)}: ${formatNumber(meal.kcal)} kcal` +
        ` <span class="muted">(${escapeHtml(meal.source)})</span></li>`,
    )
    .join("");
  return `
<div class="tracker" data-band="${escapeHtml(view.band)}" data-fraction="${view.fraction}">
  <div class="tracker-numbers">
    <span class="consumed">${view.consumedText}</span> /
    <span class="goal">${view.goalText}</span> kcal
    (<span class="percent">${view.percentText}%</span>) on ${escapeHtml(view.date)}
  </div>
  <div class="bar-track">
    <div class="bar-fill ${view.bandClass}" style="width: ${view.barWidthPercent}%"></div>
  </div>
  <div class="band-label ${view.bandClass}">${escapeHtml(view.band)}</div>
  <ul class="meal-list">${meals}</ul>
</div>`;
}

/** Shown instead of a bar when the service answers 409 no_goal. */
export function renderGoalPrompt(): string {
  return `<div class="tracker-empty">No calorie goal yet. Set one above to start tracking.</div>`;
}

export function renderHistory(days: HistoryDay[]): string {
  const rows = days
    .map(
      (day) => `
  <tr data-band="${escapeHtml(day.band)}">
    <td>${escapeHtml(day.date)}</td>
    <td class="num">${formatNumber(day.consumed)}</td>
    <td class="num">${formatNumber(day.goal)}</td>
    <td><span class="band-chip band-${escapeHtml(day.band)}">${escapeHtml(day.band)}</span></td>
    <td class="num">${day.meals.length}</td>
  </tr>`,
    )
    .join("");
  return `
<table class="history">
  <thead><tr><th>date</th><th>consumed</th><th>goal</th><th>band</th><th>meals</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderDishPicker(dishes: Dish[], counts: Record<number, number>): string {
  const rows = dishes
    .map((dish) => {
      const count = counts[dish.class_id] ?? 0;
      return `
  <tr>
    <td>${escapeHtml(dish.name)} <span class="muted">${formatNumber(dish.kcal)} kcal</span></td>
    <td><input type="number" min="0" step="1" value="${count}"
         data-class-id="${dish.class_id}" class="dish-count"></td>
  </tr>`;
    })
    .join("");
  return `<table class="picker"><tbody>${rows}</tbody></table>`;
}

export function renderMealAck(meal: Meal): string {
  return (
    `<p class="meal-ack">Logged ${formatNumber(meal.kcal)} kcal` +
    ` <span class="muted">(${escapeHtml(meal.source)})</span></p>`
  );
}

export function renderError(code: string, message: string): string {
  return `<div class="error" data-code="${escapeHtml(code)}">${escapeHtml(message)}</div>`;
}
