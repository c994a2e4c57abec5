/**
 * DOM wiring for the single-page diet client.
 *
 * Flow: create a profile and goal, log meals by dish counts or by
 * uploading a detection file (which prefills the picker), and watch the
 * tracker bar and history refresh after every acknowledged write. The
 * page is a pure view over the service API: every displayed number comes
 * from a response field.
 */

import { ApiClient, ApiError, type Dishes } from "./api.js";
import { countsFromDetectionLines, dateRangeBack } from "./model.js";
import {
  renderDishPicker,
  renderError,
  renderGoal,
  renderGoalPrompt,
  renderHistory,
  renderMealAck,
  renderTracker,
} from "./views.js";

const api = new ApiClient("");

let userId: string | null = localStorage.getItem("platterkit-user") ?? null;
let dishes: Dishes = { dishes: [], confidence_threshold: 0.5 };
let pickerCounts: Record<number, number> = {};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(target: string, error: unknown) {
  const code = error instanceof ApiError ? error.code : "client_error";
  const message = error instanceof Error ? error.message : String(error);
  el(target).innerHTML = renderError(code, message);
}

function clearError(target: string) {
  el(target).innerHTML = "";
}

function readPickerCounts(): Record<string, number> {
  const counts: Record<string, number> = {};
  document.querySelectorAll<HTMLInputElement>(".dish-count").forEach((input) => {
    const value = Number(input.value);
    if (value > 0) {
      counts[input.dataset.classId ?? ""] = value;
    }
  });
  return counts;
}

function drawPicker() {
  el("picker").innerHTML = renderDishPicker(dishes.dishes, pickerCounts);
}

async function refreshTracker() {
  if (!userId) {
    el("tracker").innerHTML = renderGoalPrompt();
    return;
  }
  try {
    const tracker = await api.getTracker(userId);
    el("tracker").innerHTML = renderTracker(tracker);
  } catch (error) {
    if (error instanceof ApiError && error.code === "no_goal") {
      el("tracker").innerHTML = renderGoalPrompt();
    } else {
      showError("tracker", error);
    }
  }
}

async function refreshHistory() {
  if (!userId) {
    el("history").innerHTML = "";
    return;
  }
  try {
    const range = dateRangeBack(6);
    const history = await api.getHistory(userId, range.from, range.to);
    el("history").innerHTML = renderHistory(history.days);
  } catch (error) {
    if (error instanceof ApiError && error.code === "no_goal") {
      el("history").innerHTML = "";
    } else {
      showError("history", error);
    }
  }
}

async function refreshAll() {
  await refreshTracker();
  await refreshHistory();
}

async function onCreateProfile(event: Event) {
  event.preventDefault();
  clearError("profile-status");
  try {
    const profile = await api.createUser({
      age: Number(el<HTMLInputElement>("age").value),
      sex: el<HTMLSelectElement>("sex").value,
      height_cm: Number(el<HTMLInputElement>("height").value),
      weight_kg: Number(el<HTMLInputElement>("weight").value),
      activity: el<HTMLSelectElement>("activity").value,
      timezone: el<HTMLInputElement>("timezone").value || "UTC",
    });
    userId = profile.user_id;
    localStorage.setItem("platterkit-user", userId);
    el("profile-status").textContent = `profile saved (${userId})`;
    const goal = await api.setGoal(userId, el<HTMLSelectElement>("variant").value);
    el("goal-status").innerHTML = renderGoal(goal);
    await refreshAll();
  } catch (error) {
    showError("profile-status", error);
  }
}

async function onSetGoal() {
  if (!userId) {
    showError("goal-status", new Error("create a profile first"));
    return;
  }
  clearError("goal-status");
  try {
    const goal = await api.setGoal(userId, el<HTMLSelectElement>("variant").value);
    el("goal-status").innerHTML = renderGoal(goal);
    await refreshAll();
  } catch (error) {
    showError("goal-status", error);
  }
}

async function onUpload(event: Event) {
  clearError("meal-status");
  const input = event.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) {
    return;
  }
  try {
    const text = await file.text();
    pickerCounts = countsFromDetectionLines(text, dishes.confidence_threshold);
    drawPicker();
    el("meal-status").textContent =
      `prefilled from ${file.name} at confidence ≥ ${dishes.confidence_threshold}`;
  } catch (error) {
    // A bad file reports its line number and leaves the picker untouched.
    showError("meal-status", error);
  }
}

async function onLogMeal(event: Event) {
  event.preventDefault();
  clearError("meal-status");
  if (!userId) {
    showError("meal-status", new Error("create a profile first"));
    return;
  }
  try {
    const counts = readPickerCounts();
    const meal = await api.postMeal(userId, { counts });
    el("meal-status").innerHTML = renderMealAck(meal);
    pickerCounts = {};
    drawPicker();
    await refreshAll(); // poll after write: display only acknowledged state
  } catch (error) {
    // Failed posts keep the picker contents so nothing typed is lost.
    showError("meal-status", error);
  }
}

async function boot() {
  try {
    dishes = await api.getDishes();
    drawPicker();
  } catch (error) {
    showError("meal-status", error);
  }
  el<HTMLFormElement>("profile-form").addEventListener("submit", onCreateProfile);
  el<HTMLButtonElement>("goal-button").addEventListener("click", onSetGoal);
  el<HTMLFormElement>("meal-form").addEventListener("submit", onLogMeal);
  el<HTMLInputElement>("detection-file").addEventListener("change", onUpload);
  if (userId) {
    try {
      const user = await api.getUser(userId);
      if (user.goal) {
        el("goal-status").innerHTML = renderGoal(user.goal);
      }
    } catch {
      userId = null;
      localStorage.removeItem("platterkit-user");
    }
  }
  await refreshAll();
}

boot();
