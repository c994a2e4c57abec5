/**
 * Typed client for the diet service HTTP API.
 *
 * Every method maps onto one endpoint and returns the parsed response
 * body unchanged: the UI layer renders these numbers verbatim and never
 * recomputes calories, fractions, bands, or BMR on its own.
 */

export interface Profile {
  user_id: string;
  age: number;
  sex: string;
  height_cm: number;
  weight_kg: number;
  activity: string;
  timezone: string;
}

export interface ProfileInput {
  age: number;
  sex: string;
  height_cm: number;
  weight_kg: number;
  activity: string;
  timezone: string;
  request_id?: string;
}

export interface Goal {
  user_id: string;
  bmr: number;
  multiplier: number;
  goal: number;
  formula_variant: string;
}

export interface Meal {
  user_id: string;
  timestamp: string;
  counts: Record<string, number>;
  kcal: number;
  source: string;
}

export interface Tracker {
  user_id: string;
  date: string;
  consumed: number;
  goal: number;
  fraction: number;
  band: string;
  meals: Meal[];
}

export interface HistoryDay {
  date: string;
  consumed: number;
  goal: number;
  band: string;
  meals: Meal[];
}

export interface History {
  user_id: string;
  days: HistoryDay[];
}

export interface Dish {
  class_id: number;
  name: string;
  kcal: number;
}

export interface Dishes {
  dishes: Dish[];
  confidence_threshold: number;
}

export interface UserView {
  profile: Profile;
  goal: Goal | null;
}

export type MealInput =
  | { counts: Record<string, number>; timestamp?: string; request_id?: string }
  | { detections: string; image_id: string; timestamp?: string; request_id?: string };

/** Domain error surfaced by the service's {"error": {code, message}} envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    const data = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const envelope = data as { error?: { code?: string; message?: string } } | null;
      throw new ApiError(
        response.status,
        envelope?.error?.code ?? "http_error",
        envelope?.error?.message ?? `HTTP ${response.status}`,
      );
    }
    return data as T;
  }

  createUser(profile: ProfileInput): Promise<Profile> {
    return this.request("POST", "/users", profile);
  }

  getUser(userId: string): Promise<UserView> {
    return this.request("GET", `/users/${encodeURIComponent(userId)}`);
  }

  setGoal(userId: string, variant?: string): Promise<Goal> {
    return this.request("PUT", `/users/${encodeURIComponent(userId)}/goal`, variant ? { variant } : {});
  }

  postMeal(userId: string, meal: MealInput): Promise<Meal> {
    return this.request("POST", `/users/${encodeURIComponent(userId)}/meals`, meal);
  }

  getTracker(userId: string, at?: string): Promise<Tracker> {
    const query = at ? `?at=${encodeURIComponent(at)}` : "";
    return this.request("GET", `/users/${encodeURIComponent(userId)}/tracker${query}`);
  }

  getHistory(userId: string, from: string, to: string): Promise<History> {
    return this.request(
      "GET",
      `/users/${encodeURIComponent(userId)}/history?from=${from}&to=${to}`,
    );
  }

  getDishes(): Promise<Dishes> {
    return this.request("GET", "/dishes");
  }
}
