"use strict";
/** Typed client for the scoring service. All numbers displayed anywhere in
 * the workbench originate from these responses; the client never computes
 * a score. The fetch implementation is injectable so tests can record or
 * stub traffic. */
Object.defineProperty(exports, "__esModule", { value: true });
exports.ApiClient = exports.ApiError = void 0;
class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
exports.ApiError = ApiError;
class ApiClient {
    baseUrl;
    fetchImpl;
    constructor(baseUrl, fetchImpl = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchImpl = fetchImpl;
    }
    async request(method, path, body) {
        const init = { method, headers: { "Content-Type": "application/json" } };
        if (body !== undefined) {
            init.body = JSON.stringify(body);
        }
        const resp = await this.fetchImpl(this.baseUrl + path, init);
        const payload = (await resp.json());
        if (!resp.ok) {
            const message = payload.error ?? `HTTP ${resp.status}`;
            throw new ApiError(resp.status, message);
        }
        return payload;
    }
    listItems() {
        return this.request("GET", "/api/items");
    }
    itemDetail(itemId) {
        return this.request("GET", `/api/items/${encodeURIComponent(itemId)}`);
    }
    score(itemId, student) {
        return this.request("POST", `/api/items/${encodeURIComponent(itemId)}/score`, { student });
    }
    feedback(itemId, student, canvas) {
        return this.request("POST", `/api/items/${encodeURIComponent(itemId)}/feedback`, {
            student,
            canvas,
        });
    }
    createSession(itemId, student, tMax) {
        return this.request("POST", "/api/sessions", { item_id: itemId, student, t_max: tMax });
    }
    step(sessionId, student, iteration) {
        return this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/step`, {
            student,
            iteration,
        });
    }
    trace(sessionId) {
        return this.request("GET", `/api/sessions/${encodeURIComponent(sessionId)}/trace`);
    }
}
exports.ApiClient = ApiClient;
