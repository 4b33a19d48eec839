import assert from "node:assert/strict";
import { test } from "node:test";
import { ApiClient, ApiError } from "../src/api.js";
function stubFetch(status, body) {
    const calls = [];
    const impl = async (url, init) => {
        calls.push({ url, init });
        return new Response(JSON.stringify(body), {
            status,
            headers: { "Content-Type": "application/json" },
        });
    };
    return { calls, impl };
}
test("createSession posts JSON and returns the id", async () => {
    const { calls, impl } = stubFetch(201, { session_id: "abc123" });
    const api = new ApiClient("http://svc", impl);
    const sid = await api.createSession();
    assert.equal(sid, "abc123");
    assert.equal(calls[0].url, "http://svc/sessions");
    assert.equal(calls[0].init?.method, "POST");
    assert.equal(calls[0].init?.body, "{}");
});
test("postFrame sends PNG bytes with the right content type", async () => {
    const { calls, impl } = stubFetch(200, { flow: "flow1", chart: null, saved_flag: false });
    const api = new ApiClient("http://svc", impl);
    const blob = new Blob([new Uint8Array([1, 2, 3])], { type: "image/png" });
    await api.postFrame("s1", blob);
    assert.equal(calls[0].url, "http://svc/sessions/s1/frames");
    const headers = calls[0].init?.headers;
    assert.equal(headers["Content-Type"], "image/png");
});
test("postEvent carries the event object", async () => {
    const { calls, impl } = stubFetch(200, { flow: "flow1", chart: null, saved_flag: false });
    const api = new ApiClient("http://svc", impl);
    await api.postEvent("s1", { type: "toggle_pause" });
    assert.deepEqual(JSON.parse(String(calls[0].init?.body)), { type: "toggle_pause" });
});
test("postScan builds multipart form data", async () => {
    const { calls, impl } = stubFetch(200, { flow: "flow2", chart: null, saved_flag: false });
    const api = new ApiClient("http://svc", impl);
    await api.postScan("s1", new Blob([new Uint8Array([9])], { type: "image/png" }));
    const form = calls[0].init?.body;
    assert.equal(form.get("type"), "scan_captured");
    assert.ok(form.get("image") instanceof Blob);
});
test("non-2xx responses raise ApiError with the service code", async () => {
    const { impl } = stubFetch(409, { code: "illegal_transition", message: "nope" });
    const api = new ApiClient("http://svc", impl);
    await assert.rejects(api.postEvent("s1", { type: "save" }), (err) => err instanceof ApiError && err.code === "illegal_transition" && err.status === 409);
});
test("image URL helpers point into the session", () => {
    const api = new ApiClient("http://svc");
    assert.equal(api.snapshotImageUrl("s", "x"), "http://svc/sessions/s/snapshots/x/image");
    assert.equal(api.scanImageUrl("s", "t.png"), "http://svc/sessions/s/images/t.png");
});
