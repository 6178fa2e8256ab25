import { ApiClient } from "./api.js";
import { createApp } from "./app.js";
import { Session } from "./session.js";

declare global {
  interface Window {
    EHRCHAIN_BASE_URL?: string;
  }
}

const meta = document.querySelector('meta[name="gateway-base"]');
const baseUrl =
  window.EHRCHAIN_BASE_URL ??
  meta?.getAttribute("content") ??
  "http://127.0.0.1:8460";

const session = new Session();
const api = new ApiClient(baseUrl, () => session.token);
const root = document.getElementById("app");
if (root !== null) {
  createApp(root, api, session).render();
}
