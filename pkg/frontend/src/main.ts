import { initApp } from "./ui.js";

// Same-origin by default; override with <meta name="api-base" content="...">
// when the API is served from another host/port.
function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="api-base"]');
  return meta?.content ?? "";
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) void initApp(root, apiBase()).start();
});
