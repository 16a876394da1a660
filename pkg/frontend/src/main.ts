import { ScaffoldApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // same-origin by default; override for a split deployment
  const apiBase = root.dataset.apiBase ?? "";
  const app = new ScaffoldApp(root, { apiBase });
  app.renderStart();
}
