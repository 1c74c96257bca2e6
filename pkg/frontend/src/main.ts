import { ApiClient } from "./api.js";
import { ChatApp } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
// Same-origin by default; override via <meta name="mitra-api" content="...">.
const meta = document.querySelector('meta[name="mitra-api"]');
const baseUrl = meta?.getAttribute("content") ?? "";
new ChatApp(root, new ApiClient(baseUrl));
