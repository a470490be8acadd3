import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const base = new URLSearchParams(location.search).get("api") ?? location.origin;
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
void mountApp(root, new ApiClient(base));
