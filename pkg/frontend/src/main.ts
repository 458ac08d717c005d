import { ApiClient } from "./api.js";
import { PairStudioApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const app = new PairStudioApp(root, new ApiClient(""));
void app.start();
