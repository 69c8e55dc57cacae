// Browser entry point: mount the app on the real document and follow
// the address bar for back/forward navigation.

import { OdesClient } from "./api.js";
import { mount } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const ctx = mount(root, new OdesClient(""), window.sessionStorage);
  window.addEventListener("hashchange", () => void ctx.syncFromLocation());
  void ctx.render(window.location.hash || "#/exams");
}
