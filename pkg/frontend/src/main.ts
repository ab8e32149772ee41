import { SessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import { render } from "./dom.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8765";

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const api = new SessionApi(params.get("service") ?? DEFAULT_SERVICE);
  const controller = new SessionController(api);
  const root = document.getElementById("app")!;
  controller.onChange = () => render(controller, root);

  const form = document.getElementById("create-form") as HTMLFormElement;
  form.onsubmit = (ev) => {
    ev.preventDefault();
    const dataset = (document.getElementById("dataset") as HTMLInputElement).value;
    const seed = Number((document.getElementById("seed") as HTMLInputElement).value);
    const kind = (document.getElementById("model-kind") as HTMLSelectElement).value;
    controller
      .create({ dataset, seed, model: { kind } })
      .catch((err) => {
        root.replaceChildren();
        const banner = document.createElement("div");
        banner.className = "banner";
        banner.textContent = String(err);
        root.appendChild(banner);
      });
  };

  render(controller, root);
}

boot();
