// Entry point: read the fridge id, open a session, render on every change.

import { HttpFridgeService } from "./api.js";
import { ConsoleSession } from "./session.js";
import { render } from "./view.js";

function fridgeIdFromPage(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("fridge");
  if (fromUrl) {
    return fromUrl;
  }
  return window.prompt("Fridge ID?") ?? "";
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const fridgeId = fridgeIdFromPage();
  const service = new HttpFridgeService("");
  let items: string[] = [];

  const session = new ConsoleSession(service, fridgeId, {
    onChange: () => {
      void refreshItems();
      render(root, session.vm, callbacks);
    },
  });

  const callbacks = {
    onCommand: (cmd: Parameters<typeof session.act>[0]) => {
      session.act(cmd).catch((err) => {
        session.vm.errorBanner = err instanceof Error ? err.message : String(err);
        render(root, session.vm, callbacks);
        setTimeout(() => {
          session.vm.errorBanner = null;
          render(root, session.vm, callbacks);
        }, 2500);
      });
    },
    itemsAvailable: () => items,
  };

  async function refreshItems(): Promise<void> {
    try {
      items = (await service.simInfo(fridgeId)).items;
    } catch {
      items = [];
    }
  }

  await refreshItems();
  await session.connect();
  render(root, session.vm, callbacks);
}

void start();
