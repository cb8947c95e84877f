// DOM rendering. The view is a pure projection of the view model; every
// render rebuilds from scratch (the grid is tiny, diffing would be noise).

import type { SimCommand } from "./api.js";
import { ConsoleViewModel } from "./model.js";

export interface ViewCallbacks {
  onCommand: (cmd: SimCommand) => void;
  itemsAvailable: () => string[];
}

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) {
    node.textContent = text;
  }
  return node;
}

export function render(root: HTMLElement, vm: ConsoleViewModel, cb: ViewCallbacks): void {
  root.textContent = "";

  if (vm.errorBanner) {
    root.appendChild(el("div", "error-banner", `cannot connect: ${vm.errorBanner}`));
    return;
  }

  const header = el("div", "header");
  header.appendChild(el("span", "fridge-id", vm.fridgeId));
  header.appendChild(el("span", `door door-${vm.doorOpen ? "open" : "closed"}`,
    vm.doorOpen ? "door open" : "door closed"));
  header.appendChild(el("span", "overhead",
    vm.lastActivityS === null ? "no activity yet" : `last activity ${vm.lastActivityS.toFixed(1)}s`));
  root.appendChild(header);

  const grid = el("div", "grid");
  for (const slot of vm.slots()) {
    const cell = el("div", `cell cell-${slot.position} led-${slot.led}`);
    cell.appendChild(el("div", "cell-position", `#${slot.position}`));
    if (slot.item === null) {
      cell.appendChild(el("div", "cell-empty", "empty"));
    } else if (slot.item.state === "placeholder" || slot.item.name === null) {
      cell.appendChild(el("div", "cell-name badge-placeholder", "unknown item"));
    } else {
      cell.appendChild(el("div", "cell-name", slot.item.name));
    }
    grid.appendChild(cell);
  }
  root.appendChild(grid);

  if (vm.pendingItems.length > 0) {
    const pending = el("div", "pending-row");
    pending.appendChild(el("span", "pending-label", "recognized, waiting for a position:"));
    for (const item of vm.pendingItems) {
      pending.appendChild(el("span", "badge-pending", item.name ?? "?"));
    }
    root.appendChild(pending);
  }

  root.appendChild(renderControls(vm, cb));
  root.appendChild(renderPanel("alerts", "alerts", vm.alerts.map(
    (a) => `#${a.position} ${a.name}: ${a.reason}`)));
  root.appendChild(renderPanel("recommendations", "recommendations", vm.recommendations.map(
    (r) => `#${r.position} ${r.name}: ${r.reason}`)));

  const feed = el("div", "feed");
  feed.appendChild(el("div", "panel-title", "event feed"));
  for (const env of [...vm.feed].reverse().slice(0, 30)) {
    const line = env.position === null
      ? `[${env.seq}] ${env.kind}`
      : `[${env.seq}] ${env.kind} @${env.position}${env.item?.name ? ` (${env.item.name})` : ""}`;
    feed.appendChild(el("div", "feed-line", line));
  }
  root.appendChild(feed);
}

function renderControls(vm: ConsoleViewModel, cb: ViewCallbacks): HTMLElement {
  const controls = el("div", "controls");

  const door = el("button", "btn-door", vm.doorOpen ? "close door" : "open door") as HTMLButtonElement;
  door.onclick = () => cb.onCommand({ command: vm.doorOpen ? "close" : "open" });
  controls.appendChild(door);

  const itemSelect = document.createElement("select");
  itemSelect.className = "select-item";
  for (const name of cb.itemsAvailable()) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    itemSelect.appendChild(option);
  }
  controls.appendChild(itemSelect);

  const posSelect = document.createElement("select");
  posSelect.className = "select-position";
  for (const pos of vm.freePositions()) {
    const option = document.createElement("option");
    option.value = String(pos);
    option.textContent = `position ${pos}`;
    posSelect.appendChild(option);
  }
  controls.appendChild(posSelect);

  const place = el("button", "btn-place", "place") as HTMLButtonElement;
  place.disabled = !vm.doorOpen || vm.freePositions().length === 0 || itemSelect.options.length === 0;
  place.onclick = () =>
    cb.onCommand({ command: "place", item: itemSelect.value, position: Number(posSelect.value) });
  controls.appendChild(place);

  const removeSelect = document.createElement("select");
  removeSelect.className = "select-remove";
  for (const pos of vm.occupiedPositions()) {
    const option = document.createElement("option");
    option.value = String(pos);
    option.textContent = `position ${pos}`;
    removeSelect.appendChild(option);
  }
  controls.appendChild(removeSelect);

  const remove = el("button", "btn-remove", "remove") as HTMLButtonElement;
  remove.disabled = !vm.doorOpen || vm.occupiedPositions().length === 0;
  remove.onclick = () => cb.onCommand({ command: "remove", position: Number(removeSelect.value) });
  controls.appendChild(remove);

  return controls;
}

function renderPanel(cls: string, title: string, lines: string[]): HTMLElement {
  const panel = el("div", `panel panel-${cls}`);
  panel.appendChild(el("div", "panel-title", title));
  if (lines.length === 0) {
    panel.appendChild(el("div", "panel-empty", "none"));
  }
  for (const line of lines) {
    panel.appendChild(el("div", "panel-line", line));
  }
  return panel;
}
